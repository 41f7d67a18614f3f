#include <cstdio>
#include <limits>
#include <memory>
#include <set>

#include "cli_common.hpp"
#include "induction_lens/csv.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/icl.hpp"
#include "induction_lens/probe.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/svg_report.hpp"
#include "induction_lens/training_stream.hpp"
#include "induction_lens/weights_io.hpp"

namespace ilens::cli {

namespace fs = std::filesystem;

namespace {

struct AnalyzeArgs {
    fs::path weights;
    fs::path corpus;
    std::size_t n = 200;
    std::string relation = "subj";
    bool reverse = false;
    fs::path out;
    fs::path heatmap;
    AnalysisConfig config;
    // copying / prefix-match
    std::size_t sample = 64;
    std::size_t n_seqs = 100;
    std::size_t seq_len = 32;
};

Relation relation_arg(const std::string& s) {
    const auto r = parse_relation(s);
    if (!r) throw ConfigError("unknown relation '" + s + "'");
    return *r;
}

void emit_table(const RelationIndexTable& table, const AnalyzeArgs& a, const GlobalOptions& g) {
    print_relation_table(table);
    if (!a.out.empty()) write_relation_table(table, a.out, g.seed);
    if (!a.heatmap.empty()) emit_heatmap(heatmap_grid(table), a.heatmap);
}

void analyze_relation(const AnalyzeArgs& a, const GlobalOptions& g, bool reverse) {
    a.config.validate();
    const ModelWeights w = load_weights(a.weights);
    const Relation r = relation_arg(a.relation);
    const auto corpus = corpus_or_generated(a.corpus, r, a.n, g.seed);
    emit_table(reverse ? reverse_table(w, corpus, r, a.config) : relation_index_table(w, corpus, r, a.config), a, g);
}

void analyze_baseline(const AnalyzeArgs& a, const GlobalOptions& g) {
    a.config.validate();
    const ModelWeights w = load_weights(a.weights);
    const auto corpus = a.corpus.empty() ? gen_dependency_corpus(g.seed, a.n) : read_corpus(a.corpus);
    emit_table(baseline_table(w, corpus, a.config), a, g);
}

void analyze_grouping(const AnalyzeArgs& a, const GlobalOptions& g) {
    a.config.validate();
    const ModelWeights w = load_weights(a.weights);
    const Relation r = relation_arg(a.relation);
    const auto corpus = corpus_or_generated(a.corpus, r, a.n, g.seed);
    const HeadOccurrenceTable t = head_grouping(w, corpus, r, a.config);
    std::printf("%s: %zu triplets, %zu assigned\n", t.label.c_str(), t.n_triplets, t.total());
    for (std::size_t l = 0; l < t.n_layers; ++l) {
        std::printf("L%-3zu", l);
        for (std::size_t h = 0; h < t.n_heads; ++h) std::printf(" %6zu", t.at(l, h));
        std::printf("\n");
    }
    if (!a.out.empty()) {
        CsvTable csv;
        csv.comments = {schema_comment("head-grouping", 1, g.seed), "label=" + t.label};
        csv.header = {"layer", "head", "count"};
        for (std::size_t l = 0; l < t.n_layers; ++l) {
            for (std::size_t h = 0; h < t.n_heads; ++h) {
                csv.rows.push_back({std::to_string(l), std::to_string(h), std::to_string(t.at(l, h))});
            }
        }
        write_csv(a.out, csv);
    }
    if (!a.heatmap.empty()) emit_heatmap(heatmap_grid(t), a.heatmap);
}

void analyze_tau(const AnalyzeArgs& a, const GlobalOptions& g) {
    a.config.validate();
    const ModelWeights w = load_weights(a.weights);
    const auto corpus = a.corpus.empty() ? gen_dependency_corpus(g.seed, a.n) : read_corpus(a.corpus);
    const RatioHistogram hist = tau_ratio_distribution(w, corpus, a.config);
    std::printf("samples %zu, fraction above tau=%g: %s, overflow (>= 10): %zu\n", hist.samples(), a.config.tau,
                format_number(hist.fraction_above(a.config.tau)).c_str(), hist.overflow);
    if (!a.out.empty()) {
        CsvTable csv;
        csv.comments = {schema_comment("tau-histogram", 1, g.seed),
                        "fraction_above_tau=" + format_number(hist.fraction_above(a.config.tau))};
        csv.header = {"bin_lo", "bin_hi", "count"};
        for (std::size_t b = 0; b < RatioHistogram::kBins; ++b) {
            csv.rows.push_back({format_number(static_cast<double>(b) * RatioHistogram::kBinWidth),
                                format_number(static_cast<double>(b + 1) * RatioHistogram::kBinWidth),
                                std::to_string(hist.bins[b])});
        }
        csv.rows.push_back({format_number(RatioHistogram::kBins * RatioHistogram::kBinWidth), "inf",
                            std::to_string(hist.overflow)});
        write_csv(a.out, csv);
    }
}

template <class Score>
void per_head(const AnalyzeArgs& a, const GlobalOptions& g, const char* name, Score score) {
    const ModelWeights w = load_weights(a.weights);
    const ModelConfig& cfg = w.config();
    CsvTable csv;
    csv.comments = {schema_comment(name, 1, g.seed)};
    csv.header = {"layer", "head", "value"};
    std::printf("%s (rows: layers, columns: heads)\n", name);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        std::printf("L%-3zu", l);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            const std::optional<double> v = score(w, l, h);
            const double x = v.value_or(std::numeric_limits<double>::quiet_NaN());
            std::printf(" %8s", format_number(x).substr(0, 8).c_str());
            csv.rows.push_back({std::to_string(l), std::to_string(h), format_number(x)});
        }
        std::printf("\n");
    }
    if (!a.out.empty()) write_csv(a.out, csv);
}

void analyze_copying(const AnalyzeArgs& a, const GlobalOptions& g) {
    const auto corpus = a.corpus.empty() ? gen_dependency_corpus(g.seed, a.n) : read_corpus(a.corpus);
    std::set<TokenId> distinct;
    for (const auto& s : corpus) distinct.insert(s.tokens.begin(), s.tokens.end());
    std::vector<TokenId> sample(distinct.begin(), distinct.end());
    Rng rng(derive_seed(g.seed, "copying-sample"));
    std::shuffle(sample.begin(), sample.end(), rng);
    if (sample.size() > a.sample) sample.resize(a.sample);
    std::sort(sample.begin(), sample.end());
    per_head(a, g, "copying", [&](const ModelWeights& w, std::size_t l, std::size_t h) {
        return copying_score(w, l, h, sample);
    });
}

void analyze_prefix(const AnalyzeArgs& a, const GlobalOptions& g) {
    PrefixMatchOptions po;
    po.n_seqs = a.n_seqs;
    po.seq_len = a.seq_len;
    po.seed = g.seed;
    po.first_token = 1;
    per_head(a, g, "prefix-match", [&](const ModelWeights& w, std::size_t l, std::size_t h) {
        return std::optional<double>(prefix_matching_score(w, l, h, po));
    });
}

IclTaskKind task_arg(const std::string& s) {
    const auto k = parse_task_kind(s);
    if (!k) throw ConfigError("unknown task '" + s + "' (binary, four-class, nine-class, relation-justification)");
    return *k;
}

struct IclArgs {
    fs::path weights;
    std::string task = "binary";
    std::vector<std::size_t> shots = {0, 1, 2, 4, 8, 12, 16, 20};
    std::size_t trials = 200;
    std::string metric = "format";
    double threshold = 0.8;
    std::size_t cap = 20;
    fs::path out;
    LossReductionSpec spec;
    std::size_t texts = 64;
    std::size_t text_len = 128;
};

void icl_eval(const IclArgs& a, const GlobalOptions& g) {
    const ModelWeights w = load_weights(a.weights);
    const IclTaskKind kind = task_arg(a.task);
    const IclResult r = evaluate_task(w, kind, default_pools(kind), a.shots, a.trials, g.seed, 0, g.deterministic);
    CsvTable csv;
    csv.comments = {schema_comment("icl", 1, g.seed)};
    csv.header = {"step", "task", "shots", "format_acc", "pred_acc", "n"};
    std::printf("%-6s %10s %10s\n", "shots", "format", "pred");
    for (const auto& ps : r.per_shots) {
        std::printf("%-6zu %10.4f %10.4f\n", ps.shots, ps.scores.format_acc, ps.scores.pred_acc);
        csv.rows.push_back({"0", std::string(to_string(kind)), std::to_string(ps.shots),
                            format_number(ps.scores.format_acc), format_number(ps.scores.pred_acc),
                            std::to_string(ps.scores.n)});
    }
    if (!a.out.empty()) write_csv(a.out, csv);
}

void icl_min_shots(const IclArgs& a, const GlobalOptions& g) {
    const ModelWeights w = load_weights(a.weights);
    const IclTaskKind kind = task_arg(a.task);
    const TaskPools pools = default_pools(kind);
    std::size_t n = 0;
    if (a.metric == "format") {
        n = min_shots_for_format(w, kind, pools, a.trials, g.seed, a.threshold, a.cap, g.deterministic);
    } else if (a.metric == "pred") {
        std::vector<std::size_t> grid;
        for (std::size_t s = 1; s <= a.cap; ++s) grid.push_back(s);
        const IclResult r = evaluate_task(w, kind, pools, grid, a.trials, g.seed, 0, g.deterministic);
        std::vector<std::pair<std::size_t, double>> acc;
        for (const auto& ps : r.per_shots) acc.emplace_back(ps.shots, ps.scores.pred_acc);
        n = min_shots(acc, a.threshold, a.cap);
    } else {
        throw ConfigError("--metric must be format or pred");
    }
    std::printf("%s min shots (%s > %g): %zu\n", std::string(to_string(kind)).c_str(), a.metric.c_str(),
                a.threshold, n);
}

void icl_loss_reduction(const IclArgs& a, const GlobalOptions& g) {
    a.spec.validate();
    const ModelWeights w = load_weights(a.weights);
    StreamConfig sc;
    sc.seed = g.seed;
    const std::size_t need = a.spec.i + a.spec.j + 1;
    const std::size_t len = std::min(a.text_len, w.config().max_seq_len);
    if (len < need) throw ConfigError("loss-reduction: windows need " + std::to_string(need) + " tokens");
    const auto texts = TrainingStream(sc).held_out_documents(a.texts, need, len);
    const LossReductionResult r = loss_reduction(w, texts, a.spec);
    std::printf("loss reduction (i=%zu, j=%zu): %s over %zu texts (%zu skipped)\n", a.spec.i, a.spec.j,
                format_number(r.value).c_str(), r.used, r.skipped);
}

struct ProbeArgs {
    fs::path weights;
    fs::path corpus;
    fs::path probe;
    std::size_t n = 500;
    ProbeOptions opts;
};

void probe_train(const ProbeArgs& a, const GlobalOptions& g) {
    const ModelWeights w = load_weights(a.weights);
    const auto corpus = a.corpus.empty() ? gen_dependency_corpus(g.seed, a.n) : read_corpus(a.corpus);
    const ProbeTrainResult r = train_probe(w, corpus, a.opts);
    save_probe(r.probe, a.probe);
    std::printf("loss %.4f -> %.4f over %zu epochs; train accuracy %.4f; saved %s\n", r.loss_per_epoch.front(),
                r.loss_per_epoch.back(), r.loss_per_epoch.size(), eval_probe(r.probe, w, corpus, a.opts),
                a.probe.string().c_str());
}

void probe_eval(const ProbeArgs& a, const GlobalOptions& g) {
    const ModelWeights w = load_weights(a.weights);
    const ProbeModel p = load_probe(a.probe);
    const auto corpus = a.corpus.empty() ? gen_dependency_corpus(derive_seed(g.seed, "probe-eval"), a.n)
                                         : read_corpus(a.corpus);
    std::vector<ProbeSentence> ps;
    for (const auto& s : corpus) ps.push_back(probe_sentence(s));
    std::printf("accuracy %s (chance %s)\n", format_number(eval_probe(p, w, ps, a.opts)).c_str(),
                format_number(probe_chance_rate(ps)).c_str());
}

}  // namespace

void register_analyze_commands(CLI::App& app, GlobalOptions& global) {
    CLI::App* an = app.add_subcommand("analyze", "Per-head analyses of one checkpoint");
    an->require_subcommand(1);
    auto add = [&](const char* name, const char* help, bool relation, bool corpus,
                   void (*run)(const AnalyzeArgs&, const GlobalOptions&)) {
        auto a = std::make_shared<AnalyzeArgs>();
        CLI::App* s = an->add_subcommand(name, help);
        s->add_option("--weights", a->weights, "Checkpoint (.ilw)")->required()->check(CLI::ExistingFile);
        s->add_option("-o,--out", a->out, "CSV output");
        if (corpus) {
            s->add_option("--corpus", a->corpus, "Annotated JSONL corpus; generated from --seed when absent");
            s->add_option("-n,--count", a->n, "Sentences to generate")->capture_default_str();
            add_analysis_flags(s, a->config);
        }
        if (relation) s->add_option("--relation", a->relation, "subj, obj, mod, Part-of, ...")->capture_default_str();
        if (corpus && std::string(name) != "tau-dist") s->add_option("--heatmap", a->heatmap, "SVG heatmap output");
        if (std::string(name) == "copying") s->add_option("--sample", a->sample)->capture_default_str();
        if (std::string(name) == "prefix-match") {
            s->add_option("--seqs", a->n_seqs)->capture_default_str();
            s->add_option("--seq-len", a->seq_len)->capture_default_str();
        }
        s->callback([a, run, &global] { run(*a, global); });
    };
    add("relation-index", "Mean relation index per head", true, true,
        [](const AnalyzeArgs& a, const GlobalOptions& g) { analyze_relation(a, g, false); });
    add("reverse", "Relation index on reversed triplets", true, true,
        [](const AnalyzeArgs& a, const GlobalOptions& g) { analyze_relation(a, g, true); });
    add("baseline", "Relation index with tails moved to a fixed position", false, true, analyze_baseline);
    add("grouping", "Per-triplet best head occurrences", true, true, analyze_grouping);
    add("tau-dist", "Histogram of attention argmax / runner-up ratios", false, true, analyze_tau);
    add("copying", "OV copying score per head", false, false, analyze_copying);
    add("prefix-match", "Prefix-matching score per head", false, false, analyze_prefix);

    CLI::App* icl = app.add_subcommand("icl", "Few-shot and loss-reduction evaluation");
    icl->require_subcommand(1);
    {
        auto a = std::make_shared<IclArgs>();
        CLI::App* s = icl->add_subcommand("eval", "Format and prediction accuracy over a shot grid");
        s->add_option("--weights", a->weights)->required()->check(CLI::ExistingFile);
        s->add_option("--task", a->task)->capture_default_str();
        s->add_option("--shots", a->shots)->capture_default_str()->delimiter(',');
        s->add_option("--trials", a->trials)->capture_default_str();
        s->add_option("-o,--out", a->out, "CSV output");
        s->callback([a, &global] { icl_eval(*a, global); });
    }
    {
        auto a = std::make_shared<IclArgs>();
        CLI::App* s = icl->add_subcommand("min-shots", "Smallest shot count whose accuracy exceeds a threshold");
        s->add_option("--weights", a->weights)->required()->check(CLI::ExistingFile);
        s->add_option("--task", a->task)->capture_default_str();
        s->add_option("--metric", a->metric, "format or pred")->capture_default_str();
        s->add_option("--threshold", a->threshold)->capture_default_str();
        s->add_option("--cap", a->cap)->capture_default_str();
        s->add_option("--trials", a->trials)->capture_default_str();
        s->callback([a, &global] { icl_min_shots(*a, global); });
    }
    {
        auto a = std::make_shared<IclArgs>();
        a->spec = {16, 48};
        CLI::App* s = icl->add_subcommand("loss-reduction", "Later-window minus early-window token loss");
        s->add_option("--weights", a->weights)->required()->check(CLI::ExistingFile);
        s->add_option("-i", a->spec.i, "Early window length")->capture_default_str();
        s->add_option("-j", a->spec.j, "Later window start")->capture_default_str();
        s->add_option("--texts", a->texts)->capture_default_str();
        s->add_option("--len", a->text_len)->capture_default_str();
        s->callback([a, &global] { icl_loss_reduction(*a, global); });
    }

    CLI::App* pr = app.add_subcommand("probe", "Dependency-head probe on attention features");
    pr->require_subcommand(1);
    for (const bool training : {true, false}) {
        auto a = std::make_shared<ProbeArgs>();
        CLI::App* s = pr->add_subcommand(training ? "train" : "eval", training ? "Fit a probe" : "Score a probe");
        s->add_option("--weights", a->weights)->required()->check(CLI::ExistingFile);
        s->add_option("--probe", a->probe, "Probe parameter file")->required();
        s->add_option("--corpus", a->corpus, "Annotated JSONL corpus; generated from --seed when absent");
        s->add_option("-n,--count", a->n)->capture_default_str();
        s->add_flag("--no-bos{false}", a->opts.prepend_bos);
        if (training) {
            s->add_option("--epochs", a->opts.epochs)->capture_default_str();
            s->add_option("--lr", a->opts.lr)->capture_default_str();
            s->callback([a, &global] { probe_train(*a, global); });
        } else {
            s->callback([a, &global] { probe_eval(*a, global); });
        }
    }
}

}  // namespace ilens::cli
