#include <cmath>
#include <cstdio>
#include <memory>

#include "cli_common.hpp"
#include "induction_lens/csv.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/svg_report.hpp"
#include "induction_lens/sweep.hpp"

namespace ilens::cli {

namespace fs = std::filesystem;

namespace {

struct SweepArgs {
    SweepManifest manifest;
    fs::path checkpoints_dir;
    std::vector<std::string> checkpoint_files;  // step=path
    std::vector<std::size_t> steps;             // subset of the directory
};

void run(SweepArgs& a, const GlobalOptions& g) {
    SweepManifest& m = a.manifest;
    m.seed = g.seed;
    m.deterministic = g.deterministic;
    if (!a.checkpoints_dir.empty()) {
        for (const auto& c : sweep_checkpoints(a.checkpoints_dir)) {
            if (a.steps.empty() || std::find(a.steps.begin(), a.steps.end(), c.step) != a.steps.end()) {
                m.checkpoints.push_back(c);
            }
        }
    }
    for (const auto& spec : a.checkpoint_files) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--checkpoint expects step=path, got '" + spec + "'");
        m.checkpoints.push_back({std::stoul(spec.substr(0, eq)), spec.substr(eq + 1)});
    }
    const SweepResult r = run_sweep(m);
    std::printf("cells computed %zu, reused %zu, failed %zu\n", r.computed_cells, r.skipped_cells,
                r.failures.size());
    std::printf("%s", read_text(m.out_dir / "summary.txt").c_str());
    for (const auto& f : r.failures) {
        std::fprintf(stderr, "step %zu %s: %s\n", f.step, f.analysis.empty() ? "checkpoint" : f.analysis.c_str(),
                     f.error.c_str());
    }
    if (r.partial()) throw ExitCode{3};
}

struct HeatmapArgs {
    fs::path table;
    fs::path out;
    std::string title;
};

// Relation tables carry a mean column, grouping tables only counts.
void heatmap(const HeatmapArgs& a) {
    const CsvTable t = read_csv(a.table);
    const std::size_t cl = t.column("layer"), ch = t.column("head"), cc = t.column("count");
    const bool has_mean = std::find(t.header.begin(), t.header.end(), "mean") != t.header.end();
    const std::size_t cm = has_mean ? t.column("mean") : cc;
    HeatmapGrid g;
    g.title = a.title.empty() ? a.table.stem().string() : a.title;
    for (const auto& r : t.rows) {
        g.n_layers = std::max<std::size_t>(g.n_layers, std::stoul(r[cl]) + 1);
        g.n_heads = std::max<std::size_t>(g.n_heads, std::stoul(r[ch]) + 1);
    }
    g.values.assign(g.n_layers * g.n_heads, std::nullopt);
    for (const auto& r : t.rows) {
        const double v = parse_number(r[cm]);
        if (std::stoul(r[cc]) == 0 || !std::isfinite(v)) continue;
        g.values[std::stoul(r[cl]) * g.n_heads + std::stoul(r[ch])] = v;
    }
    emit_heatmap(g, a.out);
    std::printf("wrote %s\n", a.out.string().c_str());
}

struct CurvesArgs {
    fs::path sweep;
    std::string metric;
    fs::path out;
    CurveSelection sel;
    long long reference_step = -1;
};

void curves(const CurvesArgs& a) {
    CurveSelection sel = a.sel;
    if (a.reference_step >= 0) sel.reference_step = static_cast<std::size_t>(a.reference_step);
    emit_curves(a.sweep, a.metric, sel, a.out);
    std::printf("wrote %s\n", a.out.string().c_str());
}

}  // namespace

void register_report_commands(CLI::App& app, GlobalOptions& global) {
    auto sa = std::make_shared<SweepArgs>();
    CLI::App* s = app.add_subcommand("sweep", "Run analyses over checkpoints into merged CSVs and figures");
    s->add_option("--checkpoints", sa->checkpoints_dir, "Directory of ckpt_<step>.ilw files");
    s->add_option("--checkpoint", sa->checkpoint_files, "Explicit step=path entries");
    s->add_option("--steps", sa->steps, "Restrict --checkpoints to these steps")->delimiter(',');
    s->add_option("--analyses", sa->manifest.analyses,
                  "relation:<rel>[:reverse], baseline, copying, prefix-match, icl:<task>, loss-reduction, tau-dist")
        ->delimiter(',')
        ->required();
    s->add_option("--out-dir", sa->manifest.out_dir)->required();
    s->add_option("--shots", sa->manifest.shot_grid)->delimiter(',')->capture_default_str();
    s->add_option("--trials", sa->manifest.icl_trials)->capture_default_str();
    s->add_option("--sentences", sa->manifest.dependency_sentences)->capture_default_str();
    s->add_option("--passages", sa->manifest.kg_passages)->capture_default_str();
    s->add_option("--top-k", sa->manifest.top_k_curves, "Heads drawn per curve figure")->capture_default_str();
    s->add_flag("--no-figures{false}", sa->manifest.emit_figures);
    add_analysis_flags(s, sa->manifest.analysis);
    s->callback([sa, &global] { run(*sa, global); });

    CLI::App* rep = app.add_subcommand("report", "Figures from CSV outputs");
    rep->require_subcommand(1);
    auto ha = std::make_shared<HeatmapArgs>();
    CLI::App* h = rep->add_subcommand("heatmap", "Layer x head heatmap of a relation or grouping table");
    h->add_option("--table", ha->table, "CSV with layer,head,mean,count or layer,head,count")
        ->required()
        ->check(CLI::ExistingFile);
    h->add_option("-o,--out", ha->out, "SVG output")->required();
    h->add_option("--title", ha->title);
    h->callback([ha] { heatmap(*ha); });

    auto ca = std::make_shared<CurvesArgs>();
    CLI::App* c = rep->add_subcommand("curves", "Per-head metric curves over training steps");
    c->add_option("--sweep", ca->sweep, "sweep.csv")->required()->check(CLI::ExistingFile);
    c->add_option("--metric", ca->metric)->required();
    c->add_option("-o,--out", ca->out, "SVG output")->required();
    c->add_option("--top-k", ca->sel.top_k, "Keep the k heads with the largest final value (0 = all)")
        ->capture_default_str();
    c->add_option("--reference-step", ca->reference_step, "Step whose values set the line colors (default: last)");
    c->callback([ca] { curves(*ca); });
}

}  // namespace ilens::cli
