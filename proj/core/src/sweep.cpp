#include "induction_lens/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "induction_lens/csv.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/parallel.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/svg_report.hpp"
#include "induction_lens/trainer.hpp"
#include "induction_lens/training_stream.hpp"
#include "induction_lens/weights_io.hpp"

namespace ilens {

namespace fs = std::filesystem;

namespace {

enum class CellKind { head, icl, scalar };

struct ParsedAnalysis {
    std::string name;
    CellKind kind = CellKind::head;
    std::optional<Relation> relation;
    bool reversed = false;
    std::optional<IclTaskKind> task;
};

std::vector<std::string> split_colon(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t at = s.find(':', start);
        parts.push_back(s.substr(start, at - start));
        if (at == std::string::npos) break;
        start = at + 1;
    }
    return parts;
}

ParsedAnalysis parse_analysis(const std::string& name) {
    ParsedAnalysis a;
    a.name = name;
    const auto parts = split_colon(name);
    if (parts[0] == "relation" && (parts.size() == 2 || (parts.size() == 3 && parts[2] == "reverse"))) {
        a.relation = parse_relation(parts[1]);
        if (!a.relation) throw ConfigError("unknown relation in analysis '" + name + "'");
        a.reversed = parts.size() == 3;
        return a;
    }
    if (parts.size() == 1 && (name == "baseline" || name == "copying" || name == "prefix-match")) return a;
    if (parts[0] == "icl" && parts.size() == 2) {
        a.kind = CellKind::icl;
        a.task = parse_task_kind(parts[1]);
        if (!a.task) throw ConfigError("unknown ICL task in analysis '" + name + "'");
        return a;
    }
    if (parts.size() == 1 && (name == "loss-reduction" || name == "tau-dist")) {
        a.kind = CellKind::scalar;
        return a;
    }
    throw ConfigError("unknown analysis '" + name + "'");
}

std::string file_stem(const std::string& analysis) {
    std::string s = analysis;
    std::replace(s.begin(), s.end(), ':', '_');
    return s;
}

std::string clean_field(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
    }
    return s;
}

const std::vector<std::string> kHeadHeader = {"step", "layer", "head", "metric", "value"};
const std::vector<std::string> kIclHeader = {"step", "task", "shots", "format_acc", "pred_acc", "n"};
const std::vector<std::string> kScalarHeader = {"step", "metric", "value"};

// Inputs shared by all cells; every one is a pure function of the manifest seed.
struct SweepInputs {
    std::vector<AnnotatedSentence> dependency;
    std::vector<AnnotatedSentence> knowledge;
    std::vector<TokenId> copy_sample;
};

SweepInputs build_inputs(const SweepManifest& m, const std::vector<ParsedAnalysis>& analyses) {
    SweepInputs in;
    bool need_dep = false, need_kg = false;
    for (const auto& a : analyses) {
        if (a.relation) {
            const auto& dep = dependency_relations();
            (std::find(dep.begin(), dep.end(), *a.relation) != dep.end() ? need_dep : need_kg) = true;
        }
        if (a.name == "baseline" || a.name == "copying" || a.name == "tau-dist") need_dep = true;
    }
    if (need_dep) in.dependency = gen_dependency_corpus(derive_seed(m.seed, "sweep-dependency"), m.dependency_sentences);
    if (need_kg) in.knowledge = gen_kg_corpus(derive_seed(m.seed, "sweep-knowledge"), m.kg_passages);
    if (need_dep) {
        std::set<TokenId> distinct;
        for (const auto& s : in.dependency) distinct.insert(s.tokens.begin(), s.tokens.end());
        std::vector<TokenId> pool(distinct.begin(), distinct.end());
        Rng rng(derive_seed(m.seed, "sweep-copying"));
        std::shuffle(pool.begin(), pool.end(), rng);
        if (pool.size() > m.copying_sample) pool.resize(m.copying_sample);
        std::sort(pool.begin(), pool.end());
        in.copy_sample = std::move(pool);
    }
    return in;
}

CsvTable run_cell(const SweepManifest& m, const ParsedAnalysis& a, const SweepInputs& in, const ModelWeights& w,
                  std::size_t step, bool inner_deterministic) {
    CsvTable t;
    t.comments.push_back(schema_comment("sweep-cell", 1, m.seed));
    const std::string s = std::to_string(step);
    const ModelConfig& cfg = w.config();
    auto head_rows = [&](const std::function<std::optional<double>(std::size_t, std::size_t)>& value) {
        t.header = kHeadHeader;
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            for (std::size_t h = 0; h < cfg.n_heads; ++h) {
                const auto v = value(l, h);
                t.rows.push_back({s, std::to_string(l), std::to_string(h), a.name,
                                  format_number(v.value_or(std::numeric_limits<double>::quiet_NaN()))});
            }
        }
    };

    if (a.relation) {
        const auto& dep = dependency_relations();
        const bool is_dep = std::find(dep.begin(), dep.end(), *a.relation) != dep.end();
        const auto table = relation_index_table(w, is_dep ? in.dependency : in.knowledge, *a.relation, m.analysis,
                                                a.reversed);
        head_rows([&](std::size_t l, std::size_t h) { return table.mean(l, h); });
    } else if (a.name == "baseline") {
        const auto table = baseline_table(w, in.dependency, m.analysis);
        head_rows([&](std::size_t l, std::size_t h) { return table.mean(l, h); });
    } else if (a.name == "copying") {
        head_rows([&](std::size_t l, std::size_t h) { return copying_score(w, l, h, in.copy_sample); });
    } else if (a.name == "prefix-match") {
        PrefixMatchOptions po;
        po.n_seqs = m.prefix_seqs;
        po.seq_len = std::min(m.prefix_seq_len, cfg.max_seq_len / 2);
        po.seed = derive_seed(m.seed, "sweep-prefix-match");
        po.first_token = 1;
        head_rows([&](std::size_t l, std::size_t h) -> std::optional<double> {
            return prefix_matching_score(w, l, h, po);
        });
    } else if (a.kind == CellKind::icl) {
        t.header = kIclHeader;
        const auto r = evaluate_task(w, *a.task, default_pools(*a.task), m.shot_grid, m.icl_trials,
                                     derive_seed(m.seed, "sweep-icl"), step, inner_deterministic);
        for (const auto& ps : r.per_shots) {
            t.rows.push_back({s, std::string(to_string(*a.task)), std::to_string(ps.shots),
                              format_number(ps.scores.format_acc), format_number(ps.scores.pred_acc),
                              std::to_string(ps.scores.n)});
        }
    } else if (a.name == "loss-reduction") {
        t.header = kScalarHeader;
        StreamConfig sc;
        sc.seed = m.seed;
        const std::size_t need = m.loss_reduction.i + m.loss_reduction.j + 1;
        const std::size_t len = std::min(m.loss_text_len, cfg.max_seq_len);
        if (len < need) throw ConfigError("loss-reduction: windows need " + std::to_string(need) + " tokens");
        const auto texts = TrainingStream(sc).held_out_documents(m.loss_texts, need, len);
        const auto r = loss_reduction(w, texts, m.loss_reduction);
        t.rows.push_back({s, a.name, format_number(r.value)});
    } else if (a.name == "tau-dist") {
        t.header = kScalarHeader;
        const auto hist = tau_ratio_distribution(w, in.dependency, m.analysis);
        t.rows.push_back({s, "tau-dist:fraction_above", format_number(hist.fraction_above(m.analysis.tau))});
        t.rows.push_back({s, "tau-dist:samples", std::to_string(hist.samples())});
    }
    return t;
}

void append_rows(CsvTable& merged, const fs::path& cell_file) {
    const CsvTable t = read_csv(cell_file);
    if (t.header != merged.header) throw CorruptionError(cell_file.string() + ": unexpected columns");
    merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
}

HeatmapGrid grid_from_rows(const CsvTable& sweep, const std::string& metric, std::size_t step) {
    const std::size_t cs = sweep.column("step"), cl = sweep.column("layer"), ch = sweep.column("head"),
                      cm = sweep.column("metric"), cv = sweep.column("value");
    std::size_t layers = 0, heads = 0;
    std::map<std::pair<std::size_t, std::size_t>, double> values;
    for (const auto& r : sweep.rows) {
        if (r[cm] != metric || std::stoul(r[cs]) != step) continue;
        const std::size_t l = std::stoul(r[cl]), h = std::stoul(r[ch]);
        layers = std::max(layers, l + 1);
        heads = std::max(heads, h + 1);
        values[{l, h}] = parse_number(r[cv]);
    }
    HeatmapGrid g;
    g.title = metric + " at step " + std::to_string(step);
    g.n_layers = layers;
    g.n_heads = heads;
    g.values.assign(layers * heads, std::nullopt);
    for (const auto& [key, v] : values) {
        if (std::isfinite(v)) g.values[key.first * heads + key.second] = v;
    }
    return g;
}

}  // namespace

void SweepManifest::validate() const {
    if (checkpoints.empty()) throw ConfigError("sweep: no checkpoints");
    if (analyses.empty()) throw ConfigError("sweep: no analyses");
    if (out_dir.empty()) throw ConfigError("sweep: output directory not set");
    std::set<std::size_t> steps;
    for (const auto& c : checkpoints) {
        if (!steps.insert(c.step).second) throw ConfigError("sweep: duplicate step " + std::to_string(c.step));
    }
    std::set<std::string> seen;
    bool any_icl = false;
    for (const auto& name : analyses) {
        if (!seen.insert(name).second) throw ConfigError("sweep: duplicate analysis '" + name + "'");
        any_icl = parse_analysis(name).kind == CellKind::icl || any_icl;
    }
    if (any_icl && (shot_grid.empty() || icl_trials == 0)) throw ConfigError("sweep: empty shot grid or zero trials");
    analysis.validate();
    loss_reduction.validate();
    if (loss_texts == 0 || loss_text_len < loss_reduction.i + loss_reduction.j + 1) {
        throw ConfigError("sweep: loss-reduction texts shorter than both windows");
    }
    if (copying_sample < 16) throw ConfigError("sweep: copying sample needs at least 16 tokens");
    if (prefix_seqs == 0 || prefix_seq_len < 2) throw ConfigError("sweep: bad prefix-match sizes");
}

std::vector<SweepCheckpoint> sweep_checkpoints(const fs::path& dir) {
    std::vector<SweepCheckpoint> out;
    for (const auto& c : list_checkpoints(dir)) out.push_back({c.step, c.weights_path});
    return out;
}

bool is_head_analysis(const std::string& analysis) { return parse_analysis(analysis).kind == CellKind::head; }

SweepResult run_sweep(const SweepManifest& manifest) {
    manifest.validate();
    std::vector<ParsedAnalysis> analyses;
    for (const auto& name : manifest.analyses) analyses.push_back(parse_analysis(name));

    std::vector<SweepCheckpoint> checkpoints = manifest.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end(),
              [](const SweepCheckpoint& a, const SweepCheckpoint& b) { return a.step < b.step; });

    const fs::path out = manifest.out_dir;
    fs::create_directories(out / "cells");
    SweepResult result;

    auto cell_path = [&](std::size_t step, const ParsedAnalysis& a) {
        return out / "cells" / std::to_string(step) / (file_stem(a.name) + ".csv");
    };

    // Load every checkpoint that still has pending cells.
    std::vector<std::optional<ModelWeights>> weights(checkpoints.size());
    struct Job {
        std::size_t ckpt;
        std::size_t analysis;
    };
    std::vector<Job> jobs;
    std::vector<bool> load_failed(checkpoints.size(), false);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        std::vector<std::size_t> pending;
        for (std::size_t a = 0; a < analyses.size(); ++a) {
            if (fs::exists(cell_path(checkpoints[c].step, analyses[a]))) {
                ++result.skipped_cells;
            } else {
                pending.push_back(a);
            }
        }
        if (pending.empty()) continue;
        try {
            weights[c] = load_weights(checkpoints[c].path);
        } catch (const std::exception& e) {
            load_failed[c] = true;
            result.failures.push_back({checkpoints[c].step, "", clean_field(e.what())});
            continue;
        }
        for (std::size_t a : pending) jobs.push_back({c, a});
    }

    const SweepInputs inputs = jobs.empty() ? SweepInputs{} : build_inputs(manifest, analyses);
    const std::size_t workers = worker_count(manifest.deterministic);
    const bool inner_deterministic = manifest.deterministic || workers > 1;
    std::vector<std::string> errors(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t k) {
        const Job& job = jobs[k];
        const auto& a = analyses[job.analysis];
        const std::size_t step = checkpoints[job.ckpt].step;
        try {
            const CsvTable t = run_cell(manifest, a, inputs, *weights[job.ckpt], step, inner_deterministic);
            const fs::path p = cell_path(step, a);
            fs::create_directories(p.parent_path());
            write_csv(p, t);
        } catch (const std::exception& e) {
            errors[k] = e.what();
            if (errors[k].empty()) errors[k] = "unknown error";
        }
    });
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        if (errors[k].empty()) {
            ++result.computed_cells;
        } else {
            result.failures.push_back(
                {checkpoints[jobs[k].ckpt].step, analyses[jobs[k].analysis].name, clean_field(errors[k])});
        }
    }
    std::sort(result.failures.begin(), result.failures.end(), [](const SweepFailure& x, const SweepFailure& y) {
        return std::pair{x.step, x.analysis} < std::pair{y.step, y.analysis};
    });

    // Merge in (step, analysis) order so the outputs do not depend on scheduling.
    CsvTable sweep, icl, scalars, failures;
    sweep.comments = {schema_comment("sweep", 1, manifest.seed)};
    sweep.header = kHeadHeader;
    icl.comments = {schema_comment("icl", 1, manifest.seed)};
    icl.header = kIclHeader;
    scalars.comments = {schema_comment("scalars", 1, manifest.seed)};
    scalars.header = kScalarHeader;
    failures.comments = {schema_comment("failures", 1, manifest.seed)};
    failures.header = {"step", "analysis", "error"};
    std::optional<std::size_t> last_step;
    for (const auto& ck : checkpoints) {
        bool any = false;
        for (const auto& a : analyses) {
            const fs::path p = cell_path(ck.step, a);
            if (!fs::exists(p)) continue;
            append_rows(a.kind == CellKind::head ? sweep : a.kind == CellKind::icl ? icl : scalars, p);
            any = any || a.kind == CellKind::head;
        }
        if (any) last_step = ck.step;
    }
    for (const auto& f : result.failures) {
        failures.rows.push_back({std::to_string(f.step), f.analysis.empty() ? "checkpoint" : f.analysis, f.error});
    }
    write_csv(out / "sweep.csv", sweep);
    write_csv(out / "icl.csv", icl);
    write_csv(out / "scalars.csv", scalars);
    write_csv(out / "failures.csv", failures);

    result.emergence = emergence_summary(out / "icl.csv", out / "scalars.csv");
    const auto& e = result.emergence;
    auto show = [](const std::optional<std::size_t>& s) { return s ? std::to_string(*s) : std::string("never"); };
    std::string summary = "# " + schema_comment("summary", 1, manifest.seed) + "\n";
    summary += "loss_reduction_below_-0.1 " + show(e.loss_reduction_step) + "\n";
    summary += "format_compliance " + show(e.format_step) + (e.icl_task.empty() ? "" : " (" + e.icl_task + ")") + "\n";
    summary += "pattern_discovery " + show(e.pattern_step) + (e.icl_task.empty() ? "" : " (" + e.icl_task + ")") + "\n";
    summary += std::string("emergence_order ") + (e.ordered ? "loss-reduction <= format <= pattern" : "not observed") +
               "\n";
    summary += "cells_failed " + std::to_string(result.failures.size()) + "\n";
    write_text_atomic(out / "summary.txt", summary);

    if (manifest.emit_figures && last_step) {
        fs::create_directories(out / "figures");
        for (const auto& a : analyses) {
            if (a.kind != CellKind::head) continue;
            bool has_rows = false;
            for (const auto& r : sweep.rows) has_rows = has_rows || r[3] == a.name;
            if (!has_rows) continue;
            const HeatmapGrid g = grid_from_rows(sweep, a.name, *last_step);
            if (g.n_layers > 0) emit_heatmap(g, out / "figures" / ("heatmap_" + file_stem(a.name) + ".svg"));
            CurveSelection sel;
            sel.top_k = manifest.top_k_curves;
            emit_curves(out / "sweep.csv", a.name, sel, out / "figures" / ("curves_" + file_stem(a.name) + ".svg"));
        }
    }
    return result;
}

EmergenceSummary emergence_summary(const fs::path& icl_csv, const fs::path& scalars_csv) {
    EmergenceSummary e;
    const CsvTable scalars = read_csv(scalars_csv);
    {
        const std::size_t cs = scalars.column("step"), cm = scalars.column("metric"), cv = scalars.column("value");
        for (const auto& r : scalars.rows) {
            if (r[cm] != "loss-reduction") continue;
            const double v = parse_number(r[cv]);
            const std::size_t step = std::stoul(r[cs]);
            if (v < -0.1 && (!e.loss_reduction_step || step < *e.loss_reduction_step)) e.loss_reduction_step = step;
        }
    }
    const CsvTable icl = read_csv(icl_csv);
    const std::size_t cs = icl.column("step"), ct = icl.column("task"), cn = icl.column("shots"),
                      cf = icl.column("format_acc"), cp = icl.column("pred_acc");
    for (const auto& r : icl.rows) {
        if (e.icl_task.empty() || r[ct] == "binary") e.icl_task = r[ct];
    }
    if (!e.icl_task.empty()) {
        const auto kind = parse_task_kind(e.icl_task);
        const double chance = kind ? 1.0 / static_cast<double>(class_count(*kind)) : 0.5;
        // Levels are read at the largest shot count of the grid.
        std::size_t max_shots = 0;
        for (const auto& r : icl.rows) {
            if (r[ct] == e.icl_task) max_shots = std::max(max_shots, static_cast<std::size_t>(std::stoul(r[cn])));
        }
        for (const auto& r : icl.rows) {
            if (r[ct] != e.icl_task || std::stoul(r[cn]) != max_shots) continue;
            const std::size_t step = std::stoul(r[cs]);
            if (parse_number(r[cf]) >= 0.8 && (!e.format_step || step < *e.format_step)) e.format_step = step;
            if (parse_number(r[cp]) >= chance + (1.0 - chance) / 2 && (!e.pattern_step || step < *e.pattern_step)) {
                e.pattern_step = step;
            }
        }
    }
    e.ordered = e.loss_reduction_step && e.format_step && e.pattern_step && *e.loss_reduction_step <= *e.format_step &&
                *e.format_step <= *e.pattern_step;
    return e;
}

}  // namespace ilens
