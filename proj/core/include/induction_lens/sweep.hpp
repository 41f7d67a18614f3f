#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "induction_lens/icl.hpp"
#include "induction_lens/relation_metrics.hpp"

namespace ilens {

struct SweepCheckpoint {
    std::size_t step = 0;
    std::filesystem::path path;
};

// Analysis names:
//   relation:<rel>            relation index table, e.g. "relation:subj", "relation:Part-of"
//   relation:<rel>:reverse    same on reversed triplets
//   baseline                  tails moved to AnalysisConfig::baseline_pos
//   copying                   copying score on a fixed token sample
//   prefix-match              prefix-matching score on doubled random sequences
//   icl:<task>                few-shot task over the shot grid, e.g. "icl:binary"
//   loss-reduction            held-out loss reduction (scalar)
//   tau-dist                  attention ratio histogram summary (scalars)
struct SweepManifest {
    std::vector<SweepCheckpoint> checkpoints;
    std::vector<std::string> analyses;
    std::filesystem::path out_dir;
    bool deterministic = false;
    std::uint64_t seed = 1;

    AnalysisConfig analysis = [] {
        AnalysisConfig c;
        c.tau_gate = false;
        return c;
    }();
    std::vector<std::size_t> shot_grid = {0, 1, 2, 4, 8, 12, 16, 20};
    std::size_t icl_trials = 200;
    LossReductionSpec loss_reduction{16, 48};
    std::size_t loss_texts = 64;
    std::size_t loss_text_len = 128;
    std::size_t dependency_sentences = 200;
    std::size_t kg_passages = 100;
    std::size_t copying_sample = 64;
    std::size_t prefix_seqs = 100;
    std::size_t prefix_seq_len = 32;
    std::size_t top_k_curves = 16;
    bool emit_figures = true;

    // Throws ConfigError for an empty checkpoint list, duplicate steps, unknown analyses or
    // inconsistent parameters. Checkpoint files are not opened here.
    void validate() const;
};

// Every ckpt_<step>.ilw in `dir`, ascending by step.
std::vector<SweepCheckpoint> sweep_checkpoints(const std::filesystem::path& dir);

// Analyses producing one value per (layer, head).
bool is_head_analysis(const std::string& analysis);

struct SweepFailure {
    std::size_t step = 0;
    std::string analysis;  // empty when the checkpoint itself failed to load
    std::string error;
};

// First checkpoint step at which each capability shows up; absent when never reached.
struct EmergenceSummary {
    std::optional<std::size_t> loss_reduction_step;  // loss reduction < -0.1
    std::optional<std::size_t> format_step;          // format accuracy >= 0.8
    std::optional<std::size_t> pattern_step;         // pred_acc >= chance + (1 - chance) / 2
    std::string icl_task;                            // task the ICL levels were read from
    bool ordered = false;  // all three present and non-decreasing in that order
};

struct SweepResult {
    std::size_t computed_cells = 0;
    std::size_t skipped_cells = 0;  // output already present
    std::vector<SweepFailure> failures;
    EmergenceSummary emergence;
    bool partial() const { return !failures.empty(); }
};

// Output layout under out_dir:
//   cells/<step>/<analysis>.csv   one file per (checkpoint, analysis); present means done
//   sweep.csv                     step,layer,head,metric,value
//   icl.csv                       step,task,shots,format_acc,pred_acc,n
//   scalars.csv                   step,metric,value
//   failures.csv                  step,analysis,error
//   summary.txt                   emergence ordering
//   figures/                      heatmaps at the last step and per-metric curves
SweepResult run_sweep(const SweepManifest& manifest);

EmergenceSummary emergence_summary(const std::filesystem::path& icl_csv, const std::filesystem::path& scalars_csv);

}  // namespace ilens
