#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "induction_lens/model.hpp"

namespace ilens {

struct TrainConfig {
    std::uint64_t seed = 1;  // weight init; the batch source carries its own seed
    std::size_t total_steps = 1000;
    std::size_t checkpoint_interval = 100;
    std::size_t warmup_steps = 100;
    double peak_lr = 3e-3;
    double floor_lr = 3e-4;  // cosine decays to this at total_steps
    double beta1 = 0.9;
    double beta2 = 0.99;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;  // decoupled; projection matrices only
    double clip_norm = 1.0;
    float init_embed_std = 0.02f;
    std::filesystem::path out_dir;
    // Generates the next batch on a helper thread while the current step runs.
    bool prefetch = true;

    void validate() const;  // throws ConfigError
    double learning_rate(std::size_t step) const;  // step is 1-based
};

struct Checkpoint {
    std::size_t step = 0;
    std::filesystem::path weights_path;
    double running_loss = 0.0;  // mean loss over the steps since the previous checkpoint
};

struct LossRecord {
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<Checkpoint> checkpoints;
    std::vector<LossRecord> loss_log;
    ModelWeights final_weights;
};

// Returns the token sequences of a (1-based) step. Must be a pure function of the step.
using BatchFn = std::function<std::vector<std::vector<TokenId>>(std::size_t step)>;

// `ckpt_<step>.ilw` for the weights, `ckpt_<step>.optim` for the optimizer moments.
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t step);
std::filesystem::path optimizer_state_path(const std::filesystem::path& dir, std::size_t step);
// Latest step that has both files, if any.
std::optional<std::size_t> latest_checkpoint(const std::filesystem::path& dir);
std::vector<Checkpoint> list_checkpoints(const std::filesystem::path& dir);

// Trains with AdamW on mean next-token cross-entropy. Writes ckpt_0 before the first update, a
// checkpoint every interval, and `loss.csv` (step,loss). When `resume` is set and out_dir holds a
// checkpoint with optimizer state, training continues from it and the loss log is truncated to
// that step, which reproduces an uninterrupted run bitwise. A non-finite loss or gradient aborts
// with NumericError naming the last good checkpoint.
TrainResult train(const ModelConfig& model, const TrainConfig& config, const BatchFn& batches, bool resume = false);

std::vector<LossRecord> read_loss_log(const std::filesystem::path& csv);

struct GradCheckOptions {
    double epsilon = 1e-3;
    std::size_t n_params = 256;
    std::uint64_t seed = 0;
    bool flip_analytic_sign = false;  // negative control
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::size_t n_checked = 0;
};

// Analytic gradients of the mean next-token loss against fourth-order central differences, both
// computed in float64 from the float32 weights. rel = |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const ModelWeights& weights, const std::vector<std::vector<TokenId>>& batch,
                           const GradCheckOptions& opts = {});

}  // namespace ilens
