#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "induction_lens/corpus.hpp"
#include "induction_lens/model.hpp"

namespace ilens {

// Linear scorer over (dependent c, candidate p) pairs:
//   sum_{l,h} u_lh A^lh[c,p] + sum_{l,h} v_lh A^lh[p,c] + w cos(e_c, e_p) + b
// with a softmax over the candidates of c's sentence (self excluded).
struct ProbeModel {
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<double> u;  // L*H, forward attention
    std::vector<double> v;  // L*H, reverse attention
    double w = 0.0;         // embedding similarity
    double b = 0.0;

    std::size_t feature_count() const { return u.size() + v.size() + 2; }
    bool all_finite() const;
};

// Sentence plus the gold head position of each token (absent = not a dependent).
struct ProbeSentence {
    std::vector<TokenId> tokens;
    std::vector<std::optional<std::size_t>> heads;
};

// Tokens with exactly one governing triplet get that head; the rest are excluded.
ProbeSentence probe_sentence(const AnnotatedSentence& s);

struct ProbeOptions {
    std::size_t epochs = 200;
    double lr = 0.05;
    bool prepend_bos = true;  // attention is captured with <bos> in front; candidates stay in-sentence
    TokenId bos = 0;
};

struct ProbeTrainResult {
    ProbeModel probe;
    std::vector<double> loss_per_epoch;
};

// Full-batch Adam on the mean cross-entropy. Throws InputError when no token has a gold head.
ProbeTrainResult train_probe(const ModelWeights& weights, const std::vector<ProbeSentence>& sentences,
                             const ProbeOptions& opts = {});
ProbeTrainResult train_probe(const ModelWeights& weights, const std::vector<AnnotatedSentence>& sentences,
                             const ProbeOptions& opts = {});

// Fraction of dependents whose top-scoring candidate is the gold head; NaN without dependents.
double eval_probe(const ProbeModel& probe, const ModelWeights& weights, const std::vector<ProbeSentence>& sentences,
                  const ProbeOptions& opts = {});
double eval_probe(const ProbeModel& probe, const ModelWeights& weights,
                  const std::vector<AnnotatedSentence>& sentences, const ProbeOptions& opts = {});

// Expected accuracy of a uniform guess: mean over dependents of 1 / (sentence length - 1).
double probe_chance_rate(const std::vector<ProbeSentence>& sentences);

void save_probe(const ProbeModel& probe, const std::filesystem::path& path);
ProbeModel load_probe(const std::filesystem::path& path);

}  // namespace ilens
