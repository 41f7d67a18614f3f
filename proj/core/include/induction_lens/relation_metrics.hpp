#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "induction_lens/corpus.hpp"
#include "induction_lens/model.hpp"

namespace ilens {

enum class AttentionSource {
    forward_capture,  // attention captured from the real forward pass
    circuit,          // circuit_attention on raw embeddings
};

enum class SoftmaxMode {
    full_vocab,  // softmax over the whole vocabulary, then read off the prefix tokens
    restricted,  // softmax over the unique prefix tokens only
};

struct AnalysisConfig {
    double tau = 2.2;
    // Off keeps the argmax condition and drops only the ratio test.
    bool tau_gate = true;
    AttentionSource attention = AttentionSource::forward_capture;
    SoftmaxMode softmax = SoftmaxMode::full_vocab;
    bool qk_scale = true;               // circuit attention only
    bool normalize_embeddings = false;  // RMS-normalize x_j before the OV projection
    bool undefined_as_zero = false;     // count undefined scores as 0 instead of skipping them
    // Analysis sequences start with <bos>; triplet positions shift by one.
    bool prepend_bos = true;
    TokenId bos = 0;  // <bos> in the built-in vocabulary
    std::size_t baseline_pos = 9;  // 0-based position used as the baseline tail

    void validate() const;  // throws ConfigError when the gate is on and tau <= 1
};

// True iff s is the argmax of attention row[0..j] (ties to the smallest index) and, when the
// ratio test is on, row[s] / runner-up > tau. With j == 0 the answer is s == 0.
// Throws InputError when s > j.
bool attends_to_head(std::span<const float> row, std::size_t j, std::size_t s, double tau, bool ratio_test = true);

// q_k = max(0, p_k - mean(p)); a = q_tail / sum(q). Absent when sum(q) == 0.
// `p` holds one probability per unique prefix token. Throws InputError if tail is out of range.
std::optional<double> relation_score(std::span<const double> p, std::size_t tail);

// Unique tokens of tokens[0..j] in order of first occurrence.
std::vector<TokenId> unique_prefix(std::span<const TokenId> tokens, std::size_t j);

// p over `prefix` from vocabulary logits, in either softmax mode.
std::vector<double> prefix_probabilities(std::span<const double> logits, std::span<const TokenId> prefix,
                                         SoftmaxMode mode);

struct RelationIndexTable {
    std::string label;
    bool reversed = false;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<double> sum;          // L*H, sum of contributing scores
    std::vector<std::size_t> count;   // L*H, number of contributing scores

    std::optional<double> mean(std::size_t layer, std::size_t head) const;
    std::size_t count_at(std::size_t layer, std::size_t head) const { return count[layer * n_heads + head]; }
};

// Mean relation score per head over every triplet of `relation` and every current position
// j >= max(s, o). Throws InputError for a corpus without matching triplets.
RelationIndexTable relation_index_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                        Relation relation, const AnalysisConfig& config, bool reversed = false);

// Same pipeline with every tail moved to config.baseline_pos; sentences that are too short are
// skipped, as are triplets whose head sits on the baseline position.
RelationIndexTable baseline_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                  const AnalysisConfig& config);

// Reverse triplets (t_o, relation, t_s).
RelationIndexTable reverse_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                 Relation relation, const AnalysisConfig& config);

struct HeadOccurrenceTable {
    std::string label;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<std::size_t> count;  // L*H
    std::size_t n_triplets = 0;

    std::size_t at(std::size_t layer, std::size_t head) const { return count[layer * n_heads + head]; }
    std::size_t total() const;
};

// Per triplet, the head with the largest positive mean score over j gets one occurrence.
HeadOccurrenceTable head_grouping(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                  Relation relation, const AnalysisConfig& config);

struct RatioHistogram {
    static constexpr std::size_t kBins = 100;  // [0, 10) in steps of 0.1
    static constexpr double kBinWidth = 0.1;
    std::vector<std::size_t> bins = std::vector<std::size_t>(kBins, 0);
    std::size_t overflow = 0;  // ratios >= 10, including infinite ones
    std::vector<double> ratios;

    std::size_t samples() const { return ratios.size(); }
    // Fraction of ratios strictly above tau; NaN without samples.
    double fraction_above(double tau) const;
    void add(double ratio);
};

// A_{j,s} / runner-up over all heads, triplets (any relation) and j >= max(s, o) where s is
// the prefix argmax. j == 0 rows have no runner-up and are skipped.
RatioHistogram tau_ratio_distribution(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                      const AnalysisConfig& config);

// --- induction-head scores ---------------------------------------------------------------

struct PrefixMatchOptions {
    std::size_t n_seqs = 100;
    std::size_t seq_len = 32;
    std::uint64_t seed = 0;
    // Tokens are sampled from [first_token, vocab_size).
    TokenId first_token = 0;
};

// Mean attention on the successor of the previous occurrence of the current token, over the
// second copy of doubled random sequences.
double prefix_matching_score(const ModelWeights& weights, std::size_t layer, std::size_t head,
                             const PrefixMatchOptions& opts = {});

// Mean relation score of each sample token against itself, with p a softmax over the sample
// of the OV projection of the token's embedding. Absent when no score is defined.
// Throws InputError for fewer than 16 distinct tokens.
std::optional<double> copying_score(const ModelWeights& weights, std::size_t layer, std::size_t head,
                                    std::span<const TokenId> sample);

}  // namespace ilens
