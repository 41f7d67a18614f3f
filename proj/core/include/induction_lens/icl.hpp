#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "induction_lens/model.hpp"
#include "induction_lens/vocab.hpp"
#include "induction_lens/word_banks.hpp"

namespace ilens {

// --- loss reduction ----------------------------------------------------------------------

struct LossReductionSpec {
    std::size_t i = 50;  // early window [0, i)
    std::size_t j = 50;  // later window [j, i + j)

    void validate() const;  // i >= 1, j >= i
};

struct LossReductionResult {
    double value = 0.0;  // NaN when no text was long enough
    std::size_t used = 0;
    std::size_t skipped = 0;
};

// Mean over texts of mean(loss[j, i+j)) - mean(loss[0, i)); `losses[k][t]` is the loss of
// predicting token t+1 of text k. Texts with fewer than i+j losses are skipped.
LossReductionResult loss_reduction_from_losses(const std::vector<std::vector<double>>& losses,
                                               const LossReductionSpec& spec);

LossReductionResult loss_reduction(const ModelWeights& weights, const std::vector<std::vector<TokenId>>& texts,
                                   const LossReductionSpec& spec);

// --- few-shot tasks ----------------------------------------------------------------------

enum class IclTaskKind { binary, four_class, nine_class, relation_justification };

std::string_view to_string(IclTaskKind k);
std::optional<IclTaskKind> parse_task_kind(std::string_view s);
std::size_t class_count(IclTaskKind k);

enum class JustificationKind { subj_verb, verb_obj, mod_obj, part_whole };

std::string_view to_string(JustificationKind k);

// Entity pools of one task. Classification tasks read `categories` (2 for binary and
// four-class, 3 for nine-class); relation justification reads the pair lists.
struct TaskPools {
    std::vector<std::string> names;
    std::vector<std::vector<TokenId>> categories;
    std::vector<std::pair<TokenId, TokenId>> positives;
    std::vector<std::pair<TokenId, TokenId>> negatives;
};

// Category pools from the built-in banks: "fruit", "month", "furniture", "profession", "animal", ...
std::vector<TokenId> category_pool(std::string_view name, const WordBanks& banks = WordBanks::builtin(),
                                   const Vocab& vocab = Vocab::builtin());
TaskPools classification_pools(std::span<const std::string> names, const WordBanks& banks = WordBanks::builtin(),
                               const Vocab& vocab = Vocab::builtin());
// Positives are plausible pairs of the given kind; negatives pair the first slot with a month.
TaskPools justification_pools(JustificationKind kind, const WordBanks& banks = WordBanks::builtin(),
                              const Vocab& vocab = Vocab::builtin());
// (fruit, month) for binary and four-class, (fruit, animal, month) for nine-class, subj_verb
// for relation justification.
TaskPools default_pools(IclTaskKind kind);

struct IclTaskInstance {
    IclTaskKind kind = IclTaskKind::binary;
    std::size_t shots = 0;
    std::vector<TokenId> prompt;  // <bos> then "a , b : label \n" per shot, then "q1 , q2 :"
    std::vector<std::size_t> example_classes;
    std::size_t gold_class = 0;
    TokenId gold = 0;
};

// Label token of class c: digits for classification, true/false for justification
// (class 0 = true).
TokenId label_token(IclTaskKind kind, std::size_t c, const Vocab& vocab = Vocab::builtin());
bool is_format_token(IclTaskKind kind, TokenId token, const Vocab& vocab = Vocab::builtin());

// With shots >= class_count every class appears among the examples. Throws InputError for
// empty pools.
IclTaskInstance gen_task(IclTaskKind kind, const TaskPools& pools, std::size_t shots, std::uint64_t seed,
                         const Vocab& vocab = Vocab::builtin());

struct IclScores {
    double format_acc = 0.0;
    double pred_acc = 0.0;
    std::size_t n = 0;
};

// One greedy token per instance scored both ways.
IclScores evaluate_instances(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances,
                             const Vocab& vocab = Vocab::builtin(), bool deterministic = true);
double eval_format(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances,
                   const Vocab& vocab = Vocab::builtin());
double eval_prediction(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances,
                       const Vocab& vocab = Vocab::builtin());

std::vector<IclTaskInstance> gen_trials(IclTaskKind kind, const TaskPools& pools, std::size_t shots,
                                        std::size_t trials, std::uint64_t seed, const Vocab& vocab = Vocab::builtin());

struct IclShotResult {
    std::size_t shots = 0;
    IclScores scores;
};

struct IclResult {
    std::size_t step = 0;
    IclTaskKind kind = IclTaskKind::binary;
    std::vector<IclShotResult> per_shots;
};

IclResult evaluate_task(const ModelWeights& weights, IclTaskKind kind, const TaskPools& pools,
                        std::span<const std::size_t> shot_grid, std::size_t trials, std::uint64_t seed,
                        std::size_t step = 0, bool deterministic = true);

// Smallest shot count whose accuracy exceeds `threshold`, otherwise `cap`.
std::size_t min_shots(std::span<const std::pair<std::size_t, double>> accuracy_by_shots, double threshold = 0.8,
                      std::size_t cap = 20);

std::size_t min_shots_for_format(const ModelWeights& weights, IclTaskKind kind, const TaskPools& pools,
                                 std::size_t trials, std::uint64_t seed, double threshold = 0.8, std::size_t cap = 20,
                                 bool deterministic = true);

}  // namespace ilens
