#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "induction_lens/errors.hpp"
#include "induction_lens/icl.hpp"
#include "test_util.hpp"

using namespace ilens;

namespace {

const Vocab& vocab() { return Vocab::builtin(); }

std::vector<IclTaskInstance> binary_trials(std::size_t shots, std::size_t n = 20) {
    return gen_trials(IclTaskKind::binary, default_pools(IclTaskKind::binary), shots, n, 9);
}

}  // namespace

TEST(LossReduction, ConstantLossGivesZero) {
    const std::vector<std::vector<double>> losses(3, std::vector<double>(200, 1.7));
    const auto r = loss_reduction_from_losses(losses, {50, 50});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.used, 3u);
}

TEST(LossReduction, LinearProfileClosedForm) {
    std::vector<double> l(600);
    for (std::size_t t = 0; t < l.size(); ++t) l[t] = 1.0 - 0.001 * static_cast<double>(t);
    const auto r = loss_reduction_from_losses({l}, {50, 450});
    EXPECT_NEAR(r.value, -0.45, 1e-9);
}

TEST(LossReduction, ShortTextsAreSkippedAndCounted) {
    const std::vector<std::vector<double>> losses = {std::vector<double>(99, 1.0), std::vector<double>(100, 2.0)};
    const auto r = loss_reduction_from_losses(losses, {50, 50});
    EXPECT_EQ(r.used, 1u);
    EXPECT_EQ(r.skipped, 1u);
    EXPECT_TRUE(std::isnan(loss_reduction_from_losses({std::vector<double>(10, 1.0)}, {50, 50}).value));
}

TEST(LossReduction, SpecValidation) {
    EXPECT_THROW((LossReductionSpec{0, 4}).validate(), ConfigError);
    EXPECT_THROW((LossReductionSpec{10, 4}).validate(), ConfigError);
    EXPECT_NO_THROW((LossReductionSpec{16, 48}).validate());
}

TEST(LossReduction, ModelLossesMatchTokenLosses) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full, 24, 2, 2, 8, 64), 2);
    std::vector<TokenId> text(40);
    for (std::size_t i = 0; i < text.size(); ++i) text[i] = static_cast<TokenId>((5 * i + 1) % 24);
    const auto r = loss_reduction(w, {text}, {8, 16});
    const auto l = token_losses(w, text);
    double early = 0.0, later = 0.0;
    for (std::size_t t = 0; t < 8; ++t) early += l[t] / 8.0;
    for (std::size_t t = 16; t < 24; ++t) later += l[t] / 8.0;
    EXPECT_NEAR(r.value, later - early, 1e-9);
}

TEST(GenTask, BinaryLineUsesTemplate) {
    // Hand-built pools with a single fruit and month make the line fully determined.
    TaskPools pools;
    pools.categories = {{vocab().id("apple")}, {vocab().id("January")}};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const IclTaskInstance t = gen_task(IclTaskKind::binary, pools, 2, seed);
        const std::string text = vocab().decode(t.prompt);
        EXPECT_NE(text.find("apple, January: 0"), std::string::npos) << text;
        EXPECT_NE(text.find("January, apple: 1"), std::string::npos) << text;
    }
}

TEST(GenTask, PromptLayout) {
    const IclTaskInstance t = gen_task(IclTaskKind::four_class, default_pools(IclTaskKind::four_class), 5, 3);
    ASSERT_EQ(t.prompt.size(), 1 + 5 * 6 + 4);
    EXPECT_EQ(t.prompt.front(), vocab().bos());
    EXPECT_EQ(t.prompt.back(), vocab().id(":"));
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(t.prompt[1 + 6 * k + 4], label_token(IclTaskKind::four_class, t.example_classes[k]));
        EXPECT_EQ(t.prompt[1 + 6 * k + 5], vocab().newline());
    }
    EXPECT_EQ(t.gold, label_token(IclTaskKind::four_class, t.gold_class));
}

TEST(GenTask, NineClassWithTwentyShotsCoversEveryLabel) {
    const TaskPools pools = default_pools(IclTaskKind::nine_class);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const IclTaskInstance t = gen_task(IclTaskKind::nine_class, pools, 20, seed);
        EXPECT_EQ(std::set<std::size_t>(t.example_classes.begin(), t.example_classes.end()).size(), 9u);
    }
}

TEST(GenTask, SeedFixedGenerationIsDeterministic) {
    const TaskPools pools = default_pools(IclTaskKind::relation_justification);
    const auto a = gen_task(IclTaskKind::relation_justification, pools, 6, 77);
    const auto b = gen_task(IclTaskKind::relation_justification, pools, 6, 77);
    EXPECT_EQ(a.prompt, b.prompt);
    EXPECT_EQ(a.gold, b.gold);
    EXPECT_NE(a.prompt, gen_task(IclTaskKind::relation_justification, pools, 6, 78).prompt);
}

TEST(GenTask, MissingPoolsAreAnError) {
    TaskPools one;
    one.categories = {{vocab().id("apple")}};
    EXPECT_THROW(gen_task(IclTaskKind::binary, one, 2, 1), InputError);
    EXPECT_THROW(gen_task(IclTaskKind::relation_justification, one, 2, 1), InputError);
}

TEST(LabelTokens, FormatSetMembership) {
    EXPECT_TRUE(is_format_token(IclTaskKind::nine_class, vocab().id("2")));
    EXPECT_FALSE(is_format_token(IclTaskKind::nine_class, vocab().id("cat")));
    EXPECT_TRUE(is_format_token(IclTaskKind::binary, vocab().id("7")));
    EXPECT_TRUE(is_format_token(IclTaskKind::relation_justification, vocab().id("false")));
    EXPECT_FALSE(is_format_token(IclTaskKind::relation_justification, vocab().id("1")));
    EXPECT_EQ(label_token(IclTaskKind::relation_justification, 0), vocab().id("true"));
    EXPECT_THROW(label_token(IclTaskKind::binary, 2), InputError);
}

TEST(EvalFormat, DigitOutputIsFormatCorrect) {
    const ModelWeights seven = testutil::constant_output_model(vocab().id("7"));
    const auto trials = binary_trials(4);
    EXPECT_EQ(eval_format(seven, trials), 1.0);
    EXPECT_EQ(eval_prediction(seven, trials), 0.0);
}

TEST(EvalFormat, WordOutputIsWrongFormat) {
    const ModelWeights cat = testutil::constant_output_model(vocab().id("cat"));
    EXPECT_EQ(eval_format(cat, binary_trials(4)), 0.0);
}

TEST(EvalPrediction, ExactLabelMatch) {
    const ModelWeights one = testutil::constant_output_model(vocab().id("1"));
    const auto trials = binary_trials(3, 60);
    std::size_t gold_one = 0;
    for (const auto& t : trials) gold_one += t.gold == vocab().id("1");
    const IclScores s = evaluate_instances(one, trials);
    EXPECT_EQ(s.format_acc, 1.0);
    EXPECT_DOUBLE_EQ(s.pred_acc, static_cast<double>(gold_one) / 60.0);
    EXPECT_LE(s.pred_acc, s.format_acc);
}

TEST(EvaluateTask, ResultsFollowShotGrid) {
    const ModelWeights w = init_random(testutil::small_config(Variant::attention_only, vocab().size(), 1, 2, 8, 256), 3);
    const std::vector<std::size_t> grid = {0, 2, 8};
    const IclResult r = evaluate_task(w, IclTaskKind::binary, default_pools(IclTaskKind::binary), grid, 10, 1, 42);
    ASSERT_EQ(r.per_shots.size(), 3u);
    EXPECT_EQ(r.step, 42u);
    for (const auto& ps : r.per_shots) {
        EXPECT_EQ(ps.scores.n, 10u);
        EXPECT_LE(ps.scores.pred_acc, ps.scores.format_acc);
    }
}

TEST(MinShots, FirstCountAboveThreshold) {
    const std::vector<std::pair<std::size_t, double>> acc = {{1, 0.5}, {2, 0.7}, {4, 0.85}};
    EXPECT_EQ(min_shots(acc), 4u);
}

TEST(MinShots, NeverAboveThresholdRecordsCap) {
    const std::vector<std::pair<std::size_t, double>> acc = {{1, 0.5}, {2, 0.7}, {4, 0.8}, {20, 0.79}};
    EXPECT_EQ(min_shots(acc), 20u);
}

TEST(MinShots, OneShotSuffices) {
    const std::vector<std::pair<std::size_t, double>> acc = {{1, 0.9}};
    EXPECT_EQ(min_shots(acc), 1u);
}

TEST(MinShots, ModelBasedSearch) {
    const TaskPools pools = default_pools(IclTaskKind::binary);
    EXPECT_EQ(min_shots_for_format(testutil::constant_output_model(vocab().id("0")), IclTaskKind::binary, pools, 5, 1),
              1u);
    EXPECT_EQ(min_shots_for_format(testutil::constant_output_model(vocab().id("cat")), IclTaskKind::binary, pools, 5, 1,
                                   0.8, 6),
              6u);
}
