#include <gtest/gtest.h>

#include <cmath>

#include "induction_lens/errors.hpp"
#include "induction_lens/probe.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/weights_io.hpp"
#include "test_util.hpp"

using namespace ilens;

namespace {

// Random sentences over [0, vocab); the gold head of every token but the first is its predecessor,
// or a uniformly drawn other position when random_heads is set.
std::vector<ProbeSentence> synthetic(std::size_t n, std::size_t vocab, std::uint64_t seed, bool random_heads) {
    Rng rng(seed);
    std::vector<ProbeSentence> out;
    for (std::size_t i = 0; i < n; ++i) {
        ProbeSentence s;
        const std::size_t len = 6 + uniform_index(rng, 9);
        for (std::size_t k = 0; k < len; ++k) s.tokens.push_back(static_cast<TokenId>(uniform_index(rng, vocab)));
        s.heads.assign(len, std::nullopt);
        for (std::size_t c = 0; c < len; ++c) {
            if (random_heads) {
                std::size_t h = uniform_index(rng, len - 1);
                s.heads[c] = h >= c ? h + 1 : h;
            } else if (c > 0) {
                s.heads[c] = c - 1;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

ProbeOptions no_bos() {
    ProbeOptions o;
    o.prepend_bos = false;
    return o;
}

}  // namespace

TEST(ProbeSentence, HeadsFromTriplets) {
    const AnnotatedSentence s = realize_clause({"fox", "red", "chases", "", "dog", ""});
    const ProbeSentence p = probe_sentence(s);
    ASSERT_EQ(p.heads.size(), s.size());
    EXPECT_EQ(p.heads[2], std::optional<std::size_t>(3));  // fox <- chases
    EXPECT_EQ(p.heads[5], std::optional<std::size_t>(3));  // dog <- chases
    EXPECT_EQ(p.heads[1], std::optional<std::size_t>(2));  // red <- fox
    EXPECT_FALSE(p.heads[3].has_value());
}

TEST(Probe, HandWiredPreviousTokenHeadIsRecovered) {
    const ModelWeights w = build_induction_model(32, 64);
    const auto train = synthetic(200, 32, 1, false);
    const auto eval = synthetic(100, 32, 2, false);
    const ProbeTrainResult r = train_probe(w, train, no_bos());
    EXPECT_GT(eval_probe(r.probe, w, eval, no_bos()), 0.95);
    EXPECT_GT(std::abs(r.probe.u[0]), std::abs(r.probe.u[1]));
}

TEST(Probe, UniformAttentionModelIsAtChance) {
    const ModelWeights w(testutil::small_config(Variant::attention_only, 32, 2, 2, 8, 64));
    const auto train = synthetic(200, 32, 3, true);
    const auto eval = synthetic(300, 32, 4, true);
    const ProbeTrainResult r = train_probe(w, train, no_bos());
    EXPECT_NEAR(eval_probe(r.probe, w, eval, no_bos()), probe_chance_rate(eval), 0.05);
}

TEST(Probe, TrainingLossDecreases) {
    const ModelWeights w = build_induction_model(32, 64);
    ProbeOptions o = no_bos();
    o.epochs = 50;
    const ProbeTrainResult r = train_probe(w, synthetic(50, 32, 5, false), o);
    ASSERT_EQ(r.loss_per_epoch.size(), 50u);
    EXPECT_LT(r.loss_per_epoch.back(), 0.5 * r.loss_per_epoch.front());
}

TEST(Probe, ChanceRateIsMeanInverseCandidateCount) {
    std::vector<ProbeSentence> s(2);
    s[0].tokens = {1, 2, 3};
    s[0].heads = {std::nullopt, 0, 1};
    s[1].tokens = {1, 2, 3, 4, 5};
    s[1].heads = {1, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    EXPECT_DOUBLE_EQ(probe_chance_rate(s), (0.5 + 0.5 + 0.25) / 3.0);
}

TEST(Probe, NoLabelsIsAnError) {
    const ModelWeights w = build_induction_model(32, 64);
    ProbeSentence s;
    s.tokens = {1, 2, 3};
    s.heads.assign(3, std::nullopt);
    EXPECT_THROW(train_probe(w, std::vector<ProbeSentence>{s}, no_bos()), InputError);
}

TEST(Probe, SaveLoadRoundTrip) {
    testutil::TempDir dir("probe");
    const ModelWeights w = build_induction_model(32, 64);
    ProbeOptions o = no_bos();
    o.epochs = 5;
    const ProbeModel p = train_probe(w, synthetic(10, 32, 6, false), o).probe;
    save_probe(p, dir / "p.ilw");
    const ProbeModel q = load_probe(dir / "p.ilw");
    // Parameters are stored as float32.
    auto f = [](double x) { return static_cast<double>(static_cast<float>(x)); };
    EXPECT_EQ(q.n_layers, p.n_layers);
    ASSERT_EQ(q.u.size(), p.u.size());
    for (std::size_t i = 0; i < p.u.size(); ++i) {
        EXPECT_EQ(q.u[i], f(p.u[i]));
        EXPECT_EQ(q.v[i], f(p.v[i]));
    }
    EXPECT_EQ(q.w, f(p.w));
    EXPECT_EQ(q.b, f(p.b));
}

TEST(Probe, LoadingModelWeightsAsProbeIsCorruption) {
    testutil::TempDir dir("probe");
    save_weights(build_induction_model(8, 8), dir / "m.ilw");
    EXPECT_THROW(load_probe(dir / "m.ilw"), CorruptionError);
}
