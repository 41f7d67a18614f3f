#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "../oracles/naive.hpp"
#include "induction_lens/circuits.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"
#include "test_util.hpp"

using namespace ilens;

namespace {

TensorF32 random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<float> v(r * c);
    for (float& x : v) x = static_cast<float>(scale * standard_normal(rng));
    return TensorF32::matrix(r, c, v);
}

ModelWeights one_layer(std::size_t heads, std::size_t d, std::uint64_t seed) {
    ModelConfig c = testutil::small_config(Variant::attention_only, 16, 1, heads, d / heads, 16);
    return init_random(c, seed);
}

}  // namespace

TEST(BuildCircuits, IdentitySlicesGiveProjector) {
    ModelConfig c = testutil::small_config(Variant::attention_only, 8, 1, 2, 3);
    ModelWeights w(c);
    for (std::size_t i = 0; i < 3; ++i) {
        w.query(0, 1)(3 + i, i) = 1.0f;
        w.key(0, 1)(3 + i, i) = 1.0f;
    }
    const CircuitMatrices m = build_circuits(w, 0, 1);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t col = 0; col < 6; ++col) {
            EXPECT_EQ(m.qk(r, col), (r == col && r >= 3) ? 1.0f : 0.0f);
        }
    }
}

TEST(BuildCircuits, OvRankBoundedByHeadDimension) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full, 16, 1, 4, 4), 8);
    const CircuitMatrices m = build_circuits(w, 0, 2);
    Eigen::MatrixXd ov(16, 16);
    for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t c = 0; c < 16; ++c) ov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.ov(r, c);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ov);
    lu.setThreshold(1e-5);
    EXPECT_LE(lu.rank(), 4);
}

TEST(BuildCircuits, RecomputationIsBitwiseIdentical) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full), 4);
    const CircuitMatrices a = build_circuits(w, 1, 1), b = build_circuits(w, 1, 1);
    EXPECT_TRUE(bitwise_equal(a.qk, b.qk));
    EXPECT_TRUE(bitwise_equal(a.ov, b.ov));
}

TEST(BuildCircuits, BadIndicesThrow) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full), 4);
    EXPECT_THROW(build_circuits(w, 2, 0), InputError);
    EXPECT_THROW(build_circuits(w, 0, 2), InputError);
}

TEST(CircuitAttention, ZeroQkGivesUniformRows) {
    ModelWeights w(testutil::small_config(Variant::attention_only, 8, 1, 1, 8));
    const CircuitMatrices c = build_circuits(w, 0, 0);
    const TensorF32 x = TensorF32::identity(8);
    const TensorF32 a = circuit_attention(x, c);
    for (std::size_t j = 0; j < 8; ++j) {
        for (std::size_t k = 0; k <= j; ++k) EXPECT_NEAR(a(j, k), 1.0 / static_cast<double>(j + 1), 1e-7);
    }
}

TEST(CircuitAttention, HandWiredPreviousTokenHead) {
    const ModelWeights w = build_induction_model(32, 64);
    std::vector<TokenId> tokens(40);
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<TokenId>((7 * i) % 32);
    const TensorF32 a = circuit_attention(embed_sequence(w, tokens), build_circuits(w, 0, 0));
    for (std::size_t j = 1; j < tokens.size(); ++j) EXPECT_GT(a(j, j - 1), 0.99) << j;
}

TEST(CircuitAttention, RowsSumToOne) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full), 6);
    const TensorF32 x = random_matrix(12, 16, 2);
    for (bool scale : {true, false}) {
        const TensorF32 a = circuit_attention(x, build_circuits(w, 1, 0), scale);
        for (std::size_t j = 0; j < 12; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 12; ++k) s += a(j, k);
            EXPECT_NEAR(s, 1.0, 1e-6);
        }
    }
}

TEST(CircuitAttention, MatchesForwardAttentionOfFirstLayer) {
    const ModelWeights w = init_random(testutil::small_config(Variant::attention_only), 12);
    const std::vector<TokenId> tokens = {1, 5, 9, 2, 5, 7, 1, 3};
    ForwardOptions o;
    o.capture_attention = true;
    const auto rec = forward(w, tokens, o).attention;
    const TensorF32 x = embed_sequence(w, tokens);
    for (std::size_t h = 0; h < 2; ++h) {
        const TensorF32 a = circuit_attention(x, build_circuits(w, 0, h));
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], rec->at(0, h)[i], 1e-6);
    }
}

TEST(OvProjection, ZeroOvGivesZeroLogits) {
    ModelWeights w(testutil::small_config(Variant::attention_only));
    w.unembed() = random_matrix(16, 24, 1);
    const TensorF32 x = random_matrix(1, 16, 2);
    const TensorF32 logits = ov_vocab_projection(x.data(), build_circuits(w, 0, 0), w.unembed());
    for (float v : logits.data()) EXPECT_EQ(v, 0.0f);
}

TEST(OvProjection, HandWiredInductionHeadCopiesToken) {
    const ModelWeights w = build_induction_model(32, 64);
    const CircuitMatrices c = build_circuits(w, 1, 0);
    for (std::size_t v = 0; v < 32; ++v) {
        const TensorF32 logits = ov_vocab_projection(w.embed().row(v), c, w.unembed());
        const auto d = logits.data();
        EXPECT_EQ(static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()), v);
    }
}

TEST(OvProjection, IsLinear) {
    const ModelWeights w = init_random(testutil::small_config(Variant::full), 5);
    const CircuitMatrices c = build_circuits(w, 0, 1);
    TensorF32 x = random_matrix(1, 16, 3);
    TensorF32 x2 = x;
    for (float& v : x2.data()) v *= 2.0f;
    const TensorF32 a = ov_vocab_projection(x.data(), c, w.unembed());
    const TensorF32 b = ov_vocab_projection(x2.data(), c, w.unembed());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 2.0f * a[i], 1e-6);
    const OvProjector p(c, w.unembed());
    const auto d = p.logits(x.data());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(d[i], a[i], 1e-6);
}

TEST(MhaRewrite, RandomWeightsWithinTolerance) {
    for (std::size_t heads : {1, 2, 4}) {
        const ModelWeights w = one_layer(heads, 64, 100 + heads);
        EXPECT_LT(verify_mha_rewrite(w, 0, random_matrix(16, 64, heads)), 1e-5) << heads << " heads";
    }
}

TEST(MhaRewrite, ZeroWeightsGiveZeroDeviation) {
    ModelWeights w(testutil::small_config(Variant::attention_only, 16, 1, 4, 16, 16));
    EXPECT_EQ(verify_mha_rewrite(w, 0, random_matrix(16, 64, 1)), 0.0);
}

TEST(MhaRewrite, ShapeMismatchThrows) {
    const ModelWeights w = one_layer(2, 64, 1);
    EXPECT_THROW(verify_mha_rewrite(w, 0, random_matrix(16, 32, 1)), ShapeError);
}
