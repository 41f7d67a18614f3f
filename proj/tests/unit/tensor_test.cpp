#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "../oracles/naive.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/tensor.hpp"

using namespace ilens;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    const TensorF32 m = TensorF32::matrix(2, 3, {1, -2, 3, 4.5f, 0, -6});
    EXPECT_TRUE(bitwise_equal(matmul(TensorF32::identity(2), m), m));
}

TEST(Matmul, HandArithmetic) {
    const TensorF32 r = matmul(TensorF32::matrix(2, 2, {1, 2, 3, 4}), TensorF32::matrix(2, 1, {0, 1}));
    ASSERT_EQ(r.shape(), (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(r(0, 0), 2.0f);
    EXPECT_EQ(r(1, 0), 4.0f);
}

TEST(Matmul, ZerosAnnihilate) {
    const TensorF32 m = TensorF32::matrix(3, 2, {1, 2, 3, 4, 5, 6});
    const TensorF32 r = matmul(TensorF32({4, 3}), m);
    for (float v : r.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
    EXPECT_THROW(matmul(TensorF32({2, 3}), TensorF32({2, 3})), ShapeError);
}

TEST(Matmul, AgreesWithNaiveTripleLoop) {
    Rng rng(11);
    std::vector<float> a(37 * 29), b(29 * 41);
    for (float& v : a) v = static_cast<float>(standard_normal(rng));
    for (float& v : b) v = static_cast<float>(standard_normal(rng));
    const TensorF32 ta = TensorF32::matrix(37, 29, a), tb = TensorF32::matrix(29, 41, b);
    const TensorF32 r = matmul(ta, tb);
    const oracle::Mat ref = oracle::matmul(oracle::to_mat(ta), oracle::to_mat(tb));
    for (std::size_t i = 0; i < 37; ++i) {
        for (std::size_t j = 0; j < 41; ++j) EXPECT_NEAR(r(i, j), ref[i][j], 1e-4);
    }
}

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(TensorF32({2, 2}, {1, 2, 3}), ShapeError);
}

TEST(MaskedSoftmax, ZeroRowsCausalAreUniformOverPrefix) {
    const TensorF32 p = masked_softmax_rows(TensorF32({5, 5}), true);
    for (std::size_t j = 0; j < 5; ++j) {
        for (std::size_t k = 0; k < 5; ++k) {
            if (k <= j) {
                EXPECT_NEAR(p(j, k), 1.0 / static_cast<double>(j + 1), 1e-7);
            } else {
                EXPECT_EQ(p(j, k), 0.0f);
            }
        }
    }
}

TEST(MaskedSoftmax, ClosedFormTwoEntries) {
    const TensorF32 p = masked_softmax_rows(TensorF32::matrix(1, 2, {0.0f, static_cast<float>(std::log(2.0))}), false);
    EXPECT_NEAR(p(0, 0), 1.0 / 3.0, 1e-7);
    EXPECT_NEAR(p(0, 1), 2.0 / 3.0, 1e-7);
}

TEST(MaskedSoftmax, LargeLogitsDoNotOverflow) {
    const TensorF32 p = masked_softmax_rows(TensorF32::matrix(1, 2, {1000.0f, 0.0f}), false);
    EXPECT_EQ(p(0, 0), 1.0f);
    EXPECT_GE(p(0, 1), 0.0f);
    EXPECT_LT(p(0, 1), 1e-30f);
    EXPECT_TRUE(p.all_finite());
}

TEST(MaskedSoftmax, NanInputIsRejected) {
    EXPECT_THROW(masked_softmax_rows(TensorF32::matrix(1, 2, {std::nanf(""), 0.0f}), false), NumericError);
}

TEST(MaskedSoftmax, RowsSumToOne) {
    Rng rng(3);
    std::vector<float> v(9 * 9);
    for (float& x : v) x = static_cast<float>(4.0 * standard_normal(rng));
    const TensorF32 p = masked_softmax_rows(TensorF32::matrix(9, 9, v), true);
    for (std::size_t j = 0; j < 9; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 9; ++k) s += p(j, k);
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Argmax, RunnerUpByInspection) {
    const std::vector<float> v = {0.6f, 0.2f, 0.1f};
    const ArgmaxResult r = argmax_with_runnerup(v, 2);
    EXPECT_EQ(r.index, 0u);
    EXPECT_EQ(r.value, 0.6f);
    ASSERT_TRUE(r.runner_up.has_value());
    EXPECT_EQ(*r.runner_up, 0.2f);
}

TEST(Argmax, TieGoesToSmallestIndex) {
    const std::vector<float> v = {0.5f, 0.5f};
    const ArgmaxResult r = argmax_with_runnerup(v, 1);
    EXPECT_EQ(r.index, 0u);
    EXPECT_EQ(r.value, 0.5f);
    EXPECT_EQ(r.runner_up, 0.5f);
}

TEST(Argmax, SingletonHasNoRunnerUp) {
    const std::vector<float> v = {0.3f};
    const ArgmaxResult r = argmax_with_runnerup(v, 0);
    EXPECT_EQ(r.index, 0u);
    EXPECT_EQ(r.value, 0.3f);
    EXPECT_FALSE(r.runner_up.has_value());
}

TEST(Argmax, LimitBoundsTheSearch) {
    const std::vector<float> v = {0.1f, 0.2f, 0.9f};
    EXPECT_EQ(argmax_with_runnerup(v, 1).index, 1u);
    EXPECT_THROW(argmax_with_runnerup(v, 3), InputError);
}
