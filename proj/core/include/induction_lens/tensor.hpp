#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ilens {

// Dense row-major float32 tensor. The shape product always equals the buffer length.
class TensorF32 {
public:
    TensorF32() = default;
    explicit TensorF32(std::vector<std::size_t> shape);
    TensorF32(std::vector<std::size_t> shape, std::vector<float> data);

    static TensorF32 matrix(std::size_t rows, std::size_t cols, std::vector<float> values);
    static TensorF32 vector(std::vector<float> values);
    static TensorF32 identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Rank-2 accessors; rank-1 tensors behave as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    std::span<const float> row(std::size_t r) const;
    std::span<float> row(std::size_t r);

    bool all_finite() const;
    std::string shape_string() const;

    friend bool bitwise_equal(const TensorF32& a, const TensorF32& b);

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

// a[m×k] · b[k×n]. Throws ShapeError when the inner dimensions disagree.
TensorF32 matmul(const TensorF32& a, const TensorF32& b);

// Row softmax with row-max subtraction and double accumulation. With `causal`, entries above
// the diagonal are exactly zero. Throws NumericError on NaN input.
TensorF32 masked_softmax_rows(const TensorF32& logits, bool causal);

struct ArgmaxResult {
    std::size_t index = 0;
    float value = 0.0f;
    std::optional<float> runner_up;  // absent when only one position is considered
};

// Maximum over positions [0, limit]; ties go to the smallest index.
ArgmaxResult argmax_with_runnerup(std::span<const float> values, std::size_t limit);

}  // namespace ilens
