#include "induction_lens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "eigen_types.hpp"
#include "induction_lens/errors.hpp"

namespace ilens {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

TensorF32::TensorF32(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0f) {}

TensorF32::TensorF32(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shape_string() + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
}

TensorF32 TensorF32::matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
    return TensorF32({rows, cols}, std::move(values));
}

TensorF32 TensorF32::vector(std::vector<float> values) {
    const std::size_t n = values.size();
    return TensorF32({n}, std::move(values));
}

TensorF32 TensorF32::identity(std::size_t n) {
    TensorF32 t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0f;
    return t;
}

std::size_t TensorF32::rows() const {
    if (shape_.size() == 1) return 1;
    if (shape_.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_string());
    return shape_[0];
}

std::size_t TensorF32::cols() const {
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_string());
    return shape_[1];
}

std::span<const float> TensorF32::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const float>(data_).subspan(r * c, c);
}

std::span<float> TensorF32::row(std::size_t r) {
    const std::size_t c = cols();
    return std::span<float>(data_).subspan(r * c, c);
}

bool TensorF32::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::string TensorF32::shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << ']';
    return os.str();
}

bool bitwise_equal(const TensorF32& a, const TensorF32& b) {
    return a.shape_ == b.shape_ &&
           (a.data_.empty() ||
            std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0);
}

TensorF32 matmul(const TensorF32& a, const TensorF32& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
    }
    TensorF32 out({a.rows(), b.cols()});
    detail::MatMap<float>(out.data().data(), a.rows(), b.cols()).noalias() =
        detail::ConstMatMap<float>(a.data().data(), a.rows(), a.cols()) *
        detail::ConstMatMap<float>(b.data().data(), b.rows(), b.cols());
    return out;
}

TensorF32 masked_softmax_rows(const TensorF32& logits, bool causal) {
    const std::size_t n_rows = logits.rows();
    const std::size_t n_cols = logits.cols();
    if (causal && n_rows != n_cols) {
        throw ShapeError("causal softmax needs a square matrix, got " + logits.shape_string());
    }
    TensorF32 out(logits.shape());
    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto in = logits.row(r);
        auto dst = out.row(r);
        const std::size_t width = causal ? r + 1 : n_cols;
        float peak = -std::numeric_limits<float>::infinity();
        for (std::size_t c = 0; c < width; ++c) {
            if (std::isnan(in[c])) throw NumericError("softmax: NaN in row " + std::to_string(r));
            peak = std::max(peak, in[c]);
        }
        double total = 0.0;
        std::vector<double> e(width);
        for (std::size_t c = 0; c < width; ++c) {
            e[c] = std::exp(static_cast<double>(in[c]) - static_cast<double>(peak));
            total += e[c];
        }
        for (std::size_t c = 0; c < width; ++c) dst[c] = static_cast<float>(e[c] / total);
    }
    return out;
}

ArgmaxResult argmax_with_runnerup(std::span<const float> values, std::size_t limit) {
    if (values.empty()) throw DomainError("argmax over an empty slice");
    if (limit >= values.size()) {
        throw DomainError("argmax limit " + std::to_string(limit) + " outside slice of length " +
                          std::to_string(values.size()));
    }
    ArgmaxResult result{0, values[0], std::nullopt};
    for (std::size_t k = 1; k <= limit; ++k) {
        if (values[k] > result.value) {
            result.index = k;
            result.value = values[k];
        }
    }
    for (std::size_t k = 0; k <= limit; ++k) {
        if (k == result.index) continue;
        if (!result.runner_up || values[k] > *result.runner_up) result.runner_up = values[k];
    }
    return result;
}

}  // namespace ilens
