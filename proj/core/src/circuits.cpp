#include "induction_lens/circuits.hpp"

#include <cmath>

#include "eigen_types.hpp"
#include "induction_lens/errors.hpp"

namespace ilens {

namespace {

using detail::ConstMatMap;
using detail::Mat;

void check_head(const ModelConfig& cfg, std::size_t layer, std::size_t head) {
    if (layer >= cfg.n_layers || head >= cfg.n_heads) {
        throw InputError("head (" + std::to_string(layer) + ", " + std::to_string(head) + ") outside a " +
                         std::to_string(cfg.n_layers) + "x" + std::to_string(cfg.n_heads) + " model");
    }
}

TensorF32 to_float_tensor(const Mat<double>& m) {
    TensorF32 t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    auto out = t.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
    return t;
}

Mat<double> as_double(const TensorF32& t) {
    return ConstMatMap<float>(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                              static_cast<Eigen::Index>(t.cols()))
        .cast<double>();
}

}  // namespace

CircuitMatrices build_circuits(const ModelWeights& weights, std::size_t layer, std::size_t head) {
    check_head(weights.config(), layer, head);
    const Mat<double> wq = as_double(weights.query(layer, head));
    const Mat<double> wk = as_double(weights.key(layer, head));
    const Mat<double> wv = as_double(weights.value(layer, head));
    const Mat<double> wo = as_double(weights.output(layer, head));
    CircuitMatrices c;
    c.layer = layer;
    c.head = head;
    c.d_head = weights.config().d_head;
    c.qk = to_float_tensor(wq * wk.transpose());
    c.ov = to_float_tensor(wv * wo);
    return c;
}

TensorF32 embed_sequence(const ModelWeights& weights, std::span<const TokenId> tokens, bool normalize) {
    const ModelConfig& cfg = weights.config();
    if (tokens.empty() || tokens.size() > cfg.max_seq_len) {
        throw InputError("embed_sequence: length " + std::to_string(tokens.size()) + " outside [1, " +
                         std::to_string(cfg.max_seq_len) + "]");
    }
    TensorF32 x({tokens.size(), cfg.d_model});
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= cfg.vocab_size) {
            throw InputError("embed_sequence: token id " + std::to_string(tokens[i]) + " outside vocabulary");
        }
        const auto e = weights.embed().row(static_cast<std::size_t>(tokens[i]));
        const auto p = weights.pos().row(i);
        auto out = x.row(i);
        for (std::size_t k = 0; k < cfg.d_model; ++k) out[k] = e[k] + p[k];
        if (normalize) {
            double ss = 0.0;
            for (float v : out) ss += static_cast<double>(v) * v;
            const double inv = 1.0 / std::sqrt(ss / static_cast<double>(cfg.d_model) + 1e-5);
            for (float& v : out) v = static_cast<float>(v * inv);
        }
    }
    return x;
}

TensorF32 circuit_attention(const TensorF32& x, const CircuitMatrices& c, bool scale) {
    if (x.rank() != 2 || x.cols() != c.qk.rows()) {
        throw ShapeError("circuit_attention: x is " + x.shape_string() + " but W_QK is " + c.qk.shape_string());
    }
    const Mat<double> xd = as_double(x);
    Mat<double> logits = xd * as_double(c.qk) * xd.transpose();
    if (scale) logits /= std::sqrt(static_cast<double>(c.d_head));
    const Eigen::Index n = logits.rows();
    TensorF32 out({x.rows(), x.rows()});
    for (Eigen::Index i = 0; i < n; ++i) {
        const double peak = logits.row(i).head(i + 1).maxCoeff();
        double total = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) total += std::exp(logits(i, k) - peak);
        for (Eigen::Index k = 0; k <= i; ++k) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) =
                static_cast<float>(std::exp(logits(i, k) - peak) / total);
        }
    }
    return out;
}

TensorF32 ov_vocab_projection(std::span<const float> x_j, const CircuitMatrices& c, const TensorF32& unembed) {
    const std::vector<double> logits = OvProjector(c, unembed).logits(x_j);
    std::vector<float> out(logits.begin(), logits.end());
    return TensorF32::vector(std::move(out));
}

OvProjector::OvProjector(const CircuitMatrices& c, const TensorF32& unembed) {
    if (unembed.rank() != 2 || unembed.rows() != c.ov.cols()) {
        throw ShapeError("ov_vocab_projection: W_OV is " + c.ov.shape_string() + " but W_u is " +
                         unembed.shape_string());
    }
    d_ = c.ov.rows();
    vocab_ = unembed.cols();
    const Mat<double> m = as_double(c.ov) * as_double(unembed);
    ov_unembed_.assign(m.data(), m.data() + m.size());
}

std::vector<double> OvProjector::logits(std::span<const float> x_j) const {
    if (x_j.size() != d_) {
        throw ShapeError("ov_vocab_projection: x_j has " + std::to_string(x_j.size()) + " entries, expected " +
                         std::to_string(d_));
    }
    const Eigen::Map<const Mat<double>> m(ov_unembed_.data(), static_cast<Eigen::Index>(d_),
                                          static_cast<Eigen::Index>(vocab_));
    const Eigen::Matrix<double, 1, Eigen::Dynamic> x =
        Eigen::Map<const Eigen::Matrix<float, 1, Eigen::Dynamic>>(x_j.data(), static_cast<Eigen::Index>(d_))
            .cast<double>();
    const Eigen::Matrix<double, 1, Eigen::Dynamic> out = x * m;
    return {out.data(), out.data() + out.size()};
}

double verify_mha_rewrite(const ModelWeights& weights, std::size_t layer, const TensorF32& x) {
    const ModelConfig& cfg = weights.config();
    check_head(cfg, layer, 0);
    if (x.rank() != 2 || x.cols() != cfg.d_model) {
        throw ShapeError("verify_mha_rewrite: x is " + x.shape_string() + ", expected N x " +
                         std::to_string(cfg.d_model));
    }
    const float scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(cfg.d_head)));
    auto scaled = [scale](TensorF32 t) {
        for (float& v : t.data()) v *= scale;
        return t;
    };
    auto transpose = [](const TensorF32& t) {
        TensorF32 out({t.cols(), t.rows()});
        for (std::size_t r = 0; r < t.rows(); ++r) {
            for (std::size_t c = 0; c < t.cols(); ++c) out(c, r) = t(r, c);
        }
        return out;
    };
    auto accumulate = [](TensorF32& into, const TensorF32& add) {
        for (std::size_t i = 0; i < into.size(); ++i) into[i] += add[i];
    };

    TensorF32 standard({x.rows(), cfg.d_model});
    TensorF32 rewritten({x.rows(), cfg.d_model});
    const TensorF32 xt = transpose(x);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const TensorF32 q = matmul(x, weights.query(layer, h));
        const TensorF32 k = matmul(x, weights.key(layer, h));
        const TensorF32 v = matmul(x, weights.value(layer, h));
        const TensorF32 a = masked_softmax_rows(scaled(matmul(q, transpose(k))), true);
        accumulate(standard, matmul(matmul(a, v), weights.output(layer, h)));

        const CircuitMatrices c = build_circuits(weights, layer, h);
        const TensorF32 a2 = masked_softmax_rows(scaled(matmul(matmul(x, c.qk), xt)), true);
        accumulate(rewritten, matmul(a2, matmul(x, c.ov)));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < standard.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(standard[i]) - rewritten[i]));
    }
    return worst;
}

}  // namespace ilens
