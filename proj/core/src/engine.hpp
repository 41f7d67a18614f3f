#pragma once

// Scalar-generic transformer forward/backward over the fixed operator set (embedding gather,
// matmul, causal softmax attention, RMS norm, tanh-GELU). Instantiated for float (training,
// analysis) and double (finite-difference gradient checks).

#include <cmath>
#include <span>
#include <vector>

#include "eigen_types.hpp"
#include "induction_lens/model.hpp"

namespace ilens::detail {

constexpr double kRmsEps = 1e-5;

template <typename T>
struct ParamPtrs {
    std::vector<const T*> at;  // ParamLayout order
};

template <typename T>
struct GradPtrs {
    std::vector<T*> at;  // ParamLayout order, accumulated into
};

template <typename T>
struct HeadCache {
    Mat<T> q, k, v, attn, z;
};

template <typename T>
struct LayerCache {
    Mat<T> x_in;
    Vec<T> inv_rms_attn;
    Mat<T> normed_attn;  // input to the heads (== x_in without norms)
    std::vector<HeadCache<T>> heads;
    Mat<T> x_mid;
    Vec<T> inv_rms_mlp;
    Mat<T> normed_mlp, hidden_pre, hidden_act;
};

template <typename T>
struct ForwardCache {
    bool with_norm_mlp = false;
    Mat<T> x0;
    std::vector<LayerCache<T>> layers;
    Mat<T> x_final;
    Mat<T> logits;
};

template <typename T>
inline T gelu(T x) {
    const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
    const T inner = c * (x + static_cast<T>(0.044715) * x * x * x);
    return static_cast<T>(0.5) * x * (static_cast<T>(1) + std::tanh(inner));
}

template <typename T>
inline T gelu_grad(T x) {
    const T c = static_cast<T>(0.7978845608028654);
    const T inner = c * (x + static_cast<T>(0.044715) * x * x * x);
    const T th = std::tanh(inner);
    const T dinner = c * (static_cast<T>(1) + static_cast<T>(3 * 0.044715) * x * x);
    return static_cast<T>(0.5) * (static_cast<T>(1) + th) +
           static_cast<T>(0.5) * x * (static_cast<T>(1) - th * th) * dinner;
}

template <typename T>
void rms_norm_forward(const Mat<T>& x, const T* gain, Vec<T>& inv_rms, Mat<T>& out) {
    const Eigen::Index n = x.rows(), d = x.cols();
    inv_rms.resize(n);
    out.resize(n, d);
    ConstRowMap<T> g(gain, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        double ss = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) ss += static_cast<double>(x(i, k)) * x(i, k);
        const T r = static_cast<T>(1.0 / std::sqrt(ss / static_cast<double>(d) + kRmsEps));
        inv_rms(i) = r;
        out.row(i) = (x.row(i) * r).cwiseProduct(g);
    }
}

// Returns dx; accumulates dgain.
template <typename T>
Mat<T> rms_norm_backward(const Mat<T>& x, const T* gain, const Vec<T>& inv_rms, const Mat<T>& dout,
                         T* dgain) {
    const Eigen::Index n = x.rows(), d = x.cols();
    ConstRowMap<T> g(gain, d);
    RowMap<T> dg(dgain, d);
    Mat<T> dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const RowVec<T> xhat = x.row(i) * inv_rms(i);
        dg += dout.row(i).cwiseProduct(xhat);
        const RowVec<T> dxhat = dout.row(i).cwiseProduct(g);
        double dot = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) dot += static_cast<double>(dxhat(k)) * xhat(k);
        const T mean_dot = static_cast<T>(dot / static_cast<double>(d));
        dx.row(i) = (dxhat - xhat * mean_dot) * inv_rms(i);
    }
    return dx;
}

// Row-wise causal softmax with float64 accumulation; entries above the diagonal are zero.
template <typename T>
void causal_softmax_inplace(Mat<T>& s) {
    const Eigen::Index n = s.rows();
    std::vector<double> e(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        T peak = s(i, 0);
        for (Eigen::Index k = 1; k <= i; ++k) peak = std::max(peak, s(i, k));
        double total = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) {
            e[k] = std::exp(static_cast<double>(s(i, k)) - static_cast<double>(peak));
            total += e[k];
        }
        for (Eigen::Index k = 0; k <= i; ++k) s(i, k) = static_cast<T>(e[k] / total);
        for (Eigen::Index k = i + 1; k < n; ++k) s(i, k) = T(0);
    }
}

template <typename T>
void forward_pass(const ParamLayout& layout, const ParamPtrs<T>& p, std::span<const TokenId> tokens,
                  bool ablate_norm_mlp, ForwardCache<T>& cache) {
    using HP = ParamLayout::HeadPart;
    const ModelConfig& cfg = layout.config();
    const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
    const Eigen::Index d = static_cast<Eigen::Index>(cfg.d_model);
    const Eigen::Index dh = static_cast<Eigen::Index>(cfg.d_head);
    const Eigen::Index vocab = static_cast<Eigen::Index>(cfg.vocab_size);
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.d_head)));
    const bool norm_mlp = cfg.variant == Variant::full && !ablate_norm_mlp;
    cache.with_norm_mlp = norm_mlp;

    ConstMatMap<T> embed(p.at[layout.embed()], vocab, d);
    ConstMatMap<T> pos(p.at[layout.pos()], static_cast<Eigen::Index>(cfg.max_seq_len), d);
    cache.x0.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) cache.x0.row(i) = embed.row(tokens[i]) + pos.row(i);

    cache.layers.resize(cfg.n_layers);
    Mat<T> x = cache.x0;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        LayerCache<T>& lc = cache.layers[l];
        lc.x_in = x;
        if (norm_mlp) {
            rms_norm_forward<T>(x, p.at[layout.attn_norm(l)], lc.inv_rms_attn, lc.normed_attn);
        } else {
            lc.normed_attn = x;
        }
        lc.heads.resize(cfg.n_heads);
        Mat<T> attn_out = Mat<T>::Zero(n, d);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            HeadCache<T>& hc = lc.heads[h];
            ConstMatMap<T> wq(p.at[layout.head(l, h, HP::query)], d, dh);
            ConstMatMap<T> wk(p.at[layout.head(l, h, HP::key)], d, dh);
            ConstMatMap<T> wv(p.at[layout.head(l, h, HP::value)], d, dh);
            ConstMatMap<T> wo(p.at[layout.head(l, h, HP::output)], dh, d);
            hc.q.noalias() = lc.normed_attn * wq;
            hc.k.noalias() = lc.normed_attn * wk;
            hc.v.noalias() = lc.normed_attn * wv;
            hc.attn.noalias() = hc.q * hc.k.transpose();
            hc.attn *= scale;
            causal_softmax_inplace(hc.attn);
            hc.z.noalias() = hc.attn * hc.v;
            attn_out.noalias() += hc.z * wo;
        }
        x += attn_out;
        lc.x_mid = x;
        if (norm_mlp) {
            const Eigen::Index dm = static_cast<Eigen::Index>(cfg.d_mlp());
            ConstMatMap<T> w_in(p.at[layout.mlp_in(l)], d, dm);
            ConstMatMap<T> w_out(p.at[layout.mlp_out(l)], dm, d);
            rms_norm_forward<T>(x, p.at[layout.mlp_norm(l)], lc.inv_rms_mlp, lc.normed_mlp);
            lc.hidden_pre.noalias() = lc.normed_mlp * w_in;
            lc.hidden_act = lc.hidden_pre.unaryExpr([](T v) { return gelu(v); });
            x.noalias() += lc.hidden_act * w_out;
        }
    }
    cache.x_final = x;
    ConstMatMap<T> unembed(p.at[layout.unembed()], d, vocab);
    cache.logits.noalias() = x * unembed;
}

// Cross-entropy of predicting tokens[i+1] from row i, summed over rows 0..N-2.
template <typename T>
double sum_next_token_loss(const Mat<T>& logits, std::span<const TokenId> tokens) {
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < logits.rows(); ++i) {
        const T peak = logits.row(i).maxCoeff();
        double z = 0.0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            z += std::exp(static_cast<double>(logits(i, c)) - static_cast<double>(peak));
        }
        total += std::log(z) + static_cast<double>(peak) - static_cast<double>(logits(i, tokens[i + 1]));
    }
    return total;
}

// Backpropagates loss_scale * (summed next-token loss) into `grads`; returns the summed loss.
template <typename T>
double backward_pass(const ParamLayout& layout, const ParamPtrs<T>& p, std::span<const TokenId> tokens,
                     const ForwardCache<T>& cache, T loss_scale, GradPtrs<T>& grads) {
    using HP = ParamLayout::HeadPart;
    const ModelConfig& cfg = layout.config();
    const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
    const Eigen::Index d = static_cast<Eigen::Index>(cfg.d_model);
    const Eigen::Index dh = static_cast<Eigen::Index>(cfg.d_head);
    const Eigen::Index vocab = static_cast<Eigen::Index>(cfg.vocab_size);
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.d_head)));

    // d logits
    double total = 0.0;
    Mat<T> dlogits = Mat<T>::Zero(n, vocab);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const T peak = cache.logits.row(i).maxCoeff();
        double z = 0.0;
        for (Eigen::Index c = 0; c < vocab; ++c) {
            z += std::exp(static_cast<double>(cache.logits(i, c)) - static_cast<double>(peak));
        }
        const TokenId target = tokens[i + 1];
        total += std::log(z) + static_cast<double>(peak) - static_cast<double>(cache.logits(i, target));
        for (Eigen::Index c = 0; c < vocab; ++c) {
            const double prob =
                std::exp(static_cast<double>(cache.logits(i, c)) - static_cast<double>(peak)) / z;
            dlogits(i, c) = static_cast<T>(prob) * loss_scale;
        }
        dlogits(i, target) -= loss_scale;
    }

    ConstMatMap<T> unembed(p.at[layout.unembed()], d, vocab);
    MatMap<T>(grads.at[layout.unembed()], d, vocab).noalias() += cache.x_final.transpose() * dlogits;
    Mat<T> dx = dlogits * unembed.transpose();

    for (std::size_t li = cfg.n_layers; li-- > 0;) {
        const LayerCache<T>& lc = cache.layers[li];
        if (cache.with_norm_mlp) {
            const Eigen::Index dm = static_cast<Eigen::Index>(cfg.d_mlp());
            ConstMatMap<T> w_in(p.at[layout.mlp_in(li)], d, dm);
            ConstMatMap<T> w_out(p.at[layout.mlp_out(li)], dm, d);
            MatMap<T>(grads.at[layout.mlp_out(li)], dm, d).noalias() += lc.hidden_act.transpose() * dx;
            Mat<T> dhidden = dx * w_out.transpose();
            dhidden = dhidden.cwiseProduct(lc.hidden_pre.unaryExpr([](T v) { return gelu_grad(v); }));
            MatMap<T>(grads.at[layout.mlp_in(li)], d, dm).noalias() += lc.normed_mlp.transpose() * dhidden;
            const Mat<T> dnormed = dhidden * w_in.transpose();
            dx += rms_norm_backward<T>(lc.x_mid, p.at[layout.mlp_norm(li)], lc.inv_rms_mlp, dnormed,
                                       grads.at[layout.mlp_norm(li)]);
        }
        // dx is now d(x_mid); the attention block adds into the residual.
        Mat<T> dnormed_attn = Mat<T>::Zero(n, d);
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            const HeadCache<T>& hc = lc.heads[h];
            ConstMatMap<T> wq(p.at[layout.head(li, h, HP::query)], d, dh);
            ConstMatMap<T> wk(p.at[layout.head(li, h, HP::key)], d, dh);
            ConstMatMap<T> wv(p.at[layout.head(li, h, HP::value)], d, dh);
            ConstMatMap<T> wo(p.at[layout.head(li, h, HP::output)], dh, d);
            MatMap<T>(grads.at[layout.head(li, h, HP::output)], dh, d).noalias() += hc.z.transpose() * dx;
            const Mat<T> dz = dx * wo.transpose();
            const Mat<T> dattn = dz * hc.v.transpose();
            const Mat<T> dv = hc.attn.transpose() * dz;
            Mat<T> dscores(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                double dot = 0.0;
                for (Eigen::Index k = 0; k <= i; ++k) dot += static_cast<double>(dattn(i, k)) * hc.attn(i, k);
                for (Eigen::Index k = 0; k < n; ++k) {
                    dscores(i, k) = k <= i ? hc.attn(i, k) * (dattn(i, k) - static_cast<T>(dot)) * scale : T(0);
                }
            }
            const Mat<T> dq = dscores * hc.k;
            const Mat<T> dk = dscores.transpose() * hc.q;
            MatMap<T>(grads.at[layout.head(li, h, HP::query)], d, dh).noalias() += lc.normed_attn.transpose() * dq;
            MatMap<T>(grads.at[layout.head(li, h, HP::key)], d, dh).noalias() += lc.normed_attn.transpose() * dk;
            MatMap<T>(grads.at[layout.head(li, h, HP::value)], d, dh).noalias() += lc.normed_attn.transpose() * dv;
            dnormed_attn.noalias() += dq * wq.transpose();
            dnormed_attn.noalias() += dk * wk.transpose();
            dnormed_attn.noalias() += dv * wv.transpose();
        }
        if (cache.with_norm_mlp) {
            dx += rms_norm_backward<T>(lc.x_in, p.at[layout.attn_norm(li)], lc.inv_rms_attn, dnormed_attn,
                                       grads.at[layout.attn_norm(li)]);
        } else {
            dx += dnormed_attn;
        }
    }

    MatMap<T> dembed(grads.at[layout.embed()], vocab, d);
    MatMap<T> dpos(grads.at[layout.pos()], static_cast<Eigen::Index>(cfg.max_seq_len), d);
    for (Eigen::Index i = 0; i < n; ++i) {
        dembed.row(tokens[i]) += dx.row(i);
        dpos.row(i) += dx.row(i);
    }
    return total;
}

}  // namespace ilens::detail
