#include <algorithm>
#include <cmath>

#include "engine.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/trainer.hpp"

namespace ilens {

namespace {

struct DoubleModel {
    std::vector<std::vector<double>> store;
    detail::ParamPtrs<double> params;
};

DoubleModel to_double(const ModelWeights& w) {
    DoubleModel m;
    for (const auto& t : w.tensors()) m.store.emplace_back(t.data().begin(), t.data().end());
    for (const auto& s : m.store) m.params.at.push_back(s.data());
    return m;
}

double mean_loss(const ParamLayout& layout, const detail::ParamPtrs<double>& p,
                 const std::vector<std::vector<TokenId>>& batch, std::size_t count) {
    detail::ForwardCache<double> cache;
    double total = 0.0;
    for (const auto& seq : batch) {
        detail::forward_pass<double>(layout, p, seq, false, cache);
        total += detail::sum_next_token_loss(cache.logits, seq);
    }
    return total / static_cast<double>(count);
}

}  // namespace

GradCheckResult grad_check(const ModelWeights& weights, const std::vector<std::vector<TokenId>>& batch,
                           const GradCheckOptions& opts) {
    const ModelConfig& cfg = weights.config();
    const ParamLayout& layout = weights.layout();
    std::size_t count = 0;
    for (const auto& seq : batch) {
        if (seq.size() < 2 || seq.size() > cfg.max_seq_len) throw InputError("grad_check: bad sequence length");
        for (TokenId t : seq) {
            if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) throw InputError("grad_check: bad token id");
        }
        count += seq.size() - 1;
    }
    if (count == 0) throw InputError("grad_check: empty batch");

    DoubleModel model = to_double(weights);
    std::vector<std::vector<double>> grad_store;
    detail::GradPtrs<double> grads;
    for (const auto& s : model.store) grad_store.emplace_back(s.size(), 0.0);
    for (auto& g : grad_store) grads.at.push_back(g.data());
    {
        detail::ForwardCache<double> cache;
        for (const auto& seq : batch) {
            detail::forward_pass<double>(layout, model.params, seq, false, cache);
            detail::backward_pass<double>(layout, model.params, seq, cache, 1.0 / static_cast<double>(count), grads);
        }
    }

    // Round-robin over tensors so every parameter kind is exercised; embedding and position
    // rows are drawn from the ones the batch touches.
    Rng rng(derive_seed(opts.seed, "grad-check"));
    const std::size_t n_tensors = model.store.size();
    GradCheckResult result;
    double sum = 0.0;
    for (std::size_t k = 0; k < opts.n_params; ++k) {
        const std::size_t ti = k % n_tensors;
        const auto& shape = layout.shape(ti);
        std::size_t flat = 0;
        if (ti == layout.embed() || ti == layout.pos()) {
            const auto& seq = batch[uniform_index(rng, batch.size())];
            const std::size_t at = uniform_index(rng, seq.size());
            const std::size_t row = ti == layout.embed() ? static_cast<std::size_t>(seq[at]) : at;
            flat = row * shape[1] + uniform_index(rng, shape[1]);
        } else {
            flat = uniform_index(rng, model.store[ti].size());
        }
        double& theta = model.store[ti][flat];
        const double saved = theta;
        // Fourth-order central stencil: a step large enough to keep roundoff off near-zero
        // gradients still has negligible truncation error through the GELU and norm curvature.
        const double h = opts.epsilon;
        auto loss_at = [&](double offset) {
            theta = saved + offset;
            return mean_loss(layout, model.params, batch, count);
        };
        const double f1 = loss_at(h), b1 = loss_at(-h), f2 = loss_at(2.0 * h), b2 = loss_at(-2.0 * h);
        theta = saved;
        const double numeric = (8.0 * (f1 - b1) - (f2 - b2)) / (12.0 * h);
        double analytic = grad_store[ti][flat];
        if (opts.flip_analytic_sign) analytic = -analytic;
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double rel = std::abs(analytic - numeric) / denom;
        result.max_rel_error = std::max(result.max_rel_error, rel);
        sum += rel;
        ++result.n_checked;
    }
    result.mean_rel_error = result.n_checked ? sum / static_cast<double>(result.n_checked) : 0.0;
    return result;
}

}  // namespace ilens
