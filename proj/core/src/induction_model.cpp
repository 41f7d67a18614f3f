#include <cmath>

#include "induction_lens/errors.hpp"
#include "induction_lens/model.hpp"

namespace ilens {

ModelWeights build_induction_model(std::size_t vocab_size, std::size_t max_seq_len) {
    InductionModelSpec spec;
    spec.vocab_size = vocab_size;
    spec.max_seq_len = max_seq_len;
    return build_induction_model(spec);
}

ModelWeights build_induction_model(const InductionModelSpec& spec) {
    const std::size_t V = spec.vocab_size;
    const std::size_t N = spec.max_seq_len;
    if (V < 2) throw ConfigError("induction model needs vocab_size >= 2");
    if (N < 4) throw ConfigError("induction model needs max_seq_len >= 4");

    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 1;
    cfg.d_model = 2 * V + N;
    cfg.d_head = cfg.d_model;
    cfg.vocab_size = V;
    cfg.max_seq_len = N;
    cfg.variant = Variant::attention_only;

    const std::size_t t0 = 0, t1 = V, pos_block = 2 * V;
    // The forward pass divides attention logits by sqrt(d_head); pre-multiply so the
    // effective gain after scaling is qk_gain.
    const float gain = spec.qk_gain * static_cast<float>(std::sqrt(static_cast<double>(cfg.d_head)));

    ModelWeights w(cfg);
    for (std::size_t v = 0; v < V; ++v) {
        w.embed()(v, t0 + v) = 1.0f;
        w.unembed()(t0 + v, v) = 1.0f;
    }
    for (std::size_t p = 0; p < N; ++p) w.pos()(p, pos_block + p) = 1.0f;

    // Layer 0: previous-token head. Query at position p matches key at p-1; OV moves the
    // token block into T1.
    for (std::size_t p = 1; p < N; ++p) w.query(0, 0)(pos_block + p, pos_block + p - 1) = gain;
    for (std::size_t v = 0; v < V; ++v) w.output(0, 0)(t0 + v, t1 + v) = 1.0f;

    // Layer 1: induction head. Query token v matches keys whose T1 block holds v; OV copies
    // the attended token block.
    for (std::size_t v = 0; v < V; ++v) {
        w.query(1, 0)(t0 + v, t1 + v) = gain;
        w.output(1, 0)(t0 + v, t0 + v) = spec.ov_gain;
    }

    for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t i = 0; i < cfg.d_model; ++i) {
            w.key(l, 0)(i, i) = 1.0f;
            w.value(l, 0)(i, i) = 1.0f;
        }
    }
    return w;
}

}  // namespace ilens
