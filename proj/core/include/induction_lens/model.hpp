#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "induction_lens/tensor.hpp"

namespace ilens {

using TokenId = std::int32_t;

enum class Variant { attention_only, full };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct ModelConfig {
    std::size_t n_layers = 4;
    std::size_t n_heads = 4;
    std::size_t d_model = 128;
    std::size_t d_head = 32;
    std::size_t vocab_size = 2048;
    std::size_t max_seq_len = 256;
    Variant variant = Variant::full;

    std::size_t d_mlp() const { return 4 * d_model; }
    // Throws ConfigError unless d_model == n_heads * d_head, every size >= 1 and max_seq_len >= 2.
    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Canonical tensor order and naming shared by the weights container, gradients, the optimizer
// and the on-disk format.
class ParamLayout {
public:
    enum class HeadPart { query = 0, key = 1, value = 2, output = 3 };

    explicit ParamLayout(const ModelConfig& config);

    std::size_t count() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::size_t>& shape(std::size_t i) const { return shapes_[i]; }
    std::optional<std::size_t> find(const std::string& name) const;

    std::size_t embed() const { return 0; }
    std::size_t pos() const { return 1; }
    std::size_t head(std::size_t layer, std::size_t head, HeadPart part) const;
    // Full variant only.
    std::size_t attn_norm(std::size_t layer) const;
    std::size_t mlp_norm(std::size_t layer) const;
    std::size_t mlp_in(std::size_t layer) const;
    std::size_t mlp_out(std::size_t layer) const;
    std::size_t unembed() const { return names_.size() - 1; }

    const ModelConfig& config() const { return config_; }

private:
    std::size_t layer_base(std::size_t layer) const;
    std::size_t per_layer() const;

    ModelConfig config_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::size_t>> shapes_;
};

// W_e, W_pos, per-head W_q/W_k/W_v (d×d_h) and W_o^h (d_h×d), optional MLP and norm gains, W_u.
class ModelWeights {
public:
    explicit ModelWeights(const ModelConfig& config);  // all zeros, norm gains one

    const ModelConfig& config() const { return layout_.config(); }
    const ParamLayout& layout() const { return layout_; }

    TensorF32& tensor(std::size_t i) { return tensors_[i]; }
    const TensorF32& tensor(std::size_t i) const { return tensors_[i]; }
    std::vector<TensorF32>& tensors() { return tensors_; }
    const std::vector<TensorF32>& tensors() const { return tensors_; }

    const TensorF32& embed() const { return tensors_[layout_.embed()]; }
    TensorF32& embed() { return tensors_[layout_.embed()]; }
    const TensorF32& pos() const { return tensors_[layout_.pos()]; }
    TensorF32& pos() { return tensors_[layout_.pos()]; }
    const TensorF32& unembed() const { return tensors_[layout_.unembed()]; }
    TensorF32& unembed() { return tensors_[layout_.unembed()]; }
    const TensorF32& query(std::size_t l, std::size_t h) const { return part(l, h, ParamLayout::HeadPart::query); }
    TensorF32& query(std::size_t l, std::size_t h) { return part(l, h, ParamLayout::HeadPart::query); }
    const TensorF32& key(std::size_t l, std::size_t h) const { return part(l, h, ParamLayout::HeadPart::key); }
    TensorF32& key(std::size_t l, std::size_t h) { return part(l, h, ParamLayout::HeadPart::key); }
    const TensorF32& value(std::size_t l, std::size_t h) const { return part(l, h, ParamLayout::HeadPart::value); }
    TensorF32& value(std::size_t l, std::size_t h) { return part(l, h, ParamLayout::HeadPart::value); }
    const TensorF32& output(std::size_t l, std::size_t h) const { return part(l, h, ParamLayout::HeadPart::output); }
    TensorF32& output(std::size_t l, std::size_t h) { return part(l, h, ParamLayout::HeadPart::output); }

    // W_o of a layer as the vertical stack of its per-head blocks.
    TensorF32 stacked_output(std::size_t layer) const;

    std::size_t parameter_count() const;
    bool all_finite() const;

    friend bool bitwise_equal(const ModelWeights& a, const ModelWeights& b);

private:
    const TensorF32& part(std::size_t l, std::size_t h, ParamLayout::HeadPart p) const {
        return tensors_[layout_.head(l, h, p)];
    }
    TensorF32& part(std::size_t l, std::size_t h, ParamLayout::HeadPart p) {
        return tensors_[layout_.head(l, h, p)];
    }

    ParamLayout layout_;
    std::vector<TensorF32> tensors_;
};

struct InitOptions {
    float embed_std = 0.02f;
    // Multiplies the default fan-in scaled std of every projection matrix.
    float projection_gain = 1.0f;
};

ModelWeights init_random(const ModelConfig& config, std::uint64_t seed, const InitOptions& opts = {});

// Per-(layer, head) causal attention matrices of one forward pass.
struct AttentionRecord {
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<TokenId> tokens;
    std::vector<TensorF32> patterns;  // index layer * n_heads + head, each N×N

    const TensorF32& at(std::size_t layer, std::size_t head) const {
        return patterns[layer * n_heads + head];
    }
};

struct ForwardOptions {
    bool capture_attention = false;
    // Drops MLP and norm sublayers of the full variant, leaving the attention-only computation.
    bool ablate_mlp_and_norm = false;
};

struct ForwardResult {
    TensorF32 logits;  // N×|V|, row i predicts token i+1
    std::optional<AttentionRecord> attention;
};

// Throws InputError on out-of-range token ids or sequences longer than max_seq_len.
ForwardResult forward(const ModelWeights& weights, std::span<const TokenId> tokens,
                      const ForwardOptions& opts = {});

// Greedy single-token continuation of the prompt.
TokenId greedy_next_token(const ModelWeights& weights, std::span<const TokenId> prompt);

// Per-position next-token cross-entropy in nats (length N-1).
std::vector<double> token_losses(const ModelWeights& weights, std::span<const TokenId> tokens);

// Two-layer, one-head-per-layer attention-only model wired as a previous-token head feeding an
// induction head. d_model = 2V + N; blocks T0 (token), T1 (previous token), P (position).
// Position 0 has no predecessor, so its T1 slot holds its own token: a token first seen at
// position 0 splits the induction head between positions 0 and 1.
struct InductionModelSpec {
    std::size_t vocab_size = 32;
    std::size_t max_seq_len = 64;
    // Attention logit gain after the 1/sqrt(d_head) scaling.
    float qk_gain = 50.0f;
    // Gain of the induction head's OV circuit on the token block.
    float ov_gain = 2.0f;
};

ModelWeights build_induction_model(std::size_t vocab_size, std::size_t max_seq_len);
ModelWeights build_induction_model(const InductionModelSpec& spec);

}  // namespace ilens
