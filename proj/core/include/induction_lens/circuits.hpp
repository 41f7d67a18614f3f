#pragma once

#include <span>
#include <vector>

#include "induction_lens/model.hpp"
#include "induction_lens/tensor.hpp"

namespace ilens {

// QK and OV circuits of one head: W_QK = W_q W_k^T and W_OV = W_v W_o^h, both d×d.
struct CircuitMatrices {
    std::size_t layer = 0;
    std::size_t head = 0;
    std::size_t d_head = 1;
    TensorF32 qk;
    TensorF32 ov;
};

// Products accumulate in float64 and are stored as float32. Throws InputError on bad indices.
CircuitMatrices build_circuits(const ModelWeights& weights, std::size_t layer, std::size_t head);

// W_e[t_i] + W_pos[i] for each position; with `normalize`, each row is scaled to unit RMS.
TensorF32 embed_sequence(const ModelWeights& weights, std::span<const TokenId> tokens, bool normalize = false);

// Causal attention softmax(x W_QK x^T / sqrt(d_head)) from the circuit alone; `scale` = false
// drops the 1/sqrt(d_head) factor.
TensorF32 circuit_attention(const TensorF32& x, const CircuitMatrices& c, bool scale = true);

// Vocabulary logits x_j W_OV W_u.
TensorF32 ov_vocab_projection(std::span<const float> x_j, const CircuitMatrices& c, const TensorF32& unembed);

// Same projection through a precomputed W_OV W_u, accumulated and returned in float64.
class OvProjector {
public:
    OvProjector(const CircuitMatrices& c, const TensorF32& unembed);
    std::vector<double> logits(std::span<const float> x_j) const;
    std::size_t vocab_size() const { return vocab_; }

private:
    std::size_t d_ = 0, vocab_ = 0;
    std::vector<double> ov_unembed_;  // d × |V|, row-major
};

// Largest elementwise gap between the per-head attention layer computed the standard way
// and through the QK/OV circuits, both applied to the same x with no norms.
double verify_mha_rewrite(const ModelWeights& weights, std::size_t layer, const TensorF32& x);

}  // namespace ilens
