#include "induction_lens/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "engine.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"

namespace ilens {

std::string to_string(Variant v) {
    return v == Variant::full ? "full" : "attention-only";
}

Variant parse_variant(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "attention-only" || s == "attention_only") return Variant::attention_only;
    throw ConfigError("unknown model variant '" + s + "'");
}

void ModelConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_head < 1 || vocab_size < 1) {
        throw ConfigError("model sizes must all be >= 1");
    }
    if (max_seq_len < 2) throw ConfigError("max_seq_len must be >= 2");
    if (d_model != n_heads * d_head) {
        throw ConfigError("d_model (" + std::to_string(d_model) + ") != n_heads * d_head (" +
                          std::to_string(n_heads) + " * " + std::to_string(d_head) + ")");
    }
}

ParamLayout::ParamLayout(const ModelConfig& config) : config_(config) {
    config_.validate();
    const std::size_t d = config_.d_model, dh = config_.d_head;
    auto add = [&](std::string name, std::vector<std::size_t> shape) {
        names_.push_back(std::move(name));
        shapes_.push_back(std::move(shape));
    };
    add("embed", {config_.vocab_size, d});
    add("pos", {config_.max_seq_len, d});
    static const char* parts[] = {"query", "key", "value", "output"};
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (std::size_t h = 0; h < config_.n_heads; ++h) {
            const std::string head_prefix = prefix + "head" + std::to_string(h) + ".";
            for (int p = 0; p < 4; ++p) {
                add(head_prefix + parts[p], p == 3 ? std::vector<std::size_t>{dh, d}
                                                   : std::vector<std::size_t>{d, dh});
            }
        }
        if (config_.variant == Variant::full) {
            add(prefix + "attn_norm", {d});
            add(prefix + "mlp_norm", {d});
            add(prefix + "mlp_in", {d, config_.d_mlp()});
            add(prefix + "mlp_out", {config_.d_mlp(), d});
        }
    }
    add("unembed", {d, config_.vocab_size});
}

std::optional<std::size_t> ParamLayout::find(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ParamLayout::per_layer() const {
    return 4 * config_.n_heads + (config_.variant == Variant::full ? 4 : 0);
}

std::size_t ParamLayout::layer_base(std::size_t layer) const {
    if (layer >= config_.n_layers) {
        throw InputError("layer " + std::to_string(layer) + " out of range (" +
                         std::to_string(config_.n_layers) + " layers)");
    }
    return 2 + layer * per_layer();
}

std::size_t ParamLayout::head(std::size_t layer, std::size_t head, HeadPart part) const {
    if (head >= config_.n_heads) {
        throw InputError("head " + std::to_string(head) + " out of range (" +
                         std::to_string(config_.n_heads) + " heads)");
    }
    return layer_base(layer) + 4 * head + static_cast<std::size_t>(part);
}

namespace {
void require_full(const ModelConfig& c) {
    if (c.variant != Variant::full) throw InputError("attention-only models have no MLP/norm tensors");
}
}  // namespace

std::size_t ParamLayout::attn_norm(std::size_t layer) const {
    require_full(config_);
    return layer_base(layer) + 4 * config_.n_heads;
}
std::size_t ParamLayout::mlp_norm(std::size_t layer) const { return attn_norm(layer) + 1; }
std::size_t ParamLayout::mlp_in(std::size_t layer) const { return attn_norm(layer) + 2; }
std::size_t ParamLayout::mlp_out(std::size_t layer) const { return attn_norm(layer) + 3; }

ModelWeights::ModelWeights(const ModelConfig& config) : layout_(config) {
    tensors_.reserve(layout_.count());
    for (std::size_t i = 0; i < layout_.count(); ++i) tensors_.emplace_back(layout_.shape(i));
    if (config.variant == Variant::full) {
        for (std::size_t l = 0; l < config.n_layers; ++l) {
            for (float& g : tensors_[layout_.attn_norm(l)].data()) g = 1.0f;
            for (float& g : tensors_[layout_.mlp_norm(l)].data()) g = 1.0f;
        }
    }
}

TensorF32 ModelWeights::stacked_output(std::size_t layer) const {
    const auto& cfg = config();
    TensorF32 out({cfg.n_heads * cfg.d_head, cfg.d_model});
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const auto src = output(layer, h).data();
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(h * src.size()));
    }
    return out;
}

std::size_t ModelWeights::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

bool ModelWeights::all_finite() const {
    return std::all_of(tensors_.begin(), tensors_.end(), [](const TensorF32& t) { return t.all_finite(); });
}

bool bitwise_equal(const ModelWeights& a, const ModelWeights& b) {
    if (!(a.config() == b.config())) return false;
    for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
        if (!bitwise_equal(a.tensors_[i], b.tensors_[i])) return false;
    }
    return true;
}

ModelWeights init_random(const ModelConfig& config, std::uint64_t seed, const InitOptions& opts) {
    ModelWeights w(config);
    const ParamLayout& layout = w.layout();
    const double d = static_cast<double>(config.d_model);
    for (std::size_t i = 0; i < layout.count(); ++i) {
        const std::string& name = layout.name(i);
        if (name.ends_with("_norm")) continue;
        double std_dev;
        if (i == layout.embed() || i == layout.pos()) {
            std_dev = opts.embed_std;
        } else if (name.ends_with(".output")) {
            std_dev = opts.projection_gain / std::sqrt(static_cast<double>(config.d_head)) /
                      std::sqrt(2.0 * static_cast<double>(config.n_layers));
        } else if (name.ends_with("mlp_out")) {
            std_dev = opts.projection_gain / std::sqrt(static_cast<double>(config.d_mlp())) /
                      std::sqrt(2.0 * static_cast<double>(config.n_layers));
        } else {
            std_dev = opts.projection_gain / std::sqrt(d);
        }
        Rng rng(derive_seed(seed, name));
        for (float& v : w.tensor(i).data()) v = static_cast<float>(std_dev * standard_normal(rng));
    }
    return w;
}

namespace {

void check_tokens(const ModelConfig& cfg, std::span<const TokenId> tokens) {
    if (tokens.empty()) throw InputError("forward: empty token sequence");
    if (tokens.size() > cfg.max_seq_len) {
        throw InputError("forward: sequence length " + std::to_string(tokens.size()) +
                         " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    }
    for (TokenId t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
            throw InputError("forward: token id " + std::to_string(t) + " outside vocabulary of " +
                             std::to_string(cfg.vocab_size));
        }
    }
}

detail::ParamPtrs<float> param_ptrs(const ModelWeights& w) {
    detail::ParamPtrs<float> p;
    p.at.reserve(w.tensors().size());
    for (const auto& t : w.tensors()) p.at.push_back(t.data().data());
    return p;
}

TensorF32 to_tensor(const detail::Mat<float>& m) {
    TensorF32 t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    std::memcpy(t.data().data(), m.data(), t.size() * sizeof(float));
    return t;
}

}  // namespace

ForwardResult forward(const ModelWeights& weights, std::span<const TokenId> tokens,
                      const ForwardOptions& opts) {
    const ModelConfig& cfg = weights.config();
    check_tokens(cfg, tokens);
    detail::ForwardCache<float> cache;
    detail::forward_pass<float>(weights.layout(), param_ptrs(weights), tokens, opts.ablate_mlp_and_norm,
                                cache);
    ForwardResult result;
    result.logits = to_tensor(cache.logits);
    if (!result.logits.all_finite()) throw NumericError("forward: non-finite logits");
    if (opts.capture_attention) {
        AttentionRecord rec;
        rec.n_layers = cfg.n_layers;
        rec.n_heads = cfg.n_heads;
        rec.tokens.assign(tokens.begin(), tokens.end());
        rec.patterns.reserve(cfg.n_layers * cfg.n_heads);
        for (const auto& layer : cache.layers) {
            for (const auto& head : layer.heads) rec.patterns.push_back(to_tensor(head.attn));
        }
        result.attention = std::move(rec);
    }
    return result;
}

TokenId greedy_next_token(const ModelWeights& weights, std::span<const TokenId> prompt) {
    const ForwardResult r = forward(weights, prompt);
    const auto last = r.logits.row(r.logits.rows() - 1);
    return static_cast<TokenId>(argmax_with_runnerup(last, last.size() - 1).index);
}

std::vector<double> token_losses(const ModelWeights& weights, std::span<const TokenId> tokens) {
    const ForwardResult r = forward(weights, tokens);
    std::vector<double> losses;
    losses.reserve(tokens.size() - 1);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const auto row = r.logits.row(i);
        const float peak = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (float v : row) z += std::exp(static_cast<double>(v) - peak);
        losses.push_back(std::log(z) + peak - static_cast<double>(row[tokens[i + 1]]));
    }
    return losses;
}

}  // namespace ilens
