#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "induction_lens/corpus.hpp"
#include "induction_lens/model.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/vocab.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("ilens_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline ilens::ModelConfig small_config(ilens::Variant variant, std::size_t vocab = 24, std::size_t layers = 2,
                                       std::size_t heads = 2, std::size_t d_head = 8, std::size_t max_len = 32) {
    ilens::ModelConfig c;
    c.n_layers = layers;
    c.n_heads = heads;
    c.d_head = d_head;
    c.d_model = heads * d_head;
    c.vocab_size = vocab;
    c.max_seq_len = max_len;
    c.variant = variant;
    return c;
}

// Attention-only model over the built-in vocabulary whose greedy output is always `target`:
// every embedding is e_0 and only W_u[0, target] is non-zero.
inline ilens::ModelWeights constant_output_model(ilens::TokenId target, std::size_t max_len = 256) {
    ilens::ModelConfig c = small_config(ilens::Variant::attention_only, ilens::Vocab::builtin().size(), 1, 1, 4,
                                        max_len);
    ilens::ModelWeights w(c);
    for (std::size_t v = 0; v < c.vocab_size; ++v) w.embed()(v, 0) = 1.0f;
    w.unembed()(0, static_cast<std::size_t>(target)) = 5.0f;
    return w;
}

// n distinct random tokens from [0, vocab) repeated twice. Each triplet links position m+1 (what an
// induction head attends to from the second copy of token m) with the first occurrence m. m starts
// at 1: position 0 has no predecessor, so a previous-token head leaves its own token there.
inline ilens::AnnotatedSentence doubled_sentence(std::size_t n, std::size_t vocab, std::uint64_t seed,
                                                 ilens::Relation relation = ilens::Relation::mod) {
    ilens::Rng rng(seed);
    std::vector<ilens::TokenId> pool(vocab);
    for (std::size_t i = 0; i < vocab; ++i) pool[i] = static_cast<ilens::TokenId>(i);
    for (std::size_t k = 0; k < n; ++k) std::swap(pool[k], pool[k + ilens::uniform_index(rng, vocab - k)]);
    ilens::AnnotatedSentence s;
    s.tokens.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    s.tokens.insert(s.tokens.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    for (ilens::TokenId t : s.tokens) s.surface.push_back("t" + std::to_string(t));
    for (std::size_t m = 1; m + 1 < n; ++m) s.triplets.push_back({m + 1, m, relation, false});
    return s;
}

}  // namespace testutil
