#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "induction_lens/model.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/vocab.hpp"
#include "induction_lens/word_banks.hpp"

namespace ilens {

// Document genres mixed into the training stream.
enum class Genre {
    dependency,  // template-grammar paragraphs; some sentences recur later in the paragraph
    knowledge,   // knowledge-graph passages, raw, letter-substituted or stripped
    catalog,     // "a , b : v" lines with a per-document labelling rule
};

std::string_view to_string(Genre g);

struct StreamConfig {
    std::uint64_t seed = 1;
    std::size_t seq_len = 128;
    std::size_t seqs_per_step = 8;
    double dependency_weight = 0.45;
    double knowledge_weight = 0.25;
    double catalog_weight = 0.30;

    void validate() const;  // throws ConfigError
};

// Token documents rendered from the built-in banks; each starts with <bos>.
std::vector<TokenId> render_document(Genre genre, std::uint64_t seed, const WordBanks& banks = WordBanks::builtin(),
                                     const Vocab& vocab = Vocab::builtin());

// Packed fixed-length training sequences. Every sequence is a pure function of
// (seed, step, index), so a resumed run needs nothing but the step number.
class TrainingStream {
public:
    explicit TrainingStream(StreamConfig config, const WordBanks& banks = WordBanks::builtin(),
                            const Vocab& vocab = Vocab::builtin());

    const StreamConfig& config() const { return config_; }
    std::vector<TokenId> sequence(std::uint64_t step, std::size_t index) const;
    std::vector<std::vector<TokenId>> batch(std::uint64_t step) const;

    // Held-out sequences drawn from a separate seed stream.
    std::vector<std::vector<TokenId>> held_out(std::size_t n, std::size_t length) const;

    // Held-out single documents (genre mix as configured) of at least min_length tokens, cut to
    // max_length. No document boundary falls inside a text, so later tokens always have context.
    std::vector<std::vector<TokenId>> held_out_documents(std::size_t n, std::size_t min_length,
                                                         std::size_t max_length) const;

private:
    Genre draw_genre(Rng& rng) const;
    std::vector<TokenId> pack(std::uint64_t seed, std::size_t length) const;

    StreamConfig config_;
    const WordBanks& banks_;
    const Vocab& vocab_;
};

}  // namespace ilens
