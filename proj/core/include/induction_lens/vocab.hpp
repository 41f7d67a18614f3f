#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "induction_lens/model.hpp"

namespace ilens {

// Word-level vocabulary: one token per word, letter, digit or punctuation mark. Ids are dense
// from zero in construction order.
class Vocab {
public:
    static constexpr std::string_view kBos = "<bos>";
    static constexpr std::string_view kPad = "<pad>";
    static constexpr std::string_view kUnk = "<unk>";
    static constexpr std::string_view kNewline = "\n";

    explicit Vocab(const std::vector<std::string>& tokens);

    // Specials, punctuation, digits, A-Z, true/false, then the built-in word banks.
    static const Vocab& builtin();

    std::size_t size() const { return tokens_.size(); }
    std::optional<TokenId> find(std::string_view token) const;
    TokenId id(std::string_view token) const;  // throws InputError for unknown tokens
    const std::string& token(TokenId id) const;
    std::vector<std::string> surfaces(std::span<const TokenId> ids) const;
    std::vector<TokenId> ids(std::span<const std::string> surfaces) const;

    TokenId bos() const { return bos_; }
    TokenId pad() const { return pad_; }
    TokenId unk() const { return unk_; }
    TokenId newline() const { return newline_; }

    bool is_digit(TokenId id) const;

    // Unknown words map to <unk>.
    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId bos_ = 0, pad_ = 0, unk_ = 0, newline_ = 0;
};

// Splits text into word-level surface tokens. Spaces separate words; ',', '.', ':' and newlines
// are tokens of their own.
std::vector<std::string> split_words(std::string_view text);

// Inverse of split_words for canonical text: no space before punctuation or newlines, none
// after a newline, a single space elsewhere.
std::string join_words(std::span<const std::string> words);

}  // namespace ilens
