#include "induction_lens/vocab.hpp"

#include "induction_lens/errors.hpp"
#include "induction_lens/word_banks.hpp"

namespace ilens {

namespace {

bool is_punct(char c) { return c == ',' || c == '.' || c == ':'; }

bool attaches_left(const std::string& w) {
    return w == "," || w == "." || w == ":" || w == "\n";
}

}  // namespace

Vocab::Vocab(const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
        if (index_.contains(t)) continue;
        index_.emplace(t, static_cast<TokenId>(tokens_.size()));
        tokens_.push_back(t);
    }
    auto special = [&](std::string_view s) {
        const auto it = index_.find(std::string(s));
        if (it == index_.end()) throw ConfigError("vocabulary lacks special token " + std::string(s));
        return it->second;
    };
    bos_ = special(kBos);
    pad_ = special(kPad);
    unk_ = special(kUnk);
    newline_ = special(kNewline);
}

const Vocab& Vocab::builtin() {
    static const Vocab vocab = [] {
        const WordBanks& b = WordBanks::builtin();
        std::vector<std::string> t = {std::string(kBos), std::string(kPad), std::string(kUnk),
                                      std::string(kNewline), ",", ".", ":"};
        for (char c = '0'; c <= '9'; ++c) t.emplace_back(1, c);
        for (char c = 'A'; c <= 'Z'; ++c) t.emplace_back(1, c);
        t.emplace_back("true");
        t.emplace_back("false");
        for (const auto& w : b.function_words) t.push_back(w);
        for (const auto& w : b.kg_template_words) t.push_back(w);
        t.emplace_back("together");
        for (const auto& n : b.nouns) t.push_back(n.word);
        for (const auto& v : b.verbs) t.push_back(v.word);
        for (const auto& a : b.adjectives) t.push_back(a.word);
        for (const auto& a : b.adverbs) t.push_back(a);
        for (const auto& m : b.months) t.push_back(m);
        for (const auto& e : b.entity_names) {
            for (const auto& w : split_words(e)) t.push_back(w);
        }
        return Vocab(t);
    }();
    return vocab;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId Vocab::id(std::string_view token) const {
    const auto found = find(token);
    if (!found) throw InputError("token '" + std::string(token) + "' is not in the vocabulary");
    return *found;
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw InputError("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::surfaces(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId i : ids) out.push_back(token(i));
    return out;
}

std::vector<TokenId> Vocab::ids(std::span<const std::string> surfaces) const {
    std::vector<TokenId> out;
    out.reserve(surfaces.size());
    for (const auto& s : surfaces) out.push_back(id(s));
    return out;
}

bool Vocab::is_digit(TokenId id) const {
    const std::string& t = token(id);
    return t.size() == 1 && t[0] >= '0' && t[0] <= '9';
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
    std::vector<TokenId> out;
    for (const auto& w : split_words(text)) {
        const auto found = find(w);
        out.push_back(found ? *found : unk_);
    }
    return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
    const auto words = surfaces(ids);
    return join_words(words);
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    for (char c : text) {
        if (c == '\n') {
            flush();
            out.emplace_back("\n");
        } else if (c == ' ' || c == '\t' || c == '\r') {
            flush();
        } else if (is_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            current.push_back(c);
        }
    }
    flush();
    return out;
}

std::string join_words(std::span<const std::string> words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0 && !attaches_left(words[i]) && words[i - 1] != "\n") out.push_back(' ');
        out += words[i];
    }
    return out;
}

}  // namespace ilens
