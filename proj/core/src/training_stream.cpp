#include "induction_lens/training_stream.hpp"

#include "induction_lens/corpus.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"

namespace ilens {

std::string_view to_string(Genre g) {
    switch (g) {
        case Genre::dependency: return "dependency";
        case Genre::knowledge: return "knowledge";
        case Genre::catalog: return "catalog";
    }
    return "?";
}

void StreamConfig::validate() const {
    if (seq_len < 2) throw ConfigError("seq_len must be at least 2");
    if (seqs_per_step < 1) throw ConfigError("seqs_per_step must be at least 1");
    if (dependency_weight < 0 || knowledge_weight < 0 || catalog_weight < 0 ||
        dependency_weight + knowledge_weight + catalog_weight <= 0) {
        throw ConfigError("genre weights must be non-negative with a positive sum");
    }
}

namespace {

void append_words(std::vector<TokenId>& out, const std::vector<TokenId>& tokens) {
    out.insert(out.end(), tokens.begin(), tokens.end());
}

std::vector<TokenId> dependency_paragraph(Rng& rng, const WordBanks& banks, const Vocab& vocab) {
    const std::size_t n = 3 + uniform_index(rng, 6);
    const auto sentences = gen_dependency_corpus(rng(), n, banks, vocab);
    std::vector<TokenId> out{vocab.bos()};
    for (std::size_t i = 0; i < n; ++i) {
        append_words(out, sentences[i].tokens);
        if (i > 0 && uniform_unit(rng) < 0.3) append_words(out, sentences[uniform_index(rng, i)].tokens);
    }
    return out;
}

std::vector<TokenId> knowledge_passage(Rng& rng, const WordBanks& banks, const Vocab& vocab) {
    AnnotatedSentence passage = gen_kg_corpus(rng(), 1, {}, banks, vocab).front();
    const double u = uniform_unit(rng);
    if (u >= 1.0 / 3.0) passage = substitute_entities(passage, vocab);
    if (u >= 2.0 / 3.0) passage = strip_function_words(passage, banks).sentence;
    std::vector<TokenId> out{vocab.bos()};
    append_words(out, passage.tokens);
    return out;
}

// Category pools: the noun classes, then months.
std::vector<std::vector<TokenId>> category_pools(const WordBanks& banks, const Vocab& vocab) {
    std::vector<std::vector<TokenId>> pools;
    for (int c = 0; c < kNounClassCount; ++c) {
        pools.push_back(vocab.ids(banks.nouns_of(static_cast<NounClass>(c))));
    }
    pools.push_back(vocab.ids(banks.months));
    return pools;
}

std::vector<TokenId> catalog(Rng& rng, const WordBanks& banks, const Vocab& vocab) {
    const auto pools = category_pools(banks, vocab);
    auto pick = [&](std::size_t pool) { return pools[pool][uniform_index(rng, pools[pool].size())]; };
    auto pick_other = [&](std::size_t not_this) {
        std::size_t c = uniform_index(rng, pools.size() - 1);
        return c >= not_this ? c + 1 : c;
    };
    const std::size_t c1 = uniform_index(rng, pools.size());
    const std::size_t c2 = pick_other(c1);
    const std::size_t c3 = pick_other(c1);
    const std::size_t rule = uniform_index(rng, 5);
    const std::size_t lines = 6 + uniform_index(rng, 15);
    const std::string constant = std::to_string(uniform_index(rng, 10));
    const TokenId sep = vocab.id(","), colon = vocab.id(":");

    std::vector<TokenId> out{vocab.bos()};
    for (std::size_t i = 0; i < lines; ++i) {
        TokenId a = 0, b = 0;
        std::string label;
        switch (rule) {
            case 0:  // arbitrary digits
                a = pick(c1);
                b = pick(c2);
                label = std::to_string(uniform_index(rng, 10));
                break;
            case 1: {  // order of two categories
                const bool flip = uniform_index(rng, 2) == 1;
                a = pick(flip ? c2 : c1);
                b = pick(flip ? c1 : c2);
                label = flip ? "1" : "0";
                break;
            }
            case 2: {  // category pair, four classes
                const std::size_t k = uniform_index(rng, 4);
                a = pick(k < 2 ? c1 : c2);
                b = pick(k % 2 == 0 ? c1 : c2);
                label = std::to_string(k);
                break;
            }
            case 3: {  // pair type membership
                const bool positive = uniform_index(rng, 2) == 0;
                a = pick(positive ? c1 : c3);
                b = pick(c2);
                label = positive ? "true" : "false";
                break;
            }
            default:
                a = pick(c1);
                b = pick(c2);
                label = constant;
        }
        out.insert(out.end(), {a, sep, b, colon, vocab.id(label), vocab.newline()});
    }
    return out;
}

}  // namespace

std::vector<TokenId> render_document(Genre genre, std::uint64_t seed, const WordBanks& banks, const Vocab& vocab) {
    Rng rng(seed);
    switch (genre) {
        case Genre::dependency: return dependency_paragraph(rng, banks, vocab);
        case Genre::knowledge: return knowledge_passage(rng, banks, vocab);
        case Genre::catalog: return catalog(rng, banks, vocab);
    }
    throw ConfigError("unknown genre");
}

TrainingStream::TrainingStream(StreamConfig config, const WordBanks& banks, const Vocab& vocab)
    : config_(config), banks_(banks), vocab_(vocab) {
    config_.validate();
}

Genre TrainingStream::draw_genre(Rng& rng) const {
    const double total = config_.dependency_weight + config_.knowledge_weight + config_.catalog_weight;
    const double u = uniform_unit(rng) * total;
    if (u < config_.dependency_weight) return Genre::dependency;
    if (u < config_.dependency_weight + config_.knowledge_weight) return Genre::knowledge;
    return Genre::catalog;
}

std::vector<TokenId> TrainingStream::pack(std::uint64_t seed, std::size_t length) const {
    Rng rng(seed);
    std::vector<TokenId> out;
    out.reserve(length + 256);
    while (out.size() < length) {
        const Genre g = draw_genre(rng);
        append_words(out, render_document(g, rng(), banks_, vocab_));
    }
    out.resize(length);
    return out;
}

std::vector<TokenId> TrainingStream::sequence(std::uint64_t step, std::size_t index) const {
    return pack(derive_seed(config_.seed, step, index), config_.seq_len);
}

std::vector<std::vector<TokenId>> TrainingStream::batch(std::uint64_t step) const {
    std::vector<std::vector<TokenId>> out;
    out.reserve(config_.seqs_per_step);
    for (std::size_t i = 0; i < config_.seqs_per_step; ++i) out.push_back(sequence(step, i));
    return out;
}

std::vector<std::vector<TokenId>> TrainingStream::held_out(std::size_t n, std::size_t length) const {
    std::vector<std::vector<TokenId>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(pack(derive_seed(config_.seed, "held-out", i), length));
    return out;
}

std::vector<std::vector<TokenId>> TrainingStream::held_out_documents(std::size_t n, std::size_t min_length,
                                                                     std::size_t max_length) const {
    if (min_length > max_length) throw ConfigError("held_out_documents: min_length exceeds max_length");
    Rng rng(derive_seed(config_.seed, "held-out-documents"));
    std::vector<std::vector<TokenId>> out;
    out.reserve(n);
    const std::size_t max_draws = 1000 * n + 1000;
    for (std::size_t draws = 0; out.size() < n; ++draws) {
        if (draws == max_draws) throw ConfigError("held_out_documents: no document reaches min_length");
        const Genre g = draw_genre(rng);
        std::vector<TokenId> doc = render_document(g, rng(), banks_, vocab_);
        if (doc.size() < min_length) continue;
        if (doc.size() > max_length) doc.resize(max_length);
        out.push_back(std::move(doc));
    }
    return out;
}

}  // namespace ilens
