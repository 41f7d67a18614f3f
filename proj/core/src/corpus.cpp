#include "induction_lens/corpus.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"

namespace ilens {

std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::subj: return "subj";
        case Relation::obj: return "obj";
        case Relation::mod: return "mod";
        case Relation::part_of: return "Part-of";
        case Relation::compare: return "Compare";
        case Relation::used_for: return "Used-for";
        case Relation::feature_of: return "Feature-of";
        case Relation::hyponym_of: return "Hyponym-of";
        case Relation::evaluate_for: return "Evaluate-for";
        case Relation::conjunction: return "Conjunction";
    }
    return "?";
}

const std::vector<Relation>& dependency_relations() {
    static const std::vector<Relation> r = {Relation::subj, Relation::obj, Relation::mod};
    return r;
}

const std::vector<Relation>& kg_relations() {
    static const std::vector<Relation> r = {Relation::part_of,    Relation::compare,    Relation::used_for,
                                            Relation::feature_of, Relation::hyponym_of, Relation::evaluate_for,
                                            Relation::conjunction};
    return r;
}

std::optional<Relation> parse_relation(std::string_view s) {
    for (const auto* group : {&dependency_relations(), &kg_relations()}) {
        for (Relation r : *group) {
            if (to_string(r) == s) return r;
        }
    }
    return std::nullopt;
}

void AnnotatedSentence::validate() const {
    if (tokens.size() != surface.size()) {
        throw InputError("annotated sentence has " + std::to_string(tokens.size()) + " tokens but " +
                         std::to_string(surface.size()) + " surface strings");
    }
    for (const auto& t : triplets) {
        if (t.s >= tokens.size() || t.o >= tokens.size()) {
            throw InputError("triplet position outside sentence of length " + std::to_string(tokens.size()));
        }
        if (t.s == t.o) throw InputError("triplet with s == o at position " + std::to_string(t.s));
    }
    for (const auto& m : mentions) {
        if (m.begin >= m.end || m.end > tokens.size()) throw InputError("entity mention span out of range");
    }
}

std::vector<AnnotatedSentence> select_relation(const std::vector<AnnotatedSentence>& corpus, Relation r) {
    std::vector<AnnotatedSentence> out;
    for (const auto& s : corpus) {
        AnnotatedSentence copy = s;
        std::erase_if(copy.triplets, [r](const Triplet& t) { return t.relation != r; });
        if (!copy.triplets.empty()) out.push_back(std::move(copy));
    }
    return out;
}

namespace {

class SentenceBuilder {
public:
    explicit SentenceBuilder(const Vocab& vocab) : vocab_(vocab) {}

    std::size_t add(const std::string& word) {
        s_.surface.push_back(word);
        s_.tokens.push_back(vocab_.id(word));
        return s_.surface.size() - 1;
    }

    std::size_t add_phrase(const std::string& phrase) {
        std::size_t last = 0;
        for (const auto& w : split_words(phrase)) last = add(w);
        return last;
    }

    void relate(std::size_t head, Relation r, std::size_t tail) { s_.triplets.push_back({head, tail, r, false}); }

    AnnotatedSentence& sentence() { return s_; }
    AnnotatedSentence finish() {
        s_.validate();
        return std::move(s_);
    }

private:
    const Vocab& vocab_;
    AnnotatedSentence s_;
};

class Lexicon {
public:
    explicit Lexicon(const WordBanks& banks) : banks_(banks) {
        if (banks.nouns.empty() || banks.verbs.empty() || banks.adjectives.empty() || banks.adverbs.empty()) {
            throw ConfigError("dependency corpus needs non-empty noun, verb, adjective and adverb banks");
        }
        for (std::size_t i = 0; i < banks.verbs.size(); ++i) {
            (banks.verbs[i].objects ? transitive_ : intransitive_).push_back(i);
        }
        if (transitive_.empty()) throw ConfigError("dependency corpus needs at least one transitive verb");
    }

    const Noun& noun(Rng& rng, ClassMask mask) const {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < banks_.nouns.size(); ++i) {
            if (mask & mask_of(banks_.nouns[i].cls)) pool.push_back(i);
        }
        if (pool.empty()) throw ConfigError("no noun matches the verb's selectional class");
        return banks_.nouns[pool[uniform_index(rng, pool.size())]];
    }

    const Verb& transitive(Rng& rng) const { return banks_.verbs[transitive_[uniform_index(rng, transitive_.size())]]; }
    const Verb& intransitive(Rng& rng) const {
        if (intransitive_.empty()) return transitive(rng);
        return banks_.verbs[intransitive_[uniform_index(rng, intransitive_.size())]];
    }

    const Verb* transitive_for_subject(Rng& rng, NounClass cls) const {
        std::vector<std::size_t> pool;
        for (std::size_t i : transitive_) {
            if (banks_.verbs[i].subjects & mask_of(cls)) pool.push_back(i);
        }
        if (pool.empty()) return nullptr;
        return &banks_.verbs[pool[uniform_index(rng, pool.size())]];
    }

    // Empty string with probability 1 - p.
    std::string maybe_adjective(Rng& rng, NounClass cls, double p) const {
        if (uniform_unit(rng) >= p) return {};
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < banks_.adjectives.size(); ++i) {
            if (banks_.adjectives[i].applies_to & mask_of(cls)) pool.push_back(i);
        }
        if (pool.empty()) return {};
        return banks_.adjectives[pool[uniform_index(rng, pool.size())]].word;
    }

    std::string maybe_adverb(Rng& rng, double p) const {
        if (uniform_unit(rng) >= p) return {};
        return banks_.adverbs[uniform_index(rng, banks_.adverbs.size())];
    }

    std::string maybe_month(Rng& rng, double p) const {
        if (banks_.months.empty() || uniform_unit(rng) >= p) return {};
        return banks_.months[uniform_index(rng, banks_.months.size())];
    }

    const WordBanks& banks() const { return banks_; }

private:
    const WordBanks& banks_;
    std::vector<std::size_t> transitive_, intransitive_;
};

// "the [ADJ] NOUN" returning the noun position.
std::size_t noun_phrase(SentenceBuilder& b, const std::string& det, const std::string& adj, const std::string& noun) {
    b.add(det);
    std::size_t adj_pos = 0;
    if (!adj.empty()) adj_pos = b.add(adj);
    const std::size_t n = b.add(noun);
    if (!adj.empty()) b.relate(n, Relation::mod, adj_pos);
    return n;
}

void temporal(SentenceBuilder& b, const std::string& month) {
    if (month.empty()) return;
    b.add("in");
    b.add(month);
}

AnnotatedSentence gen_transitive(const Lexicon& lex, Rng& rng, const Vocab& vocab) {
    const Verb& v = lex.transitive(rng);
    const Noun& subj = lex.noun(rng, v.subjects);
    const Noun& obj = lex.noun(rng, v.objects);
    ClauseSpec c;
    c.subject = subj.word;
    c.subject_adjective = lex.maybe_adjective(rng, subj.cls, 0.5);
    c.verb = v.word;
    c.adverb = lex.maybe_adverb(rng, 0.3);
    c.object = obj.word;
    c.object_adjective = lex.maybe_adjective(rng, obj.cls, 0.5);
    AnnotatedSentence s = realize_clause(c, vocab);
    const std::string month = lex.maybe_month(rng, 0.15);
    if (!month.empty()) {
        s.surface.insert(s.surface.end() - 1, {"in", month});
        s.tokens.insert(s.tokens.end() - 1, {vocab.id("in"), vocab.id(month)});
    }
    return s;
}

AnnotatedSentence gen_intransitive(const Lexicon& lex, Rng& rng, const Vocab& vocab) {
    const Verb& v = lex.intransitive(rng);
    const Noun& subj = lex.noun(rng, v.subjects);
    SentenceBuilder b(vocab);
    const std::size_t n = noun_phrase(b, "the", lex.maybe_adjective(rng, subj.cls, 0.5), subj.word);
    const std::size_t vp = b.add(v.word);
    b.relate(vp, Relation::subj, n);
    const std::string adv = lex.maybe_adverb(rng, 0.5);
    if (!adv.empty()) b.relate(vp, Relation::mod, b.add(adv));
    temporal(b, lex.maybe_month(rng, 0.3));
    b.add(".");
    return b.finish();
}

AnnotatedSentence gen_coordination(const Lexicon& lex, Rng& rng, const Vocab& vocab) {
    const Verb& v = lex.transitive(rng);
    const Noun& s1 = lex.noun(rng, v.subjects);
    const Noun& s2 = lex.noun(rng, v.subjects);
    const Noun& obj = lex.noun(rng, v.objects);
    SentenceBuilder b(vocab);
    const std::size_t n1 = noun_phrase(b, "the", lex.maybe_adjective(rng, s1.cls, 0.4), s1.word);
    b.add("and");
    const std::size_t n2 = noun_phrase(b, "the", lex.maybe_adjective(rng, s2.cls, 0.4), s2.word);
    const std::size_t vp = b.add(v.word);
    const std::size_t n3 = noun_phrase(b, "the", lex.maybe_adjective(rng, obj.cls, 0.4), obj.word);
    b.relate(vp, Relation::subj, n1);
    b.relate(vp, Relation::subj, n2);
    b.relate(vp, Relation::obj, n3);
    b.add(".");
    return b.finish();
}

AnnotatedSentence gen_relative(const Lexicon& lex, Rng& rng, const Vocab& vocab) {
    const Verb& v1 = lex.transitive(rng);
    const Noun& subj = lex.noun(rng, v1.subjects);
    const Verb* v2 = lex.transitive_for_subject(rng, subj.cls);
    if (v2 == nullptr) v2 = &v1;
    const Noun& o1 = lex.noun(rng, v1.objects);
    const Noun& o2 = lex.noun(rng, v2->objects);
    SentenceBuilder b(vocab);
    const std::size_t n = noun_phrase(b, "the", lex.maybe_adjective(rng, subj.cls, 0.4), subj.word);
    b.add("that");
    const std::size_t vp1 = b.add(v1.word);
    const std::size_t n1 = noun_phrase(b, "the", {}, o1.word);
    const std::size_t vp2 = b.add(v2->word);
    const std::size_t n2 = noun_phrase(b, "the", lex.maybe_adjective(rng, o2.cls, 0.4), o2.word);
    b.relate(vp1, Relation::subj, n);
    b.relate(vp1, Relation::obj, n1);
    b.relate(vp2, Relation::subj, n);
    b.relate(vp2, Relation::obj, n2);
    b.add(".");
    return b.finish();
}

AnnotatedSentence gen_part_whole(const Lexicon& lex, Rng& rng, const Vocab& vocab) {
    const auto& pairs = lex.banks().part_whole;
    if (pairs.empty()) return gen_transitive(lex, rng, vocab);
    const PartWhole& pw = pairs[uniform_index(rng, pairs.size())];
    SentenceBuilder b(vocab);
    const auto whole_cls = std::find_if(lex.banks().nouns.begin(), lex.banks().nouns.end(),
                                        [&](const Noun& n) { return n.word == pw.whole; });
    const NounClass cls = whole_cls == lex.banks().nouns.end() ? NounClass::vehicle : whole_cls->cls;
    const std::size_t w = noun_phrase(b, "the", lex.maybe_adjective(rng, cls, 0.4), pw.whole);
    const std::size_t vp = b.add("has");
    const std::size_t p = noun_phrase(b, "a", lex.maybe_adjective(rng, NounClass::part, 0.4), pw.part);
    b.relate(vp, Relation::subj, w);
    b.relate(vp, Relation::obj, p);
    b.add(".");
    return b.finish();
}

}  // namespace

AnnotatedSentence realize_clause(const ClauseSpec& c, const Vocab& vocab) {
    SentenceBuilder b(vocab);
    const std::size_t subj = noun_phrase(b, "the", c.subject_adjective, c.subject);
    std::size_t adv = 0;
    if (!c.adverb.empty()) adv = b.add(c.adverb);
    const std::size_t verb = b.add(c.verb);
    b.relate(verb, Relation::subj, subj);
    if (!c.adverb.empty()) b.relate(verb, Relation::mod, adv);
    if (!c.object.empty()) {
        const std::size_t obj = noun_phrase(b, "the", c.object_adjective, c.object);
        b.relate(verb, Relation::obj, obj);
    }
    b.add(".");
    return b.finish();
}

std::vector<AnnotatedSentence> gen_dependency_corpus(std::uint64_t seed, std::size_t n_sentences,
                                                     const WordBanks& banks, const Vocab& vocab) {
    const Lexicon lex(banks);
    std::vector<AnnotatedSentence> out;
    out.reserve(n_sentences);
    for (std::size_t i = 0; i < n_sentences; ++i) {
        Rng rng(derive_seed(seed, "dependency", i));
        const double u = uniform_unit(rng);
        if (u < 0.40) {
            out.push_back(gen_transitive(lex, rng, vocab));
        } else if (u < 0.55) {
            out.push_back(gen_intransitive(lex, rng, vocab));
        } else if (u < 0.70) {
            out.push_back(gen_coordination(lex, rng, vocab));
        } else if (u < 0.85) {
            out.push_back(gen_relative(lex, rng, vocab));
        } else {
            out.push_back(gen_part_whole(lex, rng, vocab));
        }
    }
    return out;
}

AnnotatedSentence verbalize_edge(std::size_t head_entity, Relation relation, std::size_t tail_entity,
                                 const WordBanks& banks, const Vocab& vocab) {
    if (head_entity >= banks.entity_names.size() || tail_entity >= banks.entity_names.size()) {
        throw InputError("entity index out of range");
    }
    SentenceBuilder b(vocab);
    auto mention = [&](std::size_t entity) {
        const std::size_t begin = b.sentence().tokens.size();
        const std::size_t last = b.add_phrase(banks.entity_names[entity]);
        b.sentence().mentions.push_back({begin, last + 1, entity});
        return last;
    };
    auto words = [&](std::string_view phrase) { b.add_phrase(std::string(phrase)); };

    std::size_t head = 0, tail = 0;
    switch (relation) {
        case Relation::conjunction:
            head = mention(head_entity);
            words("and");
            tail = mention(tail_entity);
            words("are combined");
            break;
        default: {
            std::string_view middle;
            switch (relation) {
                case Relation::used_for: middle = "is used for"; break;
                case Relation::part_of: middle = "is part of"; break;
                case Relation::compare: middle = "is compared with"; break;
                case Relation::feature_of: middle = "is a feature of"; break;
                case Relation::hyponym_of: middle = "is a kind of"; break;
                case Relation::evaluate_for: middle = "is evaluated for"; break;
                default: throw InputError("relation " + std::string(to_string(relation)) + " is not a knowledge-graph relation");
            }
            head = mention(head_entity);
            words(middle);
            tail = mention(tail_entity);
        }
    }
    b.add(".");
    b.relate(head, relation, tail);
    return b.finish();
}

void append_sentence(AnnotatedSentence& head, const AnnotatedSentence& tail) {
    const std::size_t shift = head.tokens.size();
    head.tokens.insert(head.tokens.end(), tail.tokens.begin(), tail.tokens.end());
    head.surface.insert(head.surface.end(), tail.surface.begin(), tail.surface.end());
    for (Triplet t : tail.triplets) {
        t.s += shift;
        t.o += shift;
        head.triplets.push_back(t);
    }
    for (EntityMention m : tail.mentions) {
        m.begin += shift;
        m.end += shift;
        head.mentions.push_back(m);
    }
}

std::vector<AnnotatedSentence> gen_kg_corpus(std::uint64_t seed, std::size_t n_passages, const KgCorpusConfig& config,
                                             const WordBanks& banks, const Vocab& vocab) {
    if (config.max_entities > kMaxEntitiesPerPassage) {
        throw ConfigError("at most " + std::to_string(kMaxEntitiesPerPassage) +
                          " distinct entities per passage (one placeholder letter each)");
    }
    if (config.min_entities < 2 || config.min_entities > config.max_entities) {
        throw ConfigError("entity range must satisfy 2 <= min <= max");
    }
    if (config.min_edges < 1 || config.min_edges > config.max_edges) {
        throw ConfigError("edge range must satisfy 1 <= min <= max");
    }
    if (banks.entity_names.size() < config.max_entities) throw ConfigError("entity bank too small");

    std::vector<AnnotatedSentence> out;
    out.reserve(n_passages);
    const auto& relations = kg_relations();
    for (std::size_t i = 0; i < n_passages; ++i) {
        Rng rng(derive_seed(seed, "kg", i));
        const std::size_t k = config.min_entities + uniform_index(rng, config.max_entities - config.min_entities + 1);
        std::vector<std::size_t> all(banks.entity_names.size());
        for (std::size_t e = 0; e < all.size(); ++e) all[e] = e;
        for (std::size_t e = 0; e < k; ++e) std::swap(all[e], all[e + uniform_index(rng, all.size() - e)]);
        const std::size_t m = config.min_edges + uniform_index(rng, config.max_edges - config.min_edges + 1);
        AnnotatedSentence passage;
        for (std::size_t e = 0; e < m; ++e) {
            const std::size_t a = uniform_index(rng, k);
            std::size_t b = uniform_index(rng, k - 1);
            if (b >= a) ++b;
            const Relation r = relations[uniform_index(rng, relations.size())];
            append_sentence(passage, verbalize_edge(all[a], r, all[b], banks, vocab));
        }
        passage.validate();
        out.push_back(std::move(passage));
    }
    return out;
}

AnnotatedSentence substitute_entities(const AnnotatedSentence& passage, const Vocab& vocab) {
    if (passage.mentions.empty()) return passage;
    std::vector<EntityMention> mentions = passage.mentions;
    std::sort(mentions.begin(), mentions.end(),
              [](const EntityMention& a, const EntityMention& b) { return a.begin < b.begin; });

    std::unordered_map<std::size_t, std::size_t> letter_of;  // entity -> letter index
    for (const auto& m : mentions) {
        if (!letter_of.contains(m.entity)) {
            const std::size_t next = letter_of.size();
            letter_of.emplace(m.entity, next);
        }
    }
    const auto& letters = placeholder_letters();
    if (letter_of.size() > letters.size()) {
        throw InputError("passage mentions " + std::to_string(letter_of.size()) + " distinct entities; at most " +
                         std::to_string(letters.size()) + " can be substituted");
    }

    AnnotatedSentence out;
    std::vector<std::size_t> new_pos(passage.size());
    std::size_t mi = 0;
    for (std::size_t i = 0; i < passage.size();) {
        if (mi < mentions.size() && mentions[mi].begin == i) {
            const auto& m = mentions[mi];
            const std::string& letter = letters[letter_of.at(m.entity)];
            const std::size_t p = out.tokens.size();
            out.tokens.push_back(vocab.id(letter));
            out.surface.push_back(letter);
            out.mentions.push_back({p, p + 1, m.entity});
            for (std::size_t j = m.begin; j < m.end; ++j) new_pos[j] = p;
            i = m.end;
            ++mi;
        } else {
            new_pos[i] = out.tokens.size();
            out.tokens.push_back(passage.tokens[i]);
            out.surface.push_back(passage.surface[i]);
            ++i;
        }
    }
    for (Triplet t : passage.triplets) {
        t.s = new_pos[t.s];
        t.o = new_pos[t.o];
        if (t.s != t.o) out.triplets.push_back(t);
    }
    out.validate();
    return out;
}

StripResult strip_function_words(const AnnotatedSentence& passage, const WordBanks& banks) {
    const std::unordered_set<std::string> stop(banks.function_words.begin(), banks.function_words.end());
    constexpr std::size_t kRemoved = static_cast<std::size_t>(-1);
    StripResult result;
    std::vector<std::size_t> new_pos(passage.size(), kRemoved);
    for (std::size_t i = 0; i < passage.size(); ++i) {
        if (stop.contains(passage.surface[i])) continue;
        new_pos[i] = result.sentence.tokens.size();
        result.sentence.tokens.push_back(passage.tokens[i]);
        result.sentence.surface.push_back(passage.surface[i]);
    }
    for (Triplet t : passage.triplets) {
        if (new_pos[t.s] == kRemoved || new_pos[t.o] == kRemoved) {
            ++result.dropped_triplets;
            continue;
        }
        t.s = new_pos[t.s];
        t.o = new_pos[t.o];
        result.sentence.triplets.push_back(t);
    }
    for (const auto& m : passage.mentions) {
        std::size_t begin = kRemoved, end = 0;
        for (std::size_t j = m.begin; j < m.end; ++j) {
            if (new_pos[j] == kRemoved) continue;
            begin = std::min(begin, new_pos[j]);
            end = new_pos[j] + 1;
        }
        if (begin != kRemoved) result.sentence.mentions.push_back({begin, end, m.entity});
    }
    return result;
}

}  // namespace ilens
