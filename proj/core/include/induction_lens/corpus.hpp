#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "induction_lens/model.hpp"
#include "induction_lens/vocab.hpp"
#include "induction_lens/word_banks.hpp"

namespace ilens {

enum class Relation {
    subj,
    obj,
    mod,
    part_of,
    compare,
    used_for,
    feature_of,
    hyponym_of,
    evaluate_for,
    conjunction,
};

std::string_view to_string(Relation r);
std::optional<Relation> parse_relation(std::string_view s);
const std::vector<Relation>& dependency_relations();
const std::vector<Relation>& kg_relations();

// (head-token position s, relation, tail-token position o). `reversed` marks the swapped
// triplet (t_o, relation, t_s).
struct Triplet {
    std::size_t s = 0;
    std::size_t o = 0;
    Relation relation = Relation::subj;
    bool reversed = false;

    Triplet swapped() const { return {o, s, relation, !reversed}; }
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Token span [begin, end) naming knowledge-graph entity `entity` (index into the entity bank).
struct EntityMention {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t entity = 0;
    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct AnnotatedSentence {
    std::vector<TokenId> tokens;
    std::vector<std::string> surface;
    std::vector<Triplet> triplets;
    std::vector<EntityMention> mentions;

    std::size_t size() const { return tokens.size(); }
    // Throws InputError unless tokens and surface agree in length and every triplet has
    // in-range positions with s != o.
    void validate() const;
    friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

std::vector<AnnotatedSentence> select_relation(const std::vector<AnnotatedSentence>& corpus, Relation r);

// --- dependency corpus -------------------------------------------------------------------

struct ClauseSpec {
    std::string subject;
    std::string subject_adjective;  // empty for none
    std::string verb;
    std::string adverb;
    std::string object;  // empty for intransitive
    std::string object_adjective;
};

// "the [ADJ] SUBJ [ADV] VERB the [ADJ] OBJ ." with subj, obj and mod triplets whose head is the
// governing token.
AnnotatedSentence realize_clause(const ClauseSpec& clause, const Vocab& vocab = Vocab::builtin());

// Pure function of (seed, n). Throws ConfigError when the banks are empty.
std::vector<AnnotatedSentence> gen_dependency_corpus(std::uint64_t seed, std::size_t n_sentences,
                                                     const WordBanks& banks = WordBanks::builtin(),
                                                     const Vocab& vocab = Vocab::builtin());

// --- knowledge-graph corpus --------------------------------------------------------------

struct KgCorpusConfig {
    std::size_t min_entities = 2;
    std::size_t max_entities = 5;
    std::size_t min_edges = 2;
    std::size_t max_edges = 5;
};

inline constexpr std::size_t kMaxEntitiesPerPassage = 20;

// One sentence verbalizing (head, relation, tail), e.g. "laser scanner is used for surface mapping .".
// Entity indices refer to WordBanks::entity_names.
AnnotatedSentence verbalize_edge(std::size_t head_entity, Relation relation, std::size_t tail_entity,
                                 const WordBanks& banks = WordBanks::builtin(),
                                 const Vocab& vocab = Vocab::builtin());

std::vector<AnnotatedSentence> gen_kg_corpus(std::uint64_t seed, std::size_t n_passages,
                                             const KgCorpusConfig& config = {},
                                             const WordBanks& banks = WordBanks::builtin(),
                                             const Vocab& vocab = Vocab::builtin());

// Appends `tail` to `head`, shifting its positions.
void append_sentence(AnnotatedSentence& head, const AnnotatedSentence& tail);

// Replaces each entity mention with a capital letter, assigned per distinct entity in order of
// first mention (B, C, D, ...). Throws InputError for more than 20 distinct entities.
AnnotatedSentence substitute_entities(const AnnotatedSentence& passage, const Vocab& vocab = Vocab::builtin());

struct StripResult {
    AnnotatedSentence sentence;
    std::size_t dropped_triplets = 0;
};

// Deletes the built-in function words; triplets touching a deleted token are dropped.
StripResult strip_function_words(const AnnotatedSentence& passage,
                                 const WordBanks& banks = WordBanks::builtin());

// --- corpus files ------------------------------------------------------------------------

// One JSON object per line: {"tokens": [...], "surface": [...], "triplets": [{"s","o","relation","reversed"}]}
// plus "mentions" when present.
void write_corpus(const std::filesystem::path& path, const std::vector<AnnotatedSentence>& corpus);
std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path);

}  // namespace ilens
