#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ilens {

enum class NounClass {
    animal,
    profession,
    fruit,
    furniture,
    vehicle,
    tool,
    plant,
    place,
    food,
    part,
};

inline constexpr int kNounClassCount = 10;

std::string_view to_string(NounClass c);

struct Noun {
    std::string word;
    NounClass cls;
};

// Bitmask over NounClass.
using ClassMask = unsigned;
constexpr ClassMask mask_of(NounClass c) { return 1u << static_cast<unsigned>(c); }

struct Verb {
    std::string word;
    ClassMask subjects;
    ClassMask objects;  // 0 for intransitive verbs
};

struct Adjective {
    std::string word;
    ClassMask applies_to;
};

struct PartWhole {
    std::string part;
    std::string whole;
};

// Built-in lexicon shared by the corpus generators, the training stream and the ICL pools.
struct WordBanks {
    std::vector<Noun> nouns;
    std::vector<Verb> verbs;
    std::vector<Adjective> adjectives;
    std::vector<std::string> adverbs;
    std::vector<std::string> months;
    std::vector<PartWhole> part_whole;
    std::vector<std::string> entity_names;  // multi-word knowledge-graph entities
    std::vector<std::string> function_words;  // removed by strip_function_words
    std::vector<std::string> kg_template_words;

    std::vector<std::string> nouns_of(NounClass c) const;
    static const WordBanks& builtin();
};

// Capital letters usable as entity placeholders, in assignment order. A, E, I, N, S, W are
// excluded because they read as words or abbreviations on their own.
const std::vector<std::string>& placeholder_letters();

}  // namespace ilens
