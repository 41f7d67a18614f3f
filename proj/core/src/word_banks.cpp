#include "induction_lens/word_banks.hpp"

#include <initializer_list>

namespace ilens {

std::string_view to_string(NounClass c) {
    switch (c) {
        case NounClass::animal: return "animal";
        case NounClass::profession: return "profession";
        case NounClass::fruit: return "fruit";
        case NounClass::furniture: return "furniture";
        case NounClass::vehicle: return "vehicle";
        case NounClass::tool: return "tool";
        case NounClass::plant: return "plant";
        case NounClass::place: return "place";
        case NounClass::food: return "food";
        case NounClass::part: return "part";
    }
    return "?";
}

namespace {

constexpr ClassMask kAnimal = mask_of(NounClass::animal);
constexpr ClassMask kPerson = mask_of(NounClass::profession);
constexpr ClassMask kAnimate = kAnimal | kPerson;
constexpr ClassMask kEdible = mask_of(NounClass::fruit) | mask_of(NounClass::food);
constexpr ClassMask kArtifact =
    mask_of(NounClass::furniture) | mask_of(NounClass::tool) | mask_of(NounClass::vehicle);
constexpr ClassMask kPlant = mask_of(NounClass::plant);
constexpr ClassMask kPlace = mask_of(NounClass::place);
constexpr ClassMask kVehicle = mask_of(NounClass::vehicle);
constexpr ClassMask kPart = mask_of(NounClass::part);
constexpr ClassMask kConcrete = kArtifact | kPlant | kPlace | kEdible | kPart;
constexpr ClassMask kAny = kAnimate | kConcrete;

void add_nouns(std::vector<Noun>& out, NounClass c, std::initializer_list<const char*> words) {
    for (const char* w : words) out.push_back({w, c});
}

void add_verbs(std::vector<Verb>& out, ClassMask subj, ClassMask obj, std::initializer_list<const char*> words) {
    for (const char* w : words) out.push_back({w, subj, obj});
}

void add_adjectives(std::vector<Adjective>& out, ClassMask m, std::initializer_list<const char*> words) {
    for (const char* w : words) out.push_back({w, m});
}

WordBanks make_builtin() {
    WordBanks b;
    add_nouns(b.nouns, NounClass::animal,
              {"fox",   "dog",   "cat",    "horse", "rabbit", "wolf",  "bear",    "lion",
               "tiger", "mouse", "goat",   "sheep", "cow",    "deer",  "eagle",   "owl",
               "duck",  "snake", "frog",   "monkey", "zebra", "camel", "donkey",  "otter",
               "beaver", "squirrel", "badger", "hawk", "parrot", "turtle"});
    add_nouns(b.nouns, NounClass::profession,
              {"teacher", "farmer",  "doctor",  "nurse",    "baker",   "pilot",  "lawyer",   "painter",
               "singer",  "writer",  "driver",  "dentist",  "engineer", "chef",  "butcher",  "tailor",
               "plumber", "sailor",  "soldier", "judge",    "banker",  "miner",  "clerk",    "poet",
               "actor",   "dancer",  "gardener", "carpenter", "surgeon", "librarian"});
    add_nouns(b.nouns, NounClass::fruit,
              {"apple", "banana", "orange", "pear",    "peach",     "plum",       "grape",
               "cherry", "mango", "lemon",  "lime",    "melon",     "kiwi",       "apricot",
               "papaya", "fig",   "coconut", "pineapple", "raspberry", "strawberry", "blueberry",
               "guava", "lychee", "nectarine", "pomegranate"});
    add_nouns(b.nouns, NounClass::furniture,
              {"table",   "chair",    "sofa",     "bed",      "desk",     "shelf",     "cabinet",
               "dresser", "stool",    "bench",    "wardrobe", "couch",    "bookcase",  "armchair",
               "cupboard", "ottoman", "nightstand", "recliner", "futon", "hammock", "sideboard",
               "crib",    "vanity",   "cot",      "hutch"});
    add_nouns(b.nouns, NounClass::vehicle,
              {"car", "truck", "bus", "bicycle", "train", "boat", "ship", "plane", "tractor", "wagon",
               "van", "scooter", "canoe", "taxi", "tram", "yacht", "jeep", "ferry", "sled", "rocket"});
    add_nouns(b.nouns, NounClass::tool,
              {"hammer", "saw", "drill", "wrench", "knife", "shovel", "rake", "axe", "ladder", "brush",
               "needle", "scissors", "spoon", "kettle", "rope", "bucket", "lamp", "camera", "clock", "pencil"});
    add_nouns(b.nouns, NounClass::plant,
              {"tree", "flower", "rose", "tulip", "oak", "pine", "fern", "cactus", "bamboo", "ivy",
               "daisy", "lily", "maple", "willow", "moss"});
    add_nouns(b.nouns, NounClass::place,
              {"house", "garden", "city", "village", "school", "market", "river", "forest", "mountain",
               "bridge", "castle", "farm", "office", "station", "harbor", "library", "museum", "church",
               "kitchen", "park"});
    add_nouns(b.nouns, NounClass::food,
              {"bread", "cheese", "soup", "rice", "cake", "pie", "salad", "honey", "butter", "milk",
               "egg", "meat", "fish", "pasta", "cookie"});
    add_nouns(b.nouns, NounClass::part,
              {"wheel", "door", "roof", "window", "leaf", "petal", "branch", "engine", "wing", "tail",
               "handle", "blade", "page", "cover", "key", "string", "sail", "mast", "seat", "pedal",
               "chimney", "wall", "root", "stem", "paw"});

    add_verbs(b.verbs, kPerson, kArtifact,
              {"builds", "fixes", "paints", "moves", "sells", "buys", "carries", "cleans", "repairs",
               "polishes", "lifts", "drags", "pushes", "pulls", "loads", "delivers", "designs", "orders",
               "borrows", "rents"});
    add_verbs(b.verbs, kPerson, kEdible,
              {"cooks", "bakes", "slices", "peels", "serves", "washes", "picks", "packs", "tastes", "grows"});
    add_verbs(b.verbs, kAnimate, kEdible,
              {"eats", "chews", "sniffs", "steals", "nibbles", "swallows", "hides", "buries"});
    add_verbs(b.verbs, kAnimal, kAnimate, {"chases", "bites", "hunts", "scares", "attacks", "ignores"});
    add_verbs(b.verbs, kAnimate, kAnimate,
              {"sees", "watches", "follows", "greets", "helps", "meets", "calls", "visits", "likes",
               "admires", "trusts", "teaches", "thanks", "warns", "guides", "hugs"});
    add_verbs(b.verbs, kPerson, kPlace,
              {"enters", "guards", "explores", "owns", "leaves", "crosses", "sketches", "photographs"});
    add_verbs(b.verbs, kPerson, kPlant, {"waters", "plants", "trims", "prunes", "cuts"});
    add_verbs(b.verbs, kVehicle, kPlace, {"reaches", "passes", "approaches", "circles"});
    add_verbs(b.verbs, kAnimate, 0,
              {"sleeps", "runs", "walks", "sings", "dances", "jumps", "laughs", "waits", "swims", "rests",
               "smiles", "works", "travels", "shouts", "sits", "stands"});
    add_verbs(b.verbs, kPlant, 0, {"blooms", "wilts", "sways"});
    add_verbs(b.verbs, kVehicle, 0, {"stops", "arrives", "departs", "breaks", "shines"});

    add_adjectives(b.adjectives, kAny,
                   {"big", "small", "old", "new", "red", "blue", "green", "yellow", "brown", "black", "white",
                    "tiny", "huge", "strange", "pretty", "famous", "common", "rare", "lovely", "ugly"});
    add_adjectives(b.adjectives, kAnimate,
                   {"young", "tall", "happy", "sad", "angry", "clever", "brave", "lazy", "busy", "friendly",
                    "gentle", "hungry", "sleepy", "quiet", "loud", "proud", "shy", "calm", "curious", "kind"});
    add_adjectives(b.adjectives, kAnimal, {"fierce", "wild", "tame", "furry", "fast", "slow"});
    add_adjectives(b.adjectives, kArtifact | kPart,
                   {"wooden", "metal", "plastic", "heavy", "broken", "shiny", "rusty", "modern", "ancient",
                    "cheap", "expensive", "fragile", "sturdy", "sharp", "dirty", "clean", "comfortable"});
    add_adjectives(b.adjectives, kEdible,
                   {"sweet", "sour", "ripe", "fresh", "juicy", "rotten", "spicy", "salty", "bitter", "tasty"});
    add_adjectives(b.adjectives, kPlace, {"crowded", "empty", "narrow", "wide", "distant", "sunny"});
    add_adjectives(b.adjectives, kPlant, {"leafy", "thorny", "wet", "dry", "blooming"});

    b.adverbs = {"quickly", "slowly",  "quietly",  "loudly",  "carefully", "happily",  "sadly",
                 "gently",  "eagerly", "calmly",   "rarely",  "often",     "bravely",  "proudly",
                 "suddenly", "silently", "patiently", "boldly", "softly", "politely", "nervously",
                 "lazily",  "warmly",  "angrily",  "barely",  "easily",    "gladly",   "neatly",
                 "firmly",  "freely",  "openly"};

    b.months = {"January", "February", "March", "April", "May", "June", "July", "August", "September",
                "October", "November", "December", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug",
                "Sep", "Oct", "Nov", "Dec"};

    b.part_whole = {{"wheel", "car"},      {"wheel", "truck"},    {"wheel", "bicycle"}, {"engine", "truck"},
                    {"engine", "plane"},   {"engine", "car"},     {"seat", "bus"},      {"pedal", "bicycle"},
                    {"sail", "yacht"},     {"mast", "ship"},      {"wing", "plane"},    {"window", "train"},
                    {"door", "house"},     {"roof", "house"},     {"chimney", "house"}, {"wall", "castle"},
                    {"window", "church"},  {"leaf", "tree"},      {"branch", "oak"},    {"root", "tree"},
                    {"petal", "rose"},     {"stem", "tulip"},     {"leaf", "fern"},     {"wing", "eagle"},
                    {"tail", "fox"},       {"paw", "dog"},        {"tail", "horse"},    {"blade", "knife"},
                    {"handle", "hammer"},  {"handle", "kettle"},  {"blade", "axe"},     {"page", "library"},
                    {"key", "desk"},       {"cover", "bed"},      {"string", "hammock"}, {"seat", "sofa"}};

    b.entity_names = {
        "laser scanner",       "surface mapping",      "neural network",      "speech recognition",
        "image segmentation",  "graph parser",         "language model",      "machine translation",
        "error rate",          "word embedding",       "feature extraction",  "decision tree",
        "vector machine",      "markov model",         "topic model",         "query expansion",
        "search engine",       "benchmark corpus",     "noise reduction",     "edge detection",
        "motion tracking",     "depth sensor",         "point cloud",         "signal processing",
        "spectral analysis",   "sentiment classifier", "knowledge base",      "question answering",
        "text summarization",  "entity recognition",   "dependency parser",   "beam search",
        "attention mechanism", "reinforcement learning", "policy gradient",   "reward function",
        "loss function",       "gradient descent",     "learning schedule",   "batch normalization",
        "convolutional layer", "pooling layer",        "recurrent unit",      "memory cell",
        "object detection",    "bounding box",         "optical flow",        "stereo camera",
        "inertial sensor",     "path planning",        "robot arm",           "control policy",
        "state estimator",     "kalman filter",        "particle filter",     "image retrieval",
        "color histogram",     "texture descriptor",   "shape model",         "face detector",
        "pose estimation",     "scene graph",          "caption generator",   "dialogue system",
        "user simulator",      "evaluation metric",    "precision score",     "recall score",
        "annotation tool",     "parallel corpus",      "word alignment",      "phrase table"};

    b.function_words = {"the",  "a",     "an",   "is",    "are",   "was",   "were",  "be",
                        "been", "being", "am",   "do",    "does",  "did",   "of",    "for",
                        "with", "to",    "in",   "on",    "at",    "by",    "from",  "into",
                        "onto", "about", "as",   "than",  "and",   "or",    "nor",   "but",
                        "so",   "that",  "which", "who",  "this",  "these", "those", "it",
                        "its",  "there"};

    b.kg_template_words = {"used", "part", "compared", "feature", "kind", "evaluated", "combined", "has"};
    return b;
}

}  // namespace

std::vector<std::string> WordBanks::nouns_of(NounClass c) const {
    std::vector<std::string> out;
    for (const auto& n : nouns) {
        if (n.cls == c) out.push_back(n.word);
    }
    return out;
}

const WordBanks& WordBanks::builtin() {
    static const WordBanks banks = make_builtin();
    return banks;
}

const std::vector<std::string>& placeholder_letters() {
    static const std::vector<std::string> letters = {"B", "C", "D", "F", "G", "H", "J", "K", "L", "M",
                                                     "O", "P", "Q", "R", "T", "U", "V", "X", "Y", "Z"};
    return letters;
}

}  // namespace ilens
