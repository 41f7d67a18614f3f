#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "induction_lens/corpus.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/training_stream.hpp"
#include "test_util.hpp"

using namespace ilens;

namespace {

bool has(const AnnotatedSentence& s, std::size_t head, Relation r, std::size_t tail) {
    for (const auto& t : s.triplets) {
        if (t.s == head && t.o == tail && t.relation == r) return true;
    }
    return false;
}

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

}  // namespace

TEST(DependencyCorpus, TransitiveTemplateTriplets) {
    const AnnotatedSentence s = realize_clause({"fox", "red", "chases", "", "dog", ""});
    EXPECT_EQ(s.surface, words({"the", "red", "fox", "chases", "the", "dog", "."}));
    EXPECT_EQ(s.triplets.size(), 3u);
    EXPECT_TRUE(has(s, 3, Relation::subj, 2));  // (chases, subj, fox)
    EXPECT_TRUE(has(s, 3, Relation::obj, 5));   // (chases, obj, dog)
    EXPECT_TRUE(has(s, 2, Relation::mod, 1));   // (fox, mod, red)
    EXPECT_EQ(s.tokens, Vocab::builtin().ids(s.surface));
}

TEST(DependencyCorpus, TripletsAreInRangeAndDistinct) {
    const auto corpus = gen_dependency_corpus(3, 2000);
    ASSERT_EQ(corpus.size(), 2000u);
    std::map<Relation, std::size_t> counts;
    for (const auto& s : corpus) {
        EXPECT_NO_THROW(s.validate());
        for (const auto& t : s.triplets) {
            EXPECT_NE(t.s, t.o);
            EXPECT_LT(t.s, s.size());
            EXPECT_LT(t.o, s.size());
            ++counts[t.relation];
        }
    }
    for (Relation r : dependency_relations()) EXPECT_GT(counts[r], 100u) << to_string(r);
}

TEST(DependencyCorpus, SeedRegeneratesIdentically) {
    EXPECT_EQ(gen_dependency_corpus(7, 10000), gen_dependency_corpus(7, 10000));
    EXPECT_NE(gen_dependency_corpus(7, 50), gen_dependency_corpus(8, 50));
}

TEST(DependencyCorpus, PrefixIsStableAcrossSizes) {
    const auto small = gen_dependency_corpus(5, 20);
    const auto large = gen_dependency_corpus(5, 40);
    EXPECT_TRUE(std::equal(small.begin(), small.end(), large.begin()));
}

TEST(KgCorpus, UsedForTemplate) {
    const AnnotatedSentence s = verbalize_edge(0, Relation::used_for, 1);
    EXPECT_EQ(s.surface, words({"laser", "scanner", "is", "used", "for", "surface", "mapping", "."}));
    ASSERT_EQ(s.triplets.size(), 1u);
    EXPECT_EQ(s.triplets[0], (Triplet{1, 6, Relation::used_for, false}));
    ASSERT_EQ(s.mentions.size(), 2u);
    EXPECT_EQ(s.mentions[0], (EntityMention{0, 2, 0}));
    EXPECT_EQ(s.mentions[1], (EntityMention{5, 7, 1}));
}

TEST(KgCorpus, ConjunctionIsSymmetric) {
    const AnnotatedSentence ab = verbalize_edge(0, Relation::conjunction, 1);
    const AnnotatedSentence ba = verbalize_edge(1, Relation::conjunction, 0);
    ASSERT_EQ(ab.size(), ba.size());
    // Same frame with the two mentions exchanged.
    std::multiset<std::string> wa(ab.surface.begin(), ab.surface.end()), wb(ba.surface.begin(), ba.surface.end());
    EXPECT_EQ(wa, wb);
    EXPECT_EQ(ab.surface[ab.mentions[0].end], "and");
    EXPECT_EQ(ba.surface[ba.mentions[0].end], "and");
    EXPECT_EQ(ab.triplets[0].relation, Relation::conjunction);
    EXPECT_EQ(ab.surface[ab.triplets[0].s], ba.surface[ba.triplets[0].o]);
    EXPECT_EQ(ab.surface[ab.triplets[0].o], ba.surface[ba.triplets[0].s]);
}

TEST(KgCorpus, EveryRelationAppearsInAtLeastFivePercentOfEdges) {
    std::map<Relation, std::size_t> counts;
    std::size_t total = 0;
    std::size_t passages = 0;
    while (total < 10000) {
        for (const auto& p : gen_kg_corpus(11 + passages, 500)) {
            for (const auto& t : p.triplets) {
                ++counts[t.relation];
                ++total;
            }
        }
        ++passages;
    }
    for (Relation r : kg_relations()) {
        EXPECT_GE(static_cast<double>(counts[r]) / static_cast<double>(total), 0.05) << to_string(r);
    }
}

TEST(KgCorpus, RejectsTooManyEntities) {
    KgCorpusConfig c;
    c.max_entities = 21;
    EXPECT_THROW(gen_kg_corpus(1, 2, c), ConfigError);
}

TEST(SubstituteEntities, LettersInFirstMentionOrder) {
    AnnotatedSentence p = verbalize_edge(4, Relation::part_of, 9);
    const AnnotatedSentence s = substitute_entities(p);
    EXPECT_EQ(s.surface.front(), "B");
    ASSERT_EQ(s.triplets.size(), 1u);
    EXPECT_EQ(s.surface[s.triplets[0].s], "B");
    EXPECT_EQ(s.surface[s.triplets[0].o], "C");
    EXPECT_EQ(s.tokens, Vocab::builtin().ids(s.surface));
    EXPECT_NO_THROW(s.validate());
}

TEST(SubstituteEntities, RepeatedEntityKeepsItsLetter) {
    AnnotatedSentence p = verbalize_edge(4, Relation::part_of, 9);
    append_sentence(p, verbalize_edge(9, Relation::compare, 4));
    const AnnotatedSentence s = substitute_entities(p);
    for (const auto& t : s.triplets) {
        const std::set<std::string> letters = {s.surface[t.s], s.surface[t.o]};
        EXPECT_EQ(letters, (std::set<std::string>{"B", "C"}));
    }
}

TEST(SubstituteEntities, NoEntitiesLeavesPassageUnchanged) {
    const AnnotatedSentence s = realize_clause({"fox", "", "chases", "", "dog", ""});
    EXPECT_EQ(substitute_entities(s), s);
}

TEST(SubstituteEntities, MoreThanTwentyEntitiesIsAnError) {
    AnnotatedSentence p = verbalize_edge(0, Relation::compare, 1);
    for (std::size_t e = 2; e < 22; e += 2) append_sentence(p, verbalize_edge(e, Relation::compare, e + 1));
    EXPECT_THROW(substitute_entities(p), InputError);
}

TEST(StripFunctionWords, KeepsTripletOnContentWords) {
    const AnnotatedSentence s = substitute_entities(verbalize_edge(0, Relation::used_for, 1));
    const StripResult r = strip_function_words(s);
    EXPECT_EQ(r.sentence.surface, words({"B", "used", "C", "."}));
    ASSERT_EQ(r.sentence.triplets.size(), 1u);
    EXPECT_EQ(r.dropped_triplets, 0u);
    EXPECT_EQ(r.sentence.surface[r.sentence.triplets[0].s], "B");
    EXPECT_EQ(r.sentence.surface[r.sentence.triplets[0].o], "C");
}

TEST(StripFunctionWords, OnlyStopwordsBecomesEmpty) {
    AnnotatedSentence s;
    s.surface = words({"the", "of", "is", "a"});
    s.tokens = Vocab::builtin().ids(s.surface);
    s.triplets = {{0, 1, Relation::mod, false}, {2, 3, Relation::subj, false}};
    const StripResult r = strip_function_words(s);
    EXPECT_TRUE(r.sentence.tokens.empty());
    EXPECT_TRUE(r.sentence.triplets.empty());
    EXPECT_EQ(r.dropped_triplets, 2u);
}

TEST(StripFunctionWords, RemapPreservesSurfaceAtTripletEnds) {
    for (const auto& p : gen_kg_corpus(5, 200)) {
        const StripResult r = strip_function_words(p);
        std::multiset<std::pair<std::string, std::string>> before, after;
        for (const auto& t : p.triplets) before.insert({p.surface[t.s], p.surface[t.o]});
        for (const auto& t : r.sentence.triplets) after.insert({r.sentence.surface[t.s], r.sentence.surface[t.o]});
        EXPECT_EQ(before.size(), after.size() + r.dropped_triplets);
        for (const auto& pr : after) EXPECT_TRUE(before.count(pr) > 0);
        EXPECT_NO_THROW(r.sentence.validate());
    }
}

TEST(CorpusIo, JsonlRoundTrip) {
    testutil::TempDir dir("corpus");
    auto corpus = gen_dependency_corpus(2, 30);
    const auto kg = gen_kg_corpus(2, 10);
    corpus.insert(corpus.end(), kg.begin(), kg.end());
    write_corpus(dir / "c.jsonl", corpus);
    EXPECT_EQ(read_corpus(dir / "c.jsonl"), corpus);
}

TEST(CorpusIo, MalformedLineIsCorruption) {
    testutil::TempDir dir("corpus");
    write_corpus(dir / "c.jsonl", gen_dependency_corpus(2, 3));
    {
        std::ofstream out(dir / "c.jsonl", std::ios::app);
        out << "{\"tokens\": [1, 2], \"surface\": [\"a\"]}\n";
    }
    EXPECT_THROW(read_corpus(dir / "c.jsonl"), CorruptionError);
}

TEST(TrainingStream, BatchesArePureFunctionsOfStep) {
    StreamConfig c;
    c.seq_len = 64;
    c.seqs_per_step = 3;
    const TrainingStream a(c), b(c);
    EXPECT_EQ(a.batch(17), b.batch(17));
    EXPECT_NE(a.batch(17), a.batch(18));
    for (const auto& s : a.batch(2)) {
        EXPECT_EQ(s.size(), 64u);
        for (TokenId t : s) EXPECT_LT(static_cast<std::size_t>(t), Vocab::builtin().size());
    }
}

TEST(TrainingStream, DocumentsStartWithBos) {
    for (Genre g : {Genre::dependency, Genre::knowledge, Genre::catalog}) {
        const auto doc = render_document(g, 9);
        ASSERT_FALSE(doc.empty());
        EXPECT_EQ(doc.front(), Vocab::builtin().bos());
    }
}

TEST(TrainingStream, HeldOutDocumentsAreSingleDocuments) {
    const TrainingStream s{StreamConfig{}};
    const auto docs = s.held_out_documents(20, 40, 60);
    ASSERT_EQ(docs.size(), 20u);
    const TokenId bos = Vocab::builtin().bos();
    for (const auto& d : docs) {
        EXPECT_GE(d.size(), 40u);
        EXPECT_LE(d.size(), 60u);
        EXPECT_EQ(d.front(), bos);
        EXPECT_EQ(std::count(d.begin(), d.end(), bos), 1);
    }
    EXPECT_EQ(docs, s.held_out_documents(20, 40, 60));
    EXPECT_THROW(s.held_out_documents(1, 61, 60), ConfigError);
    EXPECT_THROW(s.held_out_documents(1, 5000, 6000), ConfigError);
}
