#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "induction_lens/corpus.hpp"
#include "induction_lens/relation_metrics.hpp"

namespace ilens::cli {

// Raised by a subcommand that finished but wants a non-zero exit code.
struct ExitCode {
    int code;
};

struct GlobalOptions {
    std::uint64_t seed = 1;
    bool deterministic = false;
};

void add_analysis_flags(CLI::App* app, AnalysisConfig& config);

// Corpus from --corpus when given, otherwise generated from the seed: dependency sentences for
// dependency relations, knowledge-graph passages for the rest.
std::vector<AnnotatedSentence> corpus_or_generated(const std::filesystem::path& corpus, Relation relation,
                                                   std::size_t n, std::uint64_t seed);

void write_relation_table(const RelationIndexTable& table, const std::filesystem::path& out, std::uint64_t seed);
void print_relation_table(const RelationIndexTable& table);

void register_data_commands(CLI::App& app, GlobalOptions& global);     // build-corpus, train, grad-check
void register_analyze_commands(CLI::App& app, GlobalOptions& global);  // analyze, icl, probe
void register_report_commands(CLI::App& app, GlobalOptions& global);   // sweep, report

}  // namespace ilens::cli
