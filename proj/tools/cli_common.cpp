#include "cli_common.hpp"

#include <algorithm>
#include <cstdio>

#include "induction_lens/csv.hpp"

namespace ilens::cli {

void add_analysis_flags(CLI::App* app, AnalysisConfig& config) {
    app->add_option("--tau", config.tau, "Attention exclusivity ratio")->capture_default_str();
    app->add_flag("--no-tau-gate{false}", config.tau_gate, "Keep the argmax condition, drop the ratio test");
    app->add_option("--baseline-pos", config.baseline_pos, "0-based baseline tail position")->capture_default_str();
    app->add_flag_callback("--fullvocab-softmax", [&config] { config.softmax = SoftmaxMode::full_vocab; },
                           "Softmax over the whole vocabulary (default)");
    app->add_flag_callback("--restricted-softmax", [&config] { config.softmax = SoftmaxMode::restricted; },
                           "Softmax over the prefix tokens only");
    app->add_flag_callback("--circuit-attention", [&config] { config.attention = AttentionSource::circuit; },
                           "Attention from the QK circuit on embeddings instead of the forward pass");
    app->add_flag("--no-qk-scale{false}", config.qk_scale, "Drop 1/sqrt(d_head) in circuit attention");
    app->add_flag("--normalize-embeddings", config.normalize_embeddings);
    app->add_flag("--undefined-as-zero", config.undefined_as_zero, "Count undefined scores as 0");
    app->add_flag("--no-bos{false}", config.prepend_bos, "Do not prepend <bos> to analysis sequences");
}

std::vector<AnnotatedSentence> corpus_or_generated(const std::filesystem::path& corpus, Relation relation,
                                                   std::size_t n, std::uint64_t seed) {
    if (!corpus.empty()) return read_corpus(corpus);
    const auto& dep = dependency_relations();
    if (std::find(dep.begin(), dep.end(), relation) != dep.end()) return gen_dependency_corpus(seed, n);
    return gen_kg_corpus(seed, n);
}

void write_relation_table(const RelationIndexTable& table, const std::filesystem::path& out, std::uint64_t seed) {
    CsvTable t;
    t.comments = {schema_comment("relation-table", 1, seed),
                  "label=" + table.label + (table.reversed ? " reversed" : "")};
    t.header = {"layer", "head", "mean", "count"};
    for (std::size_t l = 0; l < table.n_layers; ++l) {
        for (std::size_t h = 0; h < table.n_heads; ++h) {
            const auto m = table.mean(l, h);
            t.rows.push_back({std::to_string(l), std::to_string(h),
                              format_number(m.value_or(std::numeric_limits<double>::quiet_NaN())),
                              std::to_string(table.count_at(l, h))});
        }
    }
    write_csv(out, t);
}

void print_relation_table(const RelationIndexTable& table) {
    std::printf("%s%s (rows: layers, columns: heads)\n", table.label.c_str(), table.reversed ? " reversed" : "");
    for (std::size_t l = 0; l < table.n_layers; ++l) {
        std::printf("L%-3zu", l);
        for (std::size_t h = 0; h < table.n_heads; ++h) {
            const auto m = table.mean(l, h);
            if (m) {
                std::printf(" %8.4f", *m);
            } else {
                std::printf(" %8s", "n/a");
            }
        }
        std::printf("\n");
    }
}

}  // namespace ilens::cli
