#include <chrono>
#include <cstdio>
#include <memory>

#include "cli_common.hpp"
#include "induction_lens/corpus.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/trainer.hpp"
#include "induction_lens/training_stream.hpp"
#include "induction_lens/vocab.hpp"
#include "induction_lens/weights_io.hpp"

namespace ilens::cli {

namespace fs = std::filesystem;

namespace {

struct BuildCorpusArgs {
    std::string kind = "dependency";
    std::size_t n = 1000;
    fs::path out;
    bool substitute = false;
    bool strip = false;
    std::size_t min_entities = 2, max_entities = 5, min_edges = 2, max_edges = 5;
};

void build_corpus(const BuildCorpusArgs& a, const GlobalOptions& g) {
    std::vector<AnnotatedSentence> corpus;
    std::size_t dropped = 0;
    if (a.kind == "dependency") {
        if (a.substitute || a.strip) throw ConfigError("--substitute/--strip apply to knowledge-graph corpora only");
        corpus = gen_dependency_corpus(g.seed, a.n);
    } else if (a.kind == "kg") {
        KgCorpusConfig kc{a.min_entities, a.max_entities, a.min_edges, a.max_edges};
        corpus = gen_kg_corpus(g.seed, a.n, kc);
        for (auto& s : corpus) {
            if (a.substitute) s = substitute_entities(s);
            if (a.strip) {
                auto r = strip_function_words(s);
                dropped += r.dropped_triplets;
                s = std::move(r.sentence);
            }
        }
    } else {
        throw ConfigError("--kind must be dependency or kg");
    }
    write_corpus(a.out, corpus);
    std::size_t triplets = 0;
    for (const auto& s : corpus) triplets += s.triplets.size();
    std::printf("wrote %zu sentences, %zu triplets to %s\n", corpus.size(), triplets, a.out.string().c_str());
    if (a.strip) std::printf("dropped %zu triplets touching function words\n", dropped);
}

struct TrainArgs {
    ModelConfig model;
    std::string variant = "full";
    TrainConfig train;
    StreamConfig stream;
    bool resume = false;
};

void run_train(TrainArgs& a, const GlobalOptions& g) {
    a.model.variant = parse_variant(a.variant);
    a.model.vocab_size = Vocab::builtin().size();
    a.train.seed = g.seed;
    a.stream.seed = derive_seed(g.seed, "stream");
    if (a.stream.seq_len > a.model.max_seq_len) throw ConfigError("--seq-len exceeds --max-seq-len");
    auto stream = std::make_shared<TrainingStream>(a.stream);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r =
        train(a.model, a.train, [stream](std::size_t step) { return stream->batch(step); }, a.resume);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.loss_log.empty()) {
        std::printf("initial loss %.4f, final loss %.4f\n", r.loss_log.front().loss, r.loss_log.back().loss);
    }
    std::printf("%zu checkpoints in %s (%.1f s)\n", r.checkpoints.size(), a.train.out_dir.string().c_str(), secs);
}

struct GradCheckArgs {
    fs::path weights;
    ModelConfig model;
    std::string variant = "attention-only";
    GradCheckOptions opts;
    std::size_t seqs = 2;
    std::size_t seq_len = 12;
    double tolerance = 1e-3;
};

void run_grad_check(GradCheckArgs& a, const GlobalOptions& g) {
    ModelWeights w = [&] {
        if (!a.weights.empty()) return load_weights(a.weights);
        a.model.variant = parse_variant(a.variant);
        return init_random(a.model, g.seed);
    }();
    const ModelConfig& cfg = w.config();
    if (a.seq_len > cfg.max_seq_len || a.seq_len < 2) throw ConfigError("--seq-len out of range for the model");
    Rng rng(derive_seed(g.seed, "grad-check-batch"));
    std::vector<std::vector<TokenId>> batch(a.seqs);
    for (auto& s : batch) {
        for (std::size_t i = 0; i < a.seq_len; ++i) s.push_back(static_cast<TokenId>(uniform_index(rng, cfg.vocab_size)));
    }
    a.opts.seed = g.seed;
    const GradCheckResult r = grad_check(w, batch, a.opts);
    std::printf("checked %zu parameters: max rel error %.3e, mean %.3e\n", r.n_checked, r.max_rel_error,
                r.mean_rel_error);
    if (!(r.max_rel_error < a.tolerance)) {
        std::printf("FAIL: max rel error above tolerance %.1e\n", a.tolerance);
        throw ExitCode{2};
    }
}

}  // namespace

void register_data_commands(CLI::App& app, GlobalOptions& global) {
    auto bc = std::make_shared<BuildCorpusArgs>();
    CLI::App* c = app.add_subcommand("build-corpus", "Generate an annotated corpus as JSONL");
    c->add_option("--kind", bc->kind, "dependency or kg")->capture_default_str();
    c->add_option("-n,--count", bc->n, "Sentences (dependency) or passages (kg)")->capture_default_str();
    c->add_option("-o,--out", bc->out, "Output JSONL path")->required();
    c->add_flag("--substitute", bc->substitute, "Replace entity mentions with letters (kg)");
    c->add_flag("--strip", bc->strip, "Delete function words (kg)");
    c->add_option("--min-entities", bc->min_entities)->capture_default_str();
    c->add_option("--max-entities", bc->max_entities)->capture_default_str();
    c->add_option("--min-edges", bc->min_edges)->capture_default_str();
    c->add_option("--max-edges", bc->max_edges)->capture_default_str();
    c->callback([bc, &global] { build_corpus(*bc, global); });

    auto ta = std::make_shared<TrainArgs>();
    ta->model.max_seq_len = 256;
    CLI::App* t = app.add_subcommand("train", "Train a model on the synthetic stream with checkpoints");
    t->add_option("--out-dir", ta->train.out_dir, "Checkpoint directory")->required();
    t->add_option("--layers", ta->model.n_layers)->capture_default_str();
    t->add_option("--heads", ta->model.n_heads)->capture_default_str();
    t->add_option("--d-model", ta->model.d_model)->capture_default_str();
    t->add_option("--d-head", ta->model.d_head)->capture_default_str();
    t->add_option("--max-seq-len", ta->model.max_seq_len)->capture_default_str();
    t->add_option("--variant", ta->variant, "full or attention-only")->capture_default_str();
    t->add_option("--steps", ta->train.total_steps)->capture_default_str();
    t->add_option("--checkpoint-interval", ta->train.checkpoint_interval)->capture_default_str();
    t->add_option("--warmup", ta->train.warmup_steps)->capture_default_str();
    t->add_option("--lr", ta->train.peak_lr, "Peak learning rate")->capture_default_str();
    t->add_option("--min-lr", ta->train.floor_lr)->capture_default_str();
    t->add_option("--weight-decay", ta->train.weight_decay)->capture_default_str();
    t->add_option("--clip", ta->train.clip_norm)->capture_default_str();
    t->add_option("--seq-len", ta->stream.seq_len)->capture_default_str();
    t->add_option("--batch", ta->stream.seqs_per_step, "Sequences per step")->capture_default_str();
    t->add_flag("--resume", ta->resume, "Continue from the latest checkpoint in --out-dir");
    t->callback([ta, &global] { run_train(*ta, global); });

    auto ga = std::make_shared<GradCheckArgs>();
    ga->model = ModelConfig{1, 2, 16, 8, 24, 16, Variant::attention_only};
    CLI::App* gc = app.add_subcommand("grad-check", "Compare analytic gradients with central differences");
    gc->add_option("--weights", ga->weights, "Weights file; a random model is built when absent");
    gc->add_option("--layers", ga->model.n_layers)->capture_default_str();
    gc->add_option("--heads", ga->model.n_heads)->capture_default_str();
    gc->add_option("--d-model", ga->model.d_model)->capture_default_str();
    gc->add_option("--d-head", ga->model.d_head)->capture_default_str();
    gc->add_option("--vocab", ga->model.vocab_size)->capture_default_str();
    gc->add_option("--variant", ga->variant)->capture_default_str();
    gc->add_option("--params", ga->opts.n_params, "Parameters to check")->capture_default_str();
    gc->add_option("--epsilon", ga->opts.epsilon)->capture_default_str();
    gc->add_option("--seqs", ga->seqs)->capture_default_str();
    gc->add_option("--seq-len", ga->seq_len)->capture_default_str();
    gc->add_option("--tolerance", ga->tolerance)->capture_default_str();
    gc->callback([ga, &global] { run_grad_check(*ga, global); });
}

}  // namespace ilens::cli
