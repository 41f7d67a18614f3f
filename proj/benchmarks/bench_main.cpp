#include <benchmark/benchmark.h>

#include "induction_lens/circuits.hpp"
#include "induction_lens/corpus.hpp"
#include "induction_lens/random.hpp"
#include "induction_lens/relation_metrics.hpp"
#include "induction_lens/trainer.hpp"
#include "induction_lens/training_stream.hpp"

using namespace ilens;

namespace {

TensorF32 random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(r * c);
    for (float& x : v) x = static_cast<float>(standard_normal(rng));
    return TensorF32::matrix(r, c, v);
}

ModelConfig desk_model() {
    ModelConfig c;
    c.vocab_size = Vocab::builtin().size();
    return c;  // 4 layers, 4 heads, d_model 128
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TensorF32 a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_Forward(benchmark::State& state) {
    const ModelWeights w = init_random(desk_model(), 1);
    const auto len = static_cast<std::size_t>(state.range(0));
    const auto seq = TrainingStream(StreamConfig{}).held_out(1, len).front();
    for (auto _ : state) benchmark::DoNotOptimize(forward(w, seq));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * len));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_TrainSteps(benchmark::State& state) {
    StreamConfig sc;
    sc.seq_len = 128;
    sc.seqs_per_step = 4;
    const TrainingStream stream(sc);
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "ilens_bench_train";
    for (auto _ : state) {
        std::filesystem::remove_all(dir);
        TrainConfig t;
        t.total_steps = 4;
        t.checkpoint_interval = 4;
        t.warmup_steps = 1;
        t.out_dir = dir;
        benchmark::DoNotOptimize(train(desk_model(), t, [&](std::size_t s) { return stream.batch(s); }));
    }
    std::filesystem::remove_all(dir);
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 4 * 4 * 128));
}
BENCHMARK(BM_TrainSteps)->Unit(benchmark::kMillisecond)->Iterations(3);

static void BM_RelationIndexTable(benchmark::State& state) {
    const ModelWeights w = init_random(desk_model(), 3);
    const auto corpus = gen_dependency_corpus(1, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(relation_index_table(w, corpus, Relation::subj, AnalysisConfig{}));
}
BENCHMARK(BM_RelationIndexTable)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_MhaRewrite(benchmark::State& state) {
    ModelConfig c;
    c.n_layers = 1;
    c.vocab_size = 16;
    const ModelWeights w = init_random(c, 4);
    const TensorF32 x = random_matrix(64, 128, 5);
    for (auto _ : state) benchmark::DoNotOptimize(verify_mha_rewrite(w, 0, x));
}
BENCHMARK(BM_MhaRewrite)->Unit(benchmark::kMillisecond);
