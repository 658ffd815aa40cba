// Serial reference vs OpenMP for each kernel. Arg 0 selects the path.

#include <numeric>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "logmine/corpus.hpp"
#include "logmine/kernels.hpp"
#include "logmine/metrics.hpp"

namespace {

using namespace logmine;

const Corpus& corpus() {
    static const Corpus c = generate_synthetic({.n_clusters = 200, .logs_per_cluster = 500, .param_slots = 3, .seed = 1});
    return c;
}

const MinedClustering& base() {
    static const MinedClustering b = baseline_parse(corpus().logs, {.split_p = 0.3, .merge_p = 0.3, .truncate_p = 0.3, .seed = 1});
    return b;
}

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_CompleteMessages(benchmark::State& state) {
    const auto exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(complete_messages(base().pairs, corpus().logs, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().logs.size()));
}

void BM_FirstEmbeddingBatch(benchmark::State& state) {
    const auto exec = exec_of(state);
    const auto& gt = corpus().truth;
    std::vector<TokenSeq> templates(gt.templates().begin(), gt.templates().end());
    std::vector<LogIndex> batch(corpus().logs.size());
    std::iota(batch.begin(), batch.end(), LogIndex{0});
    for (auto _ : state) benchmark::DoNotOptimize(first_embedding_batch(templates, corpus().logs, batch, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}

void BM_Accuracy(benchmark::State& state) {
    const auto exec = exec_of(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(group_accuracy(base(), corpus().truth, exec));
        benchmark::DoNotOptimize(message_accuracy(base(), corpus().truth, exec));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().logs.size()));
}

}  // namespace

BENCHMARK(BM_CompleteMessages)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FirstEmbeddingBatch)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Accuracy)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
