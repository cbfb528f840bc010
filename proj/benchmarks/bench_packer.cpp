#include <benchmark/benchmark.h>

#include "mammoth2/numerics/rng.hpp"
#include "mammoth2/packer/packer.hpp"

namespace {

std::vector<m2::packer::PackItem> workload(int n, uint64_t seed) {
    m2::numerics::Rng rng(seed);
    std::vector<m2::packer::PackItem> items(static_cast<size_t>(n));
    for (size_t i = 0; i < items.size(); ++i)
        items[i] = m2::packer::PackItem{static_cast<int64_t>(i), 1 + rng.uniform_int(512)};
    return items;
}

void bench_pack(benchmark::State& state) {
    auto items = workload(static_cast<int>(state.range(0)), 7);
    int window = static_cast<int>(state.range(1));
    int64_t tokens = 0;
    for (auto _ : state) {
        auto res = m2::packer::pack(items, 4096, window);
        benchmark::DoNotOptimize(res);
        for (const auto& b : res.batches) tokens += b.total_tokens;
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    benchmark::DoNotOptimize(tokens);
}

void bench_throughput_sim(benchmark::State& state) {
    m2::numerics::Rng rng(9);
    std::vector<int64_t> lengths(static_cast<size_t>(state.range(0)));
    for (auto& v : lengths) v = 1 + rng.uniform_int(512);
    for (auto _ : state) {
        auto stats = m2::packer::throughput_sim(lengths, 4096, 64);
        benchmark::DoNotOptimize(stats);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bench_pack)->Args({10000, 1})->Args({10000, 16})->Args({10000, 64})->Args({100000, 64});
BENCHMARK(bench_throughput_sim)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
