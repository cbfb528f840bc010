#include <benchmark/benchmark.h>

#include "mammoth2/numerics/grad_check.hpp"
#include "mammoth2/numerics/ops.hpp"
#include "mammoth2/numerics/rng.hpp"

namespace {

using namespace m2::numerics;

void bench_mlp_forward_backward(benchmark::State& state) {
    const int64_t n = state.range(0), d = state.range(1);
    Rng rng(3);
    Array x = Array::randn({n, d}, rng);
    Array w1 = Array::randn({d, 4 * d}, rng, 0.02);
    Array b1 = Array::zeros({4 * d});
    Array w2 = Array::randn({4 * d, d}, rng, 0.02);
    Array b2 = Array::zeros({d});
    for (auto _ : state) {
        Tape t;
        Var h = linear(t, t.constant(x), t.leaf(&w1), t.leaf(&b1));
        h = silu(t, h);
        h = linear(t, h, t.leaf(&w2), t.leaf(&b2));
        Var loss = mean(t, mul(t, h, h));
        t.backward(loss);
        benchmark::DoNotOptimize(t.grad_for(&w1));
    }
    state.SetItemsProcessed(state.iterations() * n);
}

void bench_attention(benchmark::State& state) {
    const int64_t n = state.range(0), d = state.range(1);
    Rng rng(4);
    Array q = Array::randn({n, d}, rng);
    Array k = Array::randn({n, d}, rng);
    Array v = Array::randn({n, d}, rng);
    Array mask = causal_mask(n);
    for (auto _ : state) {
        Tape t;
        Var out = attention(t, t.leaf(&q), t.leaf(&k), t.leaf(&v), &mask);
        Var loss = mean(t, out);
        t.backward(loss);
        benchmark::DoNotOptimize(t.grad_for(&q));
    }
    state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(bench_mlp_forward_backward)->Args({64, 64})->Args({256, 64})->Args({256, 256});
BENCHMARK(bench_attention)->Args({64, 64})->Args({256, 64});

BENCHMARK_MAIN();
