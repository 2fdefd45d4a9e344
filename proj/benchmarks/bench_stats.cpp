// SPDX-License-Identifier: Apache-2.0
#include "vice/stats/stats.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

std::pair<std::vector<double>, std::vector<double>> sample(std::size_t n) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> d(0.0, 10.0);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = d(rng);
        y[i] = 0.5 * x[i] + d(rng);
    }
    return {x, y};
}

void BM_Pearson(benchmark::State& state) {
    auto [x, y] = sample(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(vice::stats::pearson(x, y));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Pearson)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

void BM_Spearman(benchmark::State& state) {
    auto [x, y] = sample(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(vice::stats::spearman(x, y));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

void BM_PermutationP(benchmark::State& state) {
    auto [x, y] = sample(1000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            vice::stats::permutation_p(x, y, vice::stats::Method::Pearson, static_cast<int>(state.range(0)), 1));
    }
}
BENCHMARK(BM_PermutationP)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BlandAltman(benchmark::State& state) {
    auto [x, y] = sample(1000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vice::stats::bland_altman(x, y));
    }
}
BENCHMARK(BM_BlandAltman);

} // namespace
