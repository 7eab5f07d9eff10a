// Microbenchmarks contrasting the O(N) associative path with the quadratic
// forms across token counts.

#include <benchmark/benchmark.h>

#include "gdla/mixer.hpp"
#include "gdla/prng.hpp"
#include "gdla/runner.hpp"

namespace {

using namespace gdla;

HeadConfig bench_cfg() {
    HeadConfig cfg;
    cfg.d_model = 32;
    cfg.heads = 4;
    cfg.d_h = 8;
    return cfg;
}

void BM_LinearAttentionAssociative(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Xoshiro256ss rng(1);
    const HeadConfig cfg = bench_cfg();
    const Tensor x = random_gaussian({n, cfg.d_model}, rng);
    const MultiHeadWeights w = MultiHeadWeights::random(cfg, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            linear_attention_multihead(x, w, cfg, LinearMode::Associative));
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_SoftmaxAttention(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Xoshiro256ss rng(1);
    const HeadConfig cfg = bench_cfg();
    const Tensor x = random_gaussian({n, cfg.d_model}, rng);
    const MultiHeadWeights w = MultiHeadWeights::random(cfg, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax_attention_multihead(x, w, cfg));
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_GdlaBlock(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Xoshiro256ss rng(1);
    const HeadConfig cfg = bench_cfg();
    const FfnConfig ffn_cfg;
    const GridShape grid = near_square_grid(n);
    const Tensor x = random_gaussian({n, cfg.d_model}, rng);
    const MixerWeights w = MixerWeights::random(cfg, ffn_cfg, 3, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gdla_block_forward(x, grid, w, cfg, ffn_cfg));
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_Dwconv2d(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Xoshiro256ss rng(1);
    const GridShape grid = near_square_grid(n);
    const Tensor x = random_gaussian({n, 32}, rng);
    const Tensor ker = random_gaussian({32, 3, 3}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dwconv2d(x, grid, ker));
    }
}

}  // namespace

BENCHMARK(BM_LinearAttentionAssociative)->RangeMultiplier(2)->Range(256, 4096)->Complexity();
BENCHMARK(BM_SoftmaxAttention)->RangeMultiplier(2)->Range(256, 2048)->Complexity();
BENCHMARK(BM_GdlaBlock)->RangeMultiplier(2)->Range(256, 1024)->Complexity();
BENCHMARK(BM_Dwconv2d)->RangeMultiplier(2)->Range(256, 4096);

BENCHMARK_MAIN();
