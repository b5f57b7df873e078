// Serial reference kernels against the OpenMP kernels, at the shapes an MLP
// layer sees during training (P sample points by width).

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "invrend/kernels.hpp"

using namespace invrend;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

using Gemm = void (*)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);

/// Args: rows P, layer width W, OpenMP threads.
template <Gemm kernel>
void gemm_layer(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    kernels::set_num_threads(static_cast<int>(state.range(2)));
    const auto a = random_values(p * w, 1), b = random_values(w * w, 2);
    std::vector<double> c(p * w);
    for (auto _ : state) {
        kernel(a.data(), b.data(), c.data(), p, w, w);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * p * w * w));
}

/// Weight gradient: A^T B with A, B of [P, W].
template <Gemm kernel>
void gemm_weight_grad(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    kernels::set_num_threads(static_cast<int>(state.range(2)));
    const auto a = random_values(p * w, 3), b = random_values(p * w, 4);
    std::vector<double> c(w * w);
    for (auto _ : state) {
        kernel(a.data(), b.data(), c.data(), w, p, w);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * p * w * w));
}

template <decltype(&kernels::serial::segment_sum) kernel>
void segment_sum(benchmark::State& state) {
    const auto rays = static_cast<std::size_t>(state.range(0));
    const std::size_t samples = 64, cols = 3;
    kernels::set_num_threads(static_cast<int>(state.range(1)));
    const auto in = random_values(rays * samples * cols, 5);
    std::vector<double> out(rays * cols);
    for (auto _ : state) {
        kernel(in.data(), out.data(), rays, samples, cols);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rays * samples * cols));
}

void layer_args(benchmark::internal::Benchmark* b) {
    for (long p : {4096L, 16384L})
        for (long w : {32L, 128L}) b->Args({p, w, 1});
}

void parallel_layer_args(benchmark::internal::Benchmark* b) {
    for (long p : {4096L, 16384L})
        for (long w : {32L, 128L})
            for (long t : {1L, 2L, 4L}) b->Args({p, w, t});
}

}  // namespace

BENCHMARK(gemm_layer<kernels::serial::gemm>)->Apply(layer_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gemm_layer<kernels::parallel::gemm>)->Apply(parallel_layer_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gemm_weight_grad<kernels::serial::gemm_tn>)->Apply(layer_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gemm_weight_grad<kernels::parallel::gemm_tn>)->Apply(parallel_layer_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(segment_sum<kernels::serial::segment_sum>)->Args({8192, 1})->UseRealTime();
BENCHMARK(segment_sum<kernels::parallel::segment_sum>)->ArgsProduct({{8192}, {1, 2, 4}})->UseRealTime();

BENCHMARK_MAIN();
