// Parallel kernels against the serial reference loops.

#include "irisnas/kernels.hpp"
#include "irisnas/reference.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using irisnas::Shape;
using irisnas::Tensor;

template <class T>
Tensor<T> random_tensor(Shape s, unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Tensor<T> t(s);
    for (auto& v : t.values())
        v = static_cast<T>(nd(rng));
    return t;
}

void BM_Conv3x3Parallel(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_tensor<float>({n, 8, 8, 64}, 1);
    const auto k = random_tensor<float>({8, 8, 3, 3}, 2);
    Tensor<float> y;
    for (auto _ : state) {
        irisnas::kernels::conv2d_forward(x, k, 1, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["FLOPS"] = benchmark::Counter(2.0 * 9 * 64 * 512 * static_cast<double>(n),
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3Parallel)->Arg(1)->Arg(32);

void BM_Conv3x3Backward(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_tensor<float>({n, 8, 8, 64}, 1);
    const auto k = random_tensor<float>({8, 8, 3, 3}, 2);
    const auto gy = random_tensor<float>({n, 8, 8, 64}, 3);
    Tensor<float> gx(x.shape());
    Tensor<float> gk(k.shape());
    for (auto _ : state) {
        irisnas::kernels::conv2d_backward(x, k, 1, gy, &gx, &gk);
        benchmark::DoNotOptimize(gx.data());
    }
    state.counters["FLOPS"] = benchmark::Counter(4.0 * 9 * 64 * 512 * static_cast<double>(n),
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3Backward)->Arg(32);

void BM_Conv3x3Reference(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_tensor<double>({n, 8, 8, 64}, 1);
    const auto k = random_tensor<double>({8, 8, 3, 3}, 2);
    for (auto _ : state) {
        auto y = irisnas::reference::conv2d(x, k, 1);
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["FLOPS"] = benchmark::Counter(2.0 * 9 * 64 * 512 * static_cast<double>(n),
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3Reference)->Arg(1)->Arg(32);

void BM_MaxPoolParallel(benchmark::State& state)
{
    const auto x = random_tensor<float>({32, 8, 8, 64}, 1);
    Tensor<float> y;
    std::vector<std::uint32_t> arg;
    for (auto _ : state) {
        irisnas::kernels::pool2d_forward(x, irisnas::kernels::PoolKind::max, 2, y, &arg);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_MaxPoolParallel);

void BM_MaxPoolReference(benchmark::State& state)
{
    const auto x = random_tensor<double>({32, 8, 8, 64}, 1);
    for (auto _ : state) {
        auto y = irisnas::reference::pool2d(x, irisnas::kernels::PoolKind::max, 2);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_MaxPoolReference);

}  // namespace

BENCHMARK_MAIN();
