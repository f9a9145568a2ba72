// Parallel kernels against their serial reference loops, at the shapes the
// four models use during training (micro batch 64, window 7, 7 features).
// Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "hypobench/autodiff/adam.hpp"
#include "hypobench/autodiff/kernels.hpp"
#include "hypobench/autodiff/ops.hpp"
#include "hypobench/common/alloc.hpp"
#include "hypobench/common/rng.hpp"
#include "hypobench/models/models.hpp"

namespace k = hypobench::kernels;
namespace ref = hypobench::kernels::reference;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    hypobench::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0)), n = static_cast<std::size_t>(state.range(1)),
               kk = static_cast<std::size_t>(state.range(2));
    const auto a = random_values(m * kk, 1), b = random_values(kk * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::gemm(m, n, kk, {a.data(), kk}, {b.data(), n}, c.data(), n, false);
        } else {
            ref::gemm(m, n, kk, {a.data(), kk}, {b.data(), n}, c.data(), n, false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * kk));
}

template <bool Parallel>
void BM_attention(benchmark::State& state) {
    const std::size_t batch = 64, heads = static_cast<std::size_t>(state.range(0)),
                      n = static_cast<std::size_t>(state.range(1)), dh = static_cast<std::size_t>(state.range(2));
    const std::size_t width = heads * dh;
    const auto q = random_values(batch * n * width, 3), kv = random_values(batch * n * width, 4),
               v = random_values(batch * n * width, 5), bias = random_values(n * n, 6);
    std::vector<double> out(batch * n * width), probs(batch * heads * n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::attention(batch, heads, n, dh, q.data(), kv.data(), v.data(), bias, 0.5, out.data(), probs.data());
        } else {
            ref::attention(batch, heads, n, dh, q.data(), kv.data(), v.data(), bias, 0.5, out.data(), probs.data());
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_softmax(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0)), cols = static_cast<std::size_t>(state.range(1));
    const auto logits = random_values(rows * cols, 7);
    std::vector<double> out(rows * cols);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::softmax_rows(rows, cols, logits.data(), {}, out.data());
        } else {
            ref::softmax_rows(rows, cols, logits.data(), {}, out.data());
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * cols));
}

template <bool Parallel>
void BM_conv(benchmark::State& state) {
    const std::size_t batch = 64, steps = 7, in = static_cast<std::size_t>(state.range(0)), out = 64, taps = 3;
    const auto x = random_values(batch * steps * in, 8), w = random_values(taps * in * out, 9);
    std::vector<double> y(batch * steps * out);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::causal_conv1d(batch, steps, in, out, taps, 2, x.data(), w.data(), y.data());
        } else {
            ref::causal_conv1d(batch, steps, in, out, taps, 2, x.data(), w.data(), y.data());
        }
        benchmark::DoNotOptimize(y.data());
    }
}

template <bool Parallel>
void BM_pairwise_dist(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 49;
    const auto x = random_values(rows * dim, 10);
    std::vector<double> out(rows * rows);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::pairwise_sq_dist(rows, dim, x.data(), out.data());
        } else {
            ref::pairwise_sq_dist(rows, dim, x.data(), out.data());
        }
        benchmark::DoNotOptimize(out.data());
    }
}

// One forward and backward pass of a full model on a 64-sample micro batch.
void BM_train_step(benchmark::State& state) {
    using namespace hypobench;
    models::ModelConfig config;
    config.architecture = models::kAllArchitectures[state.range(0)];
    auto model = models::make_model(config, 7, 7, 1);
    const auto x = ad::Tensor::from({64, 7, 7}, random_values(64 * 49, 11));
    std::vector<double> labels(64);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);
    Rng rng(12);
    auto params = model->parameter_tensors();
    for (auto _ : state) {
        ad::zero_grads(params);
        ad::backward(ad::binary_cross_entropy(model->forward(x, true, rng), labels));
    }
    state.SetLabel(std::string(models::architecture_tag(config.architecture)));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 64));
}

}  // namespace

BENCHMARK(BM_gemm<true>)->Name("gemm/parallel")->Args({448, 64, 64})->Args({64, 480, 127})->Args({3136, 64, 64});
BENCHMARK(BM_gemm<false>)->Name("gemm/reference")->Args({448, 64, 64})->Args({64, 480, 127})->Args({3136, 64, 64});
BENCHMARK(BM_attention<true>)->Name("attention/parallel")->Args({16, 49, 4})->Args({4, 7, 16});
BENCHMARK(BM_attention<false>)->Name("attention/reference")->Args({16, 49, 4})->Args({4, 7, 16});
BENCHMARK(BM_softmax<true>)->Name("softmax/parallel")->Args({50176, 49});
BENCHMARK(BM_softmax<false>)->Name("softmax/reference")->Args({50176, 49});
BENCHMARK(BM_conv<true>)->Name("conv1d/parallel")->Arg(7)->Arg(64);
BENCHMARK(BM_conv<false>)->Name("conv1d/reference")->Arg(7)->Arg(64);
BENCHMARK(BM_pairwise_dist<true>)->Name("pairwise_dist/parallel")->Arg(500);
BENCHMARK(BM_pairwise_dist<false>)->Name("pairwise_dist/reference")->Arg(500);
BENCHMARK(BM_train_step)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    hypobench::tune_allocator();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
