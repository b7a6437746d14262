// Production kernels (im2col + GEMM, OpenMP) against the serial loop references.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lpnet/kernels.hpp"

namespace lpnet {
namespace {

std::vector<double> random_values(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = dist(rng);
  return v;
}

// range(0) = channels, range(1) = spatial size; 3x3, stride 1, pad 1.
template <auto Conv>
void BM_Conv3x3(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const auto g = make_conv_geometry(c, s, s, c, 3, 3, 1, 1);
  const auto x = random_values(c * s * s, 1);
  const auto w = random_values(c * c * 9, 2);
  const auto b = random_values(c, 3);
  std::vector<double> out(static_cast<std::size_t>(c * g.out_h * g.out_w));
  for (auto _ : state) {
    Conv(x, w, b, 1, g, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * 9 * g.out_h * g.out_w);
}

// Stride-2 4x4 transposed conv doubling range(1).
template <auto Conv>
void BM_ConvTranspose(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const auto g = make_conv_geometry(c, 2 * s, 2 * s, c, 4, 4, 2, 1);
  const auto y = random_values(c * s * s, 1);
  const auto w = random_values(c * c * 16, 2);
  const auto b = random_values(c, 3);
  std::vector<double> out(static_cast<std::size_t>(c * 4 * s * s));
  for (auto _ : state) {
    Conv(y, w, b, 1, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Resize>
void BM_Resize2x(benchmark::State& state) {
  const auto planes = state.range(0), s = state.range(1);
  const auto x = random_values(planes * s * s, 1);
  std::vector<double> out(static_cast<std::size_t>(planes * 4 * s * s));
  for (auto _ : state) {
    Resize(x, planes, s, s, 2 * s, 2 * s, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// Nine deformable taps per pixel, as in the 3x3 depth filters.
template <auto Sample>
void BM_SampleBilinear(benchmark::State& state) {
  const auto s = state.range(1);
  const std::int64_t taps = 9;
  const auto x = random_values(taps * s * s, 1);
  auto coords = random_values(taps * 2 * s * s, 2);
  for (auto& v : coords) v = (v + 1.0) * 0.5 * static_cast<double>(s - 1);
  std::vector<double> out(static_cast<std::size_t>(taps * s * s));
  for (auto _ : state) {
    Sample(x, coords, taps, 1, s, s, s, s, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Pool>
void BM_SumPool(benchmark::State& state) {
  const auto planes = state.range(0), s = state.range(1);
  const auto x = random_values(planes * s * s, 1);
  std::vector<double> out(static_cast<std::size_t>(planes * (s / 4) * (s / 4)));
  for (auto _ : state) {
    Pool(x, planes, s, s, 4, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({16, 64})->Args({32, 32})->Args({64, 16})->Args({128, 64})->Unit(benchmark::kMicrosecond);
}

BENCHMARK(BM_Conv3x3<kernels::conv2d_forward>)->Name("conv3x3/kernels")->Apply(sizes);
BENCHMARK(BM_Conv3x3<reference::conv2d_forward>)->Name("conv3x3/reference")->Apply(sizes);
BENCHMARK(BM_ConvTranspose<kernels::conv2d_transpose_forward>)->Name("conv_transpose/kernels")->Apply(sizes);
BENCHMARK(BM_ConvTranspose<reference::conv2d_transpose_forward>)->Name("conv_transpose/reference")->Apply(sizes);
BENCHMARK(BM_Resize2x<kernels::bilinear_resize_forward>)->Name("resize2x/kernels")->Apply(sizes);
BENCHMARK(BM_Resize2x<reference::bilinear_resize_forward>)->Name("resize2x/reference")->Apply(sizes);
BENCHMARK(BM_SampleBilinear<kernels::sample_bilinear_forward>)->Name("sample_bilinear/kernels")->Apply(sizes);
BENCHMARK(BM_SampleBilinear<reference::sample_bilinear_forward>)->Name("sample_bilinear/reference")->Apply(sizes);
BENCHMARK(BM_SumPool<kernels::sum_pool_forward>)->Name("sum_pool/kernels")->Apply(sizes);
BENCHMARK(BM_SumPool<reference::sum_pool_forward>)->Name("sum_pool/reference")->Apply(sizes);

}  // namespace
}  // namespace lpnet

BENCHMARK_MAIN();
