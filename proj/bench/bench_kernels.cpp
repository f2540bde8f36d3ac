#include <benchmark/benchmark.h>

#include <cstddef>
#include <random>
#include <vector>

#include "pgkb/kernels.hpp"

// Serial reference vs OpenMP kernels. Run with --benchmark_filter=... to
// isolate one family; the *_par/_serial pairs share identical inputs.

namespace {

std::vector<double> random_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void bm_dense_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_data(n * n, 1);
  const auto x = random_data(n, 2);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::serial::dense_matvec(a.data(), n, n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n) * static_cast<int64_t>(n));
}

void bm_dense_par(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_data(n * n, 1);
  const auto x = random_data(n, 2);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::par::dense_matvec(a.data(), n, n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n) * static_cast<int64_t>(n));
}

void bm_toeplitz_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = random_data(n, 3);
  const auto x = random_data(n, 4);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::serial::toeplitz_symm(g.data(), n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n) * static_cast<int64_t>(n));
}

void bm_toeplitz_par(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = random_data(n, 3);
  const auto x = random_data(n, 4);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::par::toeplitz_symm(g.data(), n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n) * static_cast<int64_t>(n));
}

void bm_wdg_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto w = random_data(n - 1, 5);
  for (auto& v : w) v = 1.0 + 0.5 * v;  // keep weights positive
  const auto x = random_data(n, 6);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::serial::weighted_diff_gram(w.data(), n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n));
}

void bm_wdg_par(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto w = random_data(n - 1, 5);
  for (auto& v : w) v = 1.0 + 0.5 * v;
  const auto x = random_data(n, 6);
  std::vector<double> y(n);
  for (auto _ : state) {
    pgkb::kernels::par::weighted_diff_gram(w.data(), n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n));
}

void bm_laplacian_serial(benchmark::State& state) {
  const auto nx = static_cast<std::size_t>(state.range(0));
  const auto ny = nx;
  const auto x = random_data(nx * ny, 7);
  std::vector<double> y(nx * ny);
  for (auto _ : state) {
    pgkb::kernels::serial::laplacian2d(nx, ny, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(nx) * static_cast<int64_t>(ny));
}

void bm_laplacian_par(benchmark::State& state) {
  const auto nx = static_cast<std::size_t>(state.range(0));
  const auto ny = nx;
  const auto x = random_data(nx * ny, 7);
  std::vector<double> y(nx * ny);
  for (auto _ : state) {
    pgkb::kernels::par::laplacian2d(nx, ny, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(nx) * static_cast<int64_t>(ny));
}

}  // namespace

BENCHMARK(bm_dense_serial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_dense_par)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(bm_toeplitz_serial)->Arg(1024)->Arg(8192);
BENCHMARK(bm_toeplitz_par)->Arg(1024)->Arg(8192);
BENCHMARK(bm_wdg_serial)->Arg(4096)->Arg(262144);
BENCHMARK(bm_wdg_par)->Arg(4096)->Arg(262144);
BENCHMARK(bm_laplacian_serial)->Arg(64)->Arg(512);
BENCHMARK(bm_laplacian_par)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
