#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kgflow/estimators.hpp"
#include "kgflow/filters.hpp"
#include "kgflow/harness.hpp"
#include "kgflow/inference.hpp"
#include "kgflow/kernels.hpp"

namespace {

using namespace kgflow;

std::vector<double> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(n);
  for (double& xi : x) xi = unif(rng);
  return x;
}

void BM_GramAssembly(benchmark::State& state) {
  const Kernel kernel = Kernel::periodic_matern32(0.433);
  const auto x = random_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel.gram(x));
  }
}
BENCHMARK(BM_GramAssembly)->Arg(200)->Arg(500)->Arg(1000);

void BM_Decompose(benchmark::State& state) {
  const Kernel kernel = Kernel::min();
  const auto x = random_points(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompose(kernel, x));
  }
}
BENCHMARK(BM_Decompose)->Arg(200)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SpectralFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset data = generate_data(TruthFunction::f1(), n, 0.2, 3);
  const auto cache = decompose(Kernel::min(), data.x);
  const FilterParams filter = FilterParams::continuous(100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_kgf_spectral(cache, data.y, filter));
  }
}
BENCHMARK(BM_SpectralFit)->Arg(200)->Arg(1000);

void BM_FilterVectors(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset data = generate_data(TruthFunction::f3(), n, 0.2, 4);
  const auto cache = decompose(Kernel::periodic_matern32(0.433), data.x);
  const auto grid = evaluation_grid(1001, data.x);
  const FilterVectorBuilder builder(cache, grid);
  const FilterParams filter = FilterParams::continuous(0.2 * static_cast<double>(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(builder.build(filter));
  }
}
BENCHMARK(BM_FilterVectors)->Arg(200)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BootstrapSups(benchmark::State& state) {
  const std::size_t n = 500;
  const Dataset data = generate_data(TruthFunction::f3(), n, 0.2, 5);
  const auto cache = decompose(Kernel::periodic_matern32(0.433), data.x);
  const FilterParams filter = FilterParams::continuous(100.0);
  const auto est = fit_kgf_spectral(cache, data.y, filter);
  const Eigen::VectorXd eps = residuals(est, data);
  const auto field = filter_vectors(*cache, filter, evaluation_grid(1001, data.x));
  const auto cov = empirical_cov_diag(field, eps);
  const auto b = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_sup_samples(field, cov, eps, b, 99));
  }
}
BENCHMARK(BM_BootstrapSups)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
