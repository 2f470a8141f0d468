#include <benchmark/benchmark.h>

#include <vector>

#include "slowfast/ergodicity.hpp"
#include "slowfast/metrics.hpp"
#include "slowfast/models.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/simulate.hpp"
#include "slowfast/stationary.hpp"

using namespace slowfast;

static void BM_NormalStream(benchmark::State& state) {
  NormalStream s(1, 0, StreamTag::slow);
  for (auto _ : state) benchmark::DoNotOptimize(s.next());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NormalStream);

static void BM_CoupledSteps(benchmark::State& state) {
  const auto model = get_builtin("ou-coupled");
  SimConfig cfg;
  cfg.epsilon = 0.01;
  cfg.dt = 1e-2;
  cfg.horizon = 1.0;
  cfg.n_paths = static_cast<std::size_t>(state.range(0));
  cfg.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_coupled(model, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cfg.n_paths * macro_steps(cfg) *
                                                                  fast_substeps(cfg)));
}
BENCHMARK(BM_CoupledSteps)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_StationaryDensity(benchmark::State& state) {
  const auto model = get_builtin("example21");
  for (auto _ : state) benchmark::DoNotOptimize(stationary_density(model, 0.5));
}
BENCHMARK(BM_StationaryDensity)->Unit(benchmark::kMillisecond);

static void BM_BoundedLipschitz(benchmark::State& state) {
  const auto model = get_builtin("ou-coupled");
  const auto atoms = static_cast<std::size_t>(state.range(0));
  const auto p = atomize(stationary_density(model, 0.0), atoms);
  const auto q = atomize(stationary_density(model, 1.5), atoms);
  for (auto _ : state) benchmark::DoNotOptimize(wbl_distance(p, q));
}
BENCHMARK(BM_BoundedLipschitz)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ForwardPde(benchmark::State& state) {
  const auto model = get_builtin("ou-coupled");
  const auto grid = pde_grid(model, 1.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(forward_pde_solve(model, 1.0, 3.0, 5.0, grid));
}
BENCHMARK(BM_ForwardPde)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
