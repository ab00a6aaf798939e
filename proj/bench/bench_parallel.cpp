// Serial references against the OpenMP kernels. Thread count follows
// OMP_NUM_THREADS / REBAL_THREADS.

#include <benchmark/benchmark.h>

#include "rebal/asymptotics.hpp"
#include "rebal/free_boundary_solver.hpp"
#include "rebal/simulator.hpp"

namespace {

const rebal::MarketParams kParams{0.08, 0.16, 5.0, 1e-3, 1e-4};

const rebal::PolicyTable& optimal_table() {
  static const rebal::TradingPolicy u(rebal::solve(kParams));
  static const rebal::PolicyTable table([](double y) { return u(y); });
  return table;
}

rebal::SimConfig sim_config(long paths) {
  rebal::SimConfig c;
  c.horizon = 2.0;
  c.burn_in = 1.0;
  c.dt = 2e-3;
  c.n_paths = paths;
  return c;
}

void BM_paths_serial(benchmark::State& state) {
  const auto& u = optimal_table();
  const auto c = sim_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rebal::simulate_paths_serial(kParams, u, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_paths_parallel(benchmark::State& state) {
  const auto& u = optimal_table();
  const auto c = sim_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rebal::simulate_paths(kParams, u, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void scan(benchmark::State& state, bool parallel) {
  const auto in = rebal::make_asymptotic_inputs(kParams);
  rebal::ScanOptions opts;
  opts.points = static_cast<int>(state.range(0));
  opts.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(rebal::find_z_minus(in, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_scan_serial(benchmark::State& state) { scan(state, false); }
void BM_scan_parallel(benchmark::State& state) { scan(state, true); }

}  // namespace

BENCHMARK(BM_paths_serial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_paths_parallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_scan_serial)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_scan_parallel)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
