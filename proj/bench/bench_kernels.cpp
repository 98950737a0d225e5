// Serial reference path (workers = 1) against the OpenMP path for the three
// kernels that dominate run time. The argument is the worker count.

#include <benchmark/benchmark.h>

#include <numeric>
#include <thread>

#include "hte/forest.hpp"
#include "hte/inference.hpp"
#include "hte/sim.hpp"

namespace {

using namespace hte;

const SimulatedData& panel() {
  static const SimulatedData p = [] {
    DgpConfig g;
    g.kind = DgpKind::Kink;
    g.n = 2000;
    g.seed = 1;
    return generate(g);
  }();
  return p;
}

void BM_ForestFit(benchmark::State& state) {
  const auto& ds = panel().ds;
  const auto x = ds.covariates();
  const std::vector<double> y(ds.outcome().begin(), ds.outcome().end());
  ForestConfig fc;
  fc.trees = 50;
  const ExecPolicy exec{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(fit_regression_forest(x, y, ds.cluster(), fc, exec));
}

void BM_DominanceBattery(benchmark::State& state) {
  const auto& ds = panel().ds;
  std::vector<double> cates(ds.size());
  for (std::size_t i = 0; i < cates.size(); ++i) cates[i] = ds.covariates()(i, 0) - 3000.0;
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<std::vector<std::size_t>> groups{all};
  const BootstrapPlan plan{199, 7};
  const ExecPolicy exec{static_cast<int>(state.range(0))};
  for (auto _ : state)
    benchmark::DoNotOptimize(dominance_battery(cates, fixed_model_refit(cates), ds, groups, plan, exec));
}

void BM_MonteCarlo(benchmark::State& state) {
  MonteCarloConfig mc;
  mc.dgps = {DgpKind::Dgp1};
  mc.sizes = {500};
  mc.reps = 20;
  mc.replicates = 99;
  const ExecPolicy exec{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(mc, exec));
}

void worker_counts(benchmark::internal::Benchmark* b) {
  const int hw = static_cast<int>(std::max(2u, std::thread::hardware_concurrency()));
  b->Arg(1)->Arg(hw)->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_ForestFit)->Apply(worker_counts);
BENCHMARK(BM_DominanceBattery)->Apply(worker_counts);
BENCHMARK(BM_MonteCarlo)->Apply(worker_counts);

BENCHMARK_MAIN();
