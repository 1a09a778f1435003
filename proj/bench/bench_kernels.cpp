// Serial reference vs OpenMP kernels. Arg(0) = serial, Arg(1) = parallel.

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "hybrid/design_solver.hpp"
#include "hybrid/partition.hpp"
#include "hybrid/scenario.hpp"

namespace {

using namespace hybrid;

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_BruteForceDesign(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("car-n50000-99");
  ScanOpts opts;
  opts.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_design(s.params, s.cost_model, opts));
}
BENCHMARK(BM_BruteForceDesign)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExhaustiveDesign(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("charger-n1000-98");
  ScanOpts opts;
  opts.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_design(s.params, s.cost_model, opts));
}
BENCHMARK(BM_ExhaustiveDesign)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ScanOracle(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("car-n50000");
  const PartitionSetup setup{s.params, *s.shared_pool, *s.prosumers};
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_oracle(PartitionProblem::maximize, setup, exec_of(state)));
    benchmark::DoNotOptimize(scan_oracle(PartitionProblem::equalize, setup, exec_of(state)));
  }
}
BENCHMARK(BM_ScanOracle)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_AimdSeeds(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("car-n1000");
  const PartitionSetup setup{s.params, *s.shared_pool, *s.prosumers};
  AimdConfig cfg = s.aimd;
  cfg.max_iterations = 200'000;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_partition_seeds(PartitionProblem::maximize, setup, cfg, seeds, exec_of(state)));
  }
}
BENCHMARK(BM_AimdSeeds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SweepQos(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("car-n10000");
  const std::vector<double> grid{0.9, 0.92, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99, 0.995, 0.999};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_cost_vs_qos(s.params, s.cost_model, grid, s.solver, exec_of(state)));
  }
}
BENCHMARK(BM_SweepQos)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SweepPopulation(benchmark::State& state) {
  const ScenarioFile s = builtin_scenario("charger-n1000");
  const std::vector<count_t> grid{1000, 2000, 5000, 10000, 20000, 50000};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_cost_vs_n(s.params, s.cost_model, grid, s.solver, exec_of(state)));
  }
}
BENCHMARK(BM_SweepPopulation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
