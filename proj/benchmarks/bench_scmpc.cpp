#include <random>

#include <benchmark/benchmark.h>

#include "common/planted.hpp"
#include "scmpc/fhocp.hpp"
#include "scmpc/harness.hpp"
#include "scmpc/samplesize.hpp"
#include "scmpc/solver.hpp"

using namespace scmpc;

static void BM_MinScenarios(benchmark::State& state) {
  const double p = state.range(0) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(min_scenarios(p, 1e-9, 12));
}
BENCHMARK(BM_MinScenarios)->Arg(5)->Arg(30)->Arg(60)->Arg(95)->Arg(99);

static void BM_SolvePlanted(benchmark::State& state) {
  std::mt19937_64 g(1);
  testing::PlantedShape shape;
  shape.n = static_cast<int>(state.range(0));
  shape.orthant = 3 * shape.n;
  shape.soc = shape.n / 2;
  shape.rotated = shape.n / 4;
  shape.density = 0.2;
  const auto planted = testing::make_planted(g, shape);
  for (auto _ : state) benchmark::DoNotOptimize(solve(planted.program));
}
BENCHMARK(BM_SolvePlanted)->Arg(10)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

namespace {

const UncertainModel& plant() {
  static const UncertainModel model = example_plant();
  return model;
}

void run_fhocp(benchmark::State& state, FhocpStrategy strategy) {
  const int M = static_cast<int>(state.range(0));
  FhocpConfig cfg;
  const Multisample omega = draw_multisample(plant(), M, cfg.N, StreamKey{1, 0, 0, 0, StreamPurpose::kScenario});
  const Eigen::Vector2d x0(5, 2.75);
  FhocpOptions opt;
  opt.strategy = strategy;
  int rounds = 0;
  for (auto _ : state) {
    const FhocpSolution sol = solve_fhocp(x0, omega, plant(), cfg, opt);
    rounds = sol.rounds;
    benchmark::DoNotOptimize(sol.objective);
  }
  state.counters["rounds"] = rounds;
}

}  // namespace

static void BM_FhocpWorkingSet(benchmark::State& state) { run_fhocp(state, FhocpStrategy::kWorkingSet); }
BENCHMARK(BM_FhocpWorkingSet)->Arg(23)->Arg(44)->Arg(95)->Arg(893)->Unit(benchmark::kMillisecond);

static void BM_FhocpFull(benchmark::State& state) { run_fhocp(state, FhocpStrategy::kFull); }
BENCHMARK(BM_FhocpFull)->Arg(23)->Arg(95)->Arg(893)->Unit(benchmark::kMillisecond);

static void BM_ClosedLoopTrial(benchmark::State& state) {
  TrialConfig cfg;
  cfg.p = state.range(0) / 100.0;
  std::uint64_t trial = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_rh(plant(), cfg, trial++, false).failure);
}
BENCHMARK(BM_ClosedLoopTrial)->Arg(5)->Arg(95)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
