#include <benchmark/benchmark.h>

#include "decept/evaluator.hpp"
#include "decept/gp_solver.hpp"
#include "decept/instance.hpp"
#include "decept/program.hpp"
#include "decept/scp.hpp"

using namespace decept;

namespace {

const Instance& bundled() {
  static const Instance inst = load_instance(DECEPT_DATA_DIR "/sf_grid_synthetic.json");
  return inst;
}

SpParameters with_horizon(int horizon) {
  SpParameters p = bundled().problem;
  p.horizon = horizon;
  return p;
}

}  // namespace

static void BM_ExactEvaluation(benchmark::State& state) {
  const Instance& inst = bundled();
  const auto u = Allocation::uniform(inst.model.num_states(), inst.problem.budget).utilities;
  const Policy pi = derive_policy(inst.model, u, inst.profile);
  const auto r = defender_rewards(inst.profile, u);
  const int h = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_cost(inst.model, pi, r, h).total);
    benchmark::DoNotOptimize(reach_probability(inst.model, pi, h).total);
  }
}
BENCHMARK(BM_ExactEvaluation)->Arg(5)->Arg(20)->Arg(80);

static void BM_MonteCarlo(benchmark::State& state) {
  const Instance& inst = bundled();
  const auto u = Allocation::uniform(inst.model.num_states(), inst.problem.budget).utilities;
  const Policy pi = derive_policy(inst.model, u, inst.profile);
  const auto r = defender_rewards(inst.profile, u);
  MonteCarloOptions opt;
  opt.paths = 10000;
  opt.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo(inst.model, pi, r, 20, opt).cost.mean);
  }
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

static void BM_Condense(benchmark::State& state) {
  const Instance& inst = bundled();
  const SpProblem sp = build_sp(inst.model, inst.profile, with_horizon(static_cast<int>(state.range(0))));
  const LiftedPoint lp = initial_point(sp, inst.model, inst.profile);
  for (auto _ : state) {
    benchmark::DoNotOptimize(condense(sp, lp.assignment).inequalities.size());
  }
}
BENCHMARK(BM_Condense)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_GpSolve(benchmark::State& state) {
  const Instance& inst = bundled();
  const SpProblem sp = build_sp(inst.model, inst.profile, with_horizon(static_cast<int>(state.range(0))));
  const LiftedPoint lp = initial_point(sp, inst.model, inst.profile);
  const GpProblem gp = trust_region(condense(sp, lp.assignment), lp.assignment, 1.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(gp, lp.assignment).objective);
  }
}
BENCHMARK(BM_GpSolve)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_ScpRun(benchmark::State& state) {
  const Instance& inst = bundled();
  const SpParameters p = with_horizon(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(inst.model, inst.profile, p, inst.scp).q);
  }
}
BENCHMARK(BM_ScpRun)->Arg(3)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
