// Serial reference path vs OpenMP ensemble path for the empirical gramians of the RC ladder.
// EMBALANCE_THREADS caps the thread count of the parallel variants.

#include <benchmark/benchmark.h>

#include "embalance/gramians.hpp"

using namespace embalance;

namespace {

EmpiricalOptions options(Execution exec) {
  EmpiricalOptions o;
  o.exec = exec;
  return o;
}

void BM_Observability(benchmark::State& state, Execution exec) {
  const NonlinearModel m = build_rc_ladder(state.range(0));
  const auto sets = PerturbationSets::identity({-0.01, 0.01});
  const QuadratureConfig quad{1.0, 101, QuadratureRule::simpson};
  for (auto _ : state) {
    Gramian q = nonlinear_observability(m, sets, quad, options(exec));
    benchmark::DoNotOptimize(q.matrix.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}

void BM_Controllability(benchmark::State& state, Execution exec) {
  const NonlinearModel m = build_rc_ladder(state.range(0));
  const auto sets = PerturbationSets::identity({-1e-13, 1e-13});
  const QuadratureConfig quad{0.16, 101, QuadratureRule::simpson};
  for (auto _ : state) {
    Gramian p = nonlinear_controllability(m, sets, quad, options(exec));
    benchmark::DoNotOptimize(p.matrix.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}

void BM_LallObservability(benchmark::State& state, Execution exec) {
  const NonlinearModel m = build_rc_ladder(state.range(0));
  const auto sets = PerturbationSets::identity({-0.1, -0.01, 0.01, 0.1});
  const QuadratureConfig quad{1.0, 101, QuadratureRule::simpson};
  for (auto _ : state) {
    Gramian q = lall_observability(m, sets, quad, options(exec));
    benchmark::DoNotOptimize(q.matrix.data());
  }
  state.SetItemsProcessed(state.iterations() * 4 * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Observability, serial, Execution::serial)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Observability, parallel, Execution::parallel)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Controllability, serial, Execution::serial)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Controllability, parallel, Execution::parallel)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LallObservability, serial, Execution::serial)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LallObservability, parallel, Execution::parallel)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
