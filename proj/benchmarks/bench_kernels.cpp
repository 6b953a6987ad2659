#include <benchmark/benchmark.h>

#include "reorient/lgr.hpp"
#include "reorient/nlp.hpp"
#include "reorient/oracle.hpp"
#include "reorient/pmp.hpp"
#include "reorient/transcription.hpp"

using namespace reorient;

static void BM_RadauRule(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const LgrRule r = lgr_points_weights(n);
    benchmark::DoNotOptimize(differentiation_matrix(r.support_points()));
  }
}
BENCHMARK(BM_RadauRule)->Arg(3)->Arg(8)->Arg(12);

static void BM_SwitchingDerivatives(benchmark::State& state) {
  const SpacecraftModel model{0.5};
  const State y{0.3, -0.2, 0.7, 0.4, -0.6};
  const Costate l{0.1, -0.4, 0.2, 0.9, -0.3};
  const Control u{1.0, -1.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(switching_derivatives(model, y, l, u, 0));
}
BENCHMARK(BM_SwitchingDerivatives);

static void BM_TranscriptionDerivatives(benchmark::State& state) {
  const Maneuver m = builtin_maneuver("RTR");
  const CollocationProblem p = transcribe(m, Mesh::uniform(static_cast<int>(state.range(0)), 3));
  const Eigen::VectorXd x = p.default_initial_point(2.5);
  Eigen::VectorXd c;
  SparseMatrix jac, hess;
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(p.num_constraints());
  for (auto _ : state) {
    p.constraints(x, c);
    p.constraint_jacobian(x, jac);
    p.lagrangian_hessian(x, 1.0, y, hess);
    benchmark::DoNotOptimize(hess.nonZeros());
  }
  state.counters["variables"] = p.num_variables();
}
BENCHMARK(BM_TranscriptionDerivatives)->Arg(20)->Arg(80);

static void BM_ExtremalFlow(benchmark::State& state) {
  const Maneuver m = builtin_maneuver("RTR");
  const Costate l0{0.77, -0.034, 0.10, 0.26, -0.21};
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_extremal(m.model, m.bc.initial, l0, 2.5));
  }
}
BENCHMARK(BM_ExtremalFlow)->Unit(benchmark::kMillisecond);
