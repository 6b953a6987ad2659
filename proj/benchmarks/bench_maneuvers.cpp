// Full solves of the built-in maneuvers. Counters report the horizon and
// switch count so runs can be compared against reference tables.

#include <benchmark/benchmark.h>

#include "reorient/structure.hpp"

using namespace reorient;

static void solve_maneuver(benchmark::State& state, const char* name, bool two_torque) {
  Maneuver m = builtin_maneuver(name);
  if (two_torque) {
    m.model = SpacecraftModel(m.model.a(), m.model.u_min(), m.model.u_max(),
                              TorqueMode::kTwoTorque);
  }
  SolveReport rep;
  for (auto _ : state) {
    rep = bbsoc_solve(m).report;
  }
  state.counters["tf"] = rep.final_time;
  state.counters["switches"] = static_cast<double>(rep.switch_times.size());
  state.counters["nlp_iterations"] = rep.nlp_iterations;
  if (!rep.success) state.SkipWithError(rep.message.c_str());
}

BENCHMARK_CAPTURE(solve_maneuver, RTR, "RTR", false)
    ->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_CAPTURE(solve_maneuver, NRTR, "NRTR", false)
    ->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_CAPTURE(solve_maneuver, NRTR_two_torque, "NRTR", true)
    ->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_CAPTURE(solve_maneuver, NRTR_NONSPIN, "NRTR_NONSPIN", false)
    ->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_CAPTURE(solve_maneuver, RTNR_INERTIAL, "RTNR_INERTIAL", false)
    ->Unit(benchmark::kSecond)->Iterations(1);
