// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "reorient/dynamics.hpp"
#include "reorient/lgr.hpp"
#include "reorient/oracle.hpp"
#include "reorient/pmp.hpp"
#include "reorient/structure.hpp"

using namespace reorient;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(fmt::format("{}{}", ok ? "" : "!", what));
  }
};

struct Solved {
  BbsocResult result;
  double seconds = 0.0;
};

Solved solve(Maneuver m) {
  const auto t0 = std::chrono::steady_clock::now();
  Solved s{bbsoc_solve(m), 0.0};
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

Maneuver two_torque(Maneuver m) {
  m.model = SpacecraftModel(m.model.a(), m.model.u_min(), m.model.u_max(), TorqueMode::kTwoTorque);
  return m;
}

double max_h_error(const Trajectory& t) {
  double e = 0.0;
  for (const auto& p : t.points) e = std::max(e, std::abs(p.hamiltonian + 1.0));
  return e;
}

void check_switches(Verdict& v, const SolveReport& rep, const std::vector<double>& want) {
  if (rep.switch_times.size() != want.size()) {
    v.expect(false, fmt::format("{} switches, want {}", rep.switch_times.size(), want.size()));
    return;
  }
  double worst = 0.0;
  for (size_t k = 0; k < want.size(); ++k) {
    worst = std::max(worst, std::abs(rep.switch_times[k] - want[k]));
  }
  v.expect(worst <= 5e-3, fmt::format("max switch error {:.2e}", worst));
}

void check_final_time(Verdict& v, const SolveReport& rep, double want, double tol) {
  v.expect(rep.success && std::abs(rep.final_time - want) <= tol,
           fmt::format("tf {:.6f}", rep.final_time));
}

// Samples strictly inside the singular arcs of component j.
template <typename F>
void on_singular_samples(const BbsocResult& r, int j, F&& visit) {
  const double tf = r.report.final_time;
  for (const auto& arc : r.report.structure.arcs[j]) {
    if (arc.kind != ArcKind::kSingular) continue;
    const double a = arc.start_fraction * tf + 1e-3;
    const double b = arc.end_fraction * tf - 1e-3;
    for (const auto& p : r.trajectory.points) {
      if (p.t > a && p.t < b) visit(p);
    }
  }
}

bool idempotent(const BbsocResult& r) {
  if (!r.report.success || !r.report.idempotent) return false;
  Trajectory nodes = r.nodes;
  const auto bounds = r.problem->domain_boundaries(r.solution.x);
  for (auto& p : nodes.points) {
    const int d = static_cast<int>(std::upper_bound(bounds.begin() + 1, bounds.end() - 1, p.t) -
                                   (bounds.begin() + 1));
    for (int j = 0; j < kNumControls; ++j) {
      if (r.problem->treatment(d, j) == ControlTreatment::kSingular) {
        p.g[j] += 2.0 * r.problem->epsilon() * p.u[j];
      }
    }
  }
  return same_structure(detect_structure(nodes, r.problem->maneuver().model),
                        r.report.structure);
}

void report(int id, const Verdict& v, int& failures) {
  std::string detail;
  for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
  std::printf("criterion %d: %s (%s)\n", id, v.pass ? "PASS" : "FAIL", detail.c_str());
  if (!v.pass) ++failures;
}

Verdict shooting_agrees(const BbsocResult& r, const std::string& name) {
  Verdict v;
  if (!r.report.success) {
    v.expect(false, name + " direct solve failed");
    return v;
  }
  const ShootingSpec spec{r.problem->maneuver(), r.report.structure};
  const ShootingResult s = shoot(spec, guess_from_direct(r.trajectory, r.report.switch_times));
  v.expect(s.converged && s.residual_norm <= 1e-9,
           fmt::format("{} residual {:.2e}", name, s.residual_norm));
  const double dtf = std::abs(s.solution.final_time - r.report.final_time);
  v.expect(dtf <= 1e-5, fmt::format("{} dtf {:.2e}", name, dtf));
  if (s.converged) {
    const DiscrepancyReport d =
        cross_validate(spec.maneuver.model, r.trajectory, s.trajectory);
    v.expect(d.max_state_discrepancy <= 1e-4,
             fmt::format("{} state {:.2e}", name, d.max_state_discrepancy));
  }
  return v;
}

Verdict property_suite(const BbsocResult& nonspin) {
  Verdict v;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);

  double costate = 0.0, jac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SpacecraftModel model{u(rng)};
    const State y{1.2 * u(rng), 1.2 * u(rng), 1.2 * u(rng), 1.2 * u(rng), 1.2 * u(rng)};
    const Costate l{n(rng), n(rng), n(rng), n(rng), n(rng)};
    const Control c{u(rng), u(rng), u(rng)};
    const Vec5 rates = costate_derivative(model, y, l);
    const DynamicsJacobians jj = dynamics_jacobians(model, y, c);
    const double h = 1e-5;
    for (int k = 0; k < kNumStates; ++k) {
      Vec5 yp = y.vec(), ym = y.vec();
      yp[k] += h;
      ym[k] -= h;
      const double dh = (hamiltonian(model, State::from(yp), c, l) -
                         hamiltonian(model, State::from(ym), c, l)) / (2 * h);
      costate = std::max(costate, std::abs(rates[k] + dh) / std::max(1.0, std::abs(dh)));
      const Vec5 fd = (state_derivative(model, State::from(yp), c) -
                       state_derivative(model, State::from(ym), c)) / (2 * h);
      jac = std::max(jac, (fd - jj.dy.col(k)).cwiseAbs().maxCoeff());
    }
  }
  v.expect(costate <= 1e-6, fmt::format("costate FD {:.1e}", costate));
  v.expect(jac <= 1e-6, fmt::format("Jacobian FD {:.1e}", jac));

  double quad = 0.0, diff = 0.0;
  for (int np = 1; np <= kMaxLgrPoints; ++np) {
    const LgrRule r = lgr_points_weights(np);
    for (int k = 0; k <= 2 * np - 2; ++k) {
      double s = 0.0;
      for (int i = 0; i < np; ++i) s += r.weights[i] * std::pow(r.points[i], k);
      quad = std::max(quad, std::abs(s - (k % 2 == 0 ? 2.0 / (k + 1) : 0.0)));
    }
    const Eigen::VectorXd support = r.support_points();
    const Eigen::MatrixXd d = differentiation_matrix(support);
    for (int k = 0; k <= np; ++k) {
      const Eigen::VectorXd dv = d * support.array().pow(k).matrix();
      for (int i = 0; i < np; ++i) {
        const double exact = k == 0 ? 0.0 : k * std::pow(r.points[i], k - 1);
        diff = std::max(diff, std::abs(dv[i] - exact));
      }
    }
  }
  v.expect(quad <= 1e-12, fmt::format("quadrature {:.1e}", quad));
  v.expect(diff <= 1e-10, fmt::format("differentiation {:.1e}", diff));

  // Fourth derivative of g1 along the computed singular arc.
  double d4 = 0.0;
  int samples = 0;
  if (nonspin.report.success) {
    const SpacecraftModel& model = nonspin.problem->maneuver().model;
    on_singular_samples(nonspin, 0, [&](const TrajectoryPoint& p) {
      d4 = std::max(d4, std::abs(switching_derivatives(model, p.y, p.lam, p.u, 0)[4]));
      ++samples;
    });
  }
  v.expect(samples > 0 && d4 <= 1e-4, fmt::format("d4 g1 {:.1e} over {} samples", d4, samples));
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  const Solved rtr = solve(builtin_maneuver("RTR"));
  const Solved nrtr = solve(builtin_maneuver("NRTR"));
  const Solved nrtr2 = solve(two_torque(builtin_maneuver("NRTR")));
  const Solved nonspin = solve(builtin_maneuver("NRTR_NONSPIN"));
  const Solved rtnr = solve(builtin_maneuver("RTNR_INERTIAL"));

  {
    Verdict v;
    const SolveReport& rep = rtr.result.report;
    check_final_time(v, rep, 2.5126, 1e-3);
    check_switches(v, rep, {0.1224, 0.6114, 1.2091, 1.4088, 1.8676});
    const double h = max_h_error(rtr.result.trajectory);
    v.expect(h <= 1e-5, fmt::format("max|H+1| {:.2e}", h));
    v.notes.push_back(fmt::format("{:.1f} s", rtr.seconds));
    report(1, v, failures);
  }
  {
    Verdict v;
    const SolveReport& rep = nrtr.result.report;
    check_final_time(v, rep, 2.2445, 1e-3);
    check_switches(v, rep, {0.2851, 0.5536, 0.6557, 1.1745, 1.6759});
    const double two = nrtr2.result.report.final_time;
    v.expect(nrtr2.result.report.success && std::abs(two - 2.3069) <= 1e-3,
             fmt::format("two-torque tf {:.6f}", two));
    const double reduction = 100.0 * (two - rep.final_time) / two;
    v.expect(std::abs(reduction - 2.70) <= 0.3, fmt::format("reduction {:.3f}%", reduction));
    report(2, v, failures);
  }
  {
    Verdict v;
    const BbsocResult& r = nonspin.result;
    const SolveReport& rep = r.report;
    check_final_time(v, rep, 2.8839, 1e-3);
    const auto onset = rep.singular_onset();
    v.expect(onset && std::abs(*onset - 1.9054) <= 1e-2,
             fmt::format("onset {:.4f}", onset.value_or(-1.0)));
    v.expect(rep.regularization.p <= 4 && rep.regularization.delta <= 1e-8,
             fmt::format("p {} delta {:.1e}", rep.regularization.p, rep.regularization.delta));
    const double h = max_h_error(r.trajectory);
    v.expect(h <= 1e-5, fmt::format("max|H+1| {:.2e}", h));
    double lc = 1e300, plane = 0.0;
    int samples = 0;
    if (rep.success) {
      const SpacecraftModel& model = r.problem->maneuver().model;
      on_singular_samples(r, 0, [&](const TrajectoryPoint& p) {
        lc = std::min(lc, legendre_clebsch(model, p.y, p.lam,
                                           costate_derivative(model, p.y, p.lam), 0));
        plane = std::max(plane, nonspinning_arc_condition(p.y));
        ++samples;
      });
    }
    v.expect(samples > 0 && lc >= -1e-8, fmt::format("min LC {:.1e}", lc));
    v.expect(samples > 0 && plane <= 1e-4, fmt::format("max(|w1|,|x1|) {:.1e}", plane));
    report(3, v, failures);
  }
  {
    Verdict v;
    const BbsocResult& r = rtnr.result;
    check_final_time(v, r.report, 2.00, 1e-4);
    const Costate end = r.report.success ? r.nodes.points.back().lam : Costate{1, 1, 1, 1, 1};
    v.expect(std::abs(end.lam4) <= 1e-5 && std::abs(end.lam5) <= 1e-5,
             fmt::format("lam4 {:.1e} lam5 {:.1e}", end.lam4, end.lam5));
    const double h = max_h_error(r.trajectory);
    v.expect(h <= 1e-7, fmt::format("max|H+1| {:.2e}", h));
    report(4, v, failures);
  }
  {
    Verdict v;
    const double tf = rtr.result.report.final_time;
    const double reduction = 100.0 * (2.61 - tf) / 2.61;
    v.expect(rtr.result.report.success && reduction >= 3.4,
             fmt::format("tf {:.6f}, {:.2f}% below 2.61", tf, reduction));
    report(5, v, failures);
  }
  {
    Verdict v = shooting_agrees(rtr.result, "RTR");
    const Verdict w = shooting_agrees(nrtr.result, "NRTR");
    v.pass = v.pass && w.pass;
    v.notes.insert(v.notes.end(), w.notes.begin(), w.notes.end());
    report(6, v, failures);
  }
  report(7, property_suite(nonspin.result), failures);
  {
    Verdict v;
    for (const Solved* s : {&rtr, &nrtr, &nonspin, &rtnr}) {
      v.expect(idempotent(s->result), s->result.report.maneuver);
    }
    report(8, v, failures);
  }
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
