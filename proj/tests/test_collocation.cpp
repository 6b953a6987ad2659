#include <doctest.h>

#include <cmath>
#include <random>

#include "reorient/errors.hpp"
#include "reorient/oracle.hpp"
#include "reorient/structure.hpp"
#include "reorient/transcription.hpp"

using namespace reorient;

namespace {

// u1 max then min at 0.3, u2 min then max at 0.6, u3 max throughout.
ControlStructure two_switch_structure() {
  ControlStructure s;
  s.arcs[0] = {{0, ArcKind::kBangMax, 0.0, 0.3}, {0, ArcKind::kBangMin, 0.3, 1.0}};
  s.arcs[1] = {{1, ArcKind::kBangMin, 0.0, 0.6}, {1, ArcKind::kBangMax, 0.6, 1.0}};
  s.arcs[2] = {{2, ArcKind::kBangMax, 0.0, 1.0}};
  s.breakpoints = {0.3, 0.6};
  s.breakpoint_control = {0, 1};
  s.final_time = 2.5;
  return s;
}

// Same, with u3 singular on the middle segment.
ControlStructure singular_structure() {
  ControlStructure s = two_switch_structure();
  s.arcs[2] = {{2, ArcKind::kBangMax, 0.0, 0.3},
               {2, ArcKind::kSingular, 0.3, 0.6},
               {2, ArcKind::kBangMin, 0.6, 1.0}};
  s.breakpoint_control = {0, 1};
  return s;
}

Eigen::VectorXd jitter(const Eigen::VectorXd& x, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  Eigen::VectorXd out = x;
  for (int i = 0; i < out.size(); ++i) out[i] += d(rng);
  return out;
}

// Linear interpolation of the first sign change of g_j, or -1.
double first_crossing(const Trajectory& nodes, int j) {
  for (size_t k = 1; k < nodes.points.size(); ++k) {
    const double a = nodes.points[k - 1].g[j], b = nodes.points[k].g[j];
    if (a * b < 0.0 || b == 0.0) {
      const double ta = nodes.points[k - 1].t, tb = nodes.points[k].t;
      return ta + (tb - ta) * a / (a - b);
    }
  }
  return -1.0;
}

int count_durations(const CollocationProblem& p) { return p.num_domains(); }

}  // namespace

TEST_CASE("unstructured transcription sizes") {
  const Maneuver m = builtin_maneuver("RTR");
  const CollocationProblem p = transcribe(m, Mesh::uniform(20, 3));
  CHECK(p.num_domains() == 1);
  CHECK(p.num_collocation_points() == 60);
  CHECK(p.num_nodes() == 61);
  CHECK(p.num_control_variables() == 180);
  CHECK(p.num_variables() == 5 * 61 + 180 + 1);
  // Defects, the initial state and five fixed terminal components.
  CHECK(p.num_constraints() == 5 * 60 + 5 + 5);
  for (int k = 0; k < p.num_collocation_points(); ++k) {
    for (int j = 0; j < 3; ++j) CHECK(p.control_index(k, j) >= 0);
  }
}

TEST_CASE("two-torque mode drops u3 and the implied terminal rate") {
  Maneuver m = builtin_maneuver("RTR");
  m.model = SpacecraftModel(m.model.a(), -1.0, 1.0, TorqueMode::kTwoTorque);
  const CollocationProblem p = transcribe(m, Mesh::uniform(10, 3));
  CHECK(p.num_control_variables() == 60);
  CHECK(p.num_constraints() == 5 * 30 + 5 + 4);
  CHECK(p.control_index(0, 2) == -1);
}

TEST_CASE("each switch adds one duration variable") {
  const Maneuver m = builtin_maneuver("RTR");
  const ControlStructure s = two_switch_structure();
  REQUIRE_NOTHROW(s.validate());
  const Mesh mesh = structured_mesh(s, 12, 3);
  const CollocationProblem plain = transcribe(m, Mesh::uniform(12, 3));
  const CollocationProblem structured = apply_structure(m, s, mesh);
  CHECK(count_durations(structured) - count_durations(plain) == 2);
  CHECK(structured.num_collocation_points() >= plain.num_collocation_points());
  // Every component is pinned on a bang arc, so no control variables remain.
  CHECK(structured.num_control_variables() == 0);
  CHECK(structured.num_variables() == 5 * structured.num_nodes() + 3);
  CHECK(structured.treatment(0, 0) == ControlTreatment::kFixedMax);
  CHECK(structured.treatment(1, 0) == ControlTreatment::kFixedMin);
  CHECK(structured.treatment(1, 1) == ControlTreatment::kFixedMin);
  CHECK(structured.treatment(2, 1) == ControlTreatment::kFixedMax);

  const Eigen::VectorXd x = structured.initial_point(
      [&](double t) { return structured.evaluate(structured.default_initial_point(2.5), t); },
      {0.75, 0.75, 1.0});
  const auto edges = structured.domain_boundaries(x);
  REQUIRE(edges.size() == 4);
  CHECK(edges[1] == doctest::Approx(0.75));
  CHECK(edges[2] == doctest::Approx(1.5));
  CHECK(edges[3] == doctest::Approx(2.5));
  const Control u = structured.point_control(x, 0);
  CHECK(u.u1 == 1.0);
  CHECK(u.u2 == -1.0);
  CHECK(u.u3 == 1.0);
}

TEST_CASE("analytic derivatives match finite differences") {
  const Maneuver m = builtin_maneuver("NRTR");
  const CollocationProblem plain = transcribe(m, Mesh::uniform(4, 4));
  CHECK(check_derivatives(plain, jitter(plain.default_initial_point(2.2), 1)).max() < 1e-6);

  const ControlStructure s = singular_structure();
  const CollocationProblem reg = apply_structure(m, s, structured_mesh(s, 6, 3), 0.3);
  CHECK(reg.treatment(1, 2) == ControlTreatment::kSingular);
  CHECK(reg.num_control_variables() > 0);
  CHECK(check_derivatives(reg, jitter(reg.default_initial_point(2.2), 2)).max() < 1e-6);
}

TEST_CASE("a zero regularization weight leaves the problem unchanged") {
  const Maneuver m = builtin_maneuver("RTR");
  const Mesh mesh = Mesh::per_domain(3, 1, 4);
  std::vector<std::array<ControlTreatment, 3>> free_t(
      3, {ControlTreatment::kFree, ControlTreatment::kFree, ControlTreatment::kFree});
  auto sing_t = free_t;
  sing_t[1][2] = ControlTreatment::kSingular;
  const CollocationProblem a(m, mesh, free_t, 0.0, 1e-3, 20.0);
  const CollocationProblem b(m, mesh, sing_t, 0.0, 1e-3, 20.0);
  REQUIRE(a.num_variables() == b.num_variables());
  const Eigen::VectorXd x = jitter(a.default_initial_point(2.0), 3);
  Eigen::VectorXd ca, cb, ga, gb;
  a.constraints(x, ca);
  b.constraints(x, cb);
  CHECK((ca - cb).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.objective(x) == b.objective(x));
  a.objective_gradient(x, ga);
  b.objective_gradient(x, gb);
  CHECK((ga - gb).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.regularization_value(x) == 0.0);
}

TEST_CASE("costates from multipliers") {
  const Maneuver m = builtin_maneuver("RTR");
  const CollocationProblem p = transcribe(m, Mesh::uniform(5, 3));
  DiscreteSolution sol;
  sol.x = p.default_initial_point(2.5);
  CHECK_THROWS_AS(estimate_costates(p, sol), Error);
  sol.multipliers.y = Eigen::VectorXd::Zero(p.num_constraints());
  sol.multipliers.z_lower = Eigen::VectorXd::Zero(p.num_variables());
  sol.multipliers.z_upper = Eigen::VectorXd::Zero(p.num_variables());
  const Eigen::MatrixXd lam = estimate_costates(p, sol);
  CHECK(lam.rows() == p.num_nodes());
  CHECK(lam.cols() == 5);
  CHECK(lam.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("node times and evaluation") {
  const Maneuver m = builtin_maneuver("RTR");
  const ControlStructure s = two_switch_structure();
  const CollocationProblem p = apply_structure(m, s, structured_mesh(s, 10, 4));
  const Eigen::VectorXd x = p.default_initial_point(2.5);
  const auto times = p.node_times(x);
  REQUIRE(static_cast<int>(times.size()) == p.num_nodes());
  CHECK(times.front() == 0.0);
  CHECK(times.back() == doctest::Approx(2.5));
  for (size_t k = 1; k < times.size(); ++k) CHECK(times[k] > times[k - 1]);
  for (int k = 0; k < p.num_nodes(); k += 7) {
    const State a = p.evaluate(x, times[k]).y;
    const State b = p.node_state(x, k);
    CHECK((a.vec() - b.vec()).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Left and right limits differ across the u1 switch.
  const double t1 = p.domain_boundaries(x)[1];
  CHECK(p.evaluate(x, t1, true).u.u1 == 1.0);
  CHECK(p.evaluate(x, t1, false).u.u1 == -1.0);
}

TEST_CASE("RTR costates place the switches and satisfy H = -1") {
  const BbsocResult r = bbsoc_solve(builtin_maneuver("RTR"));
  REQUIRE(r.report.success);
  const Trajectory& nodes = r.nodes;
  REQUIRE(nodes.has_costates);
  // u2 switches first, then u3, and u1 once.
  CHECK(first_crossing(nodes, 1) == doctest::Approx(0.1224).epsilon(5e-3 / 0.1224));
  CHECK(first_crossing(nodes, 2) == doctest::Approx(0.6114).epsilon(5e-3 / 0.6114));
  CHECK(first_crossing(nodes, 0) == doctest::Approx(1.4088).epsilon(5e-3 / 1.4088));
  for (const auto& pt : nodes.points) CHECK(std::abs(pt.hamiltonian + 1.0) < 1e-5);

  const Trajectory dense = r.trajectory;
  CHECK(static_cast<int>(dense.points.size()) ==
        1000 + 2 * (r.problem->num_domains() - 1));
}

TEST_CASE("free terminal attitude gives zero terminal costates") {
  const BbsocResult r = bbsoc_solve(builtin_maneuver("RTNR_INERTIAL"));
  REQUIRE(r.report.success);
  const Costate& end = r.nodes.points.back().lam;
  CHECK(std::abs(end.lam4) <= 1e-5);
  CHECK(std::abs(end.lam5) <= 1e-5);
}

TEST_CASE("replaying the solved controls reproduces the terminal state") {
  const Maneuver m = builtin_maneuver("NRTR");
  const BbsocResult r = bbsoc_solve(m);
  REQUIRE(r.report.success);
  const Trajectory replay = integrate(m.model, m.bc.initial, sampled_policy(m.model, r.trajectory),
                                      0.0, r.report.final_time);
  const State end = replay.points.back().y;
  for (int c = 0; c < 5; ++c) {
    if (m.bc.terminal[c]) CHECK(std::abs(end.vec()[c] - *m.bc.terminal[c]) < 10 * 1e-5);
  }
}
