#include <doctest.h>

#include <cmath>
#include <numbers>

#include "reorient/errors.hpp"
#include "reorient/oracle.hpp"
#include "reorient/pmp.hpp"
#include "reorient/structure.hpp"

using namespace reorient;

namespace {

OdeFunction decay(double rate) {
  return [rate](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = rate * y; };
}

OdeFunction oscillator() {
  return [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(2);
    dy << y[1], -y[0];
  };
}

// Double integrator under +1 then -1, switching at ts, stopping at tf.
Eigen::Vector2d bang_bang_end(double ts, double tf) {
  auto push = [](double u) {
    return [u](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
      dy.resize(2);
      dy << y[1], u;
    };
  };
  IntegratorConfig cfg;
  Eigen::VectorXd y = Eigen::Vector2d::Zero();
  if (ts > 0.0) y = dopri5(push(1.0), 0.0, y, ts, cfg).final_state();
  if (tf > ts) y = dopri5(push(-1.0), ts, y, tf, cfg).final_state();
  return y;
}

const BbsocResult& rtr_solution() {
  static const BbsocResult r = bbsoc_solve(builtin_maneuver("RTR"));
  return r;
}

}  // namespace

TEST_CASE("adaptive steps meet the tolerance") {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  const OdeSolution s = dopri5(oscillator(), 0.0, Eigen::Vector2d(1.0, 0.0), 10.0, cfg);
  CHECK(s.final_time() == 10.0);
  CHECK(std::abs(s.final_state()[0] - std::cos(10.0)) < 1e-8);
  CHECK(std::abs(s.final_state()[1] + std::sin(10.0)) < 1e-8);
  CHECK(s.accepted_steps > 0);
  for (size_t k = 1; k < s.times.size(); ++k) CHECK(s.times[k] > s.times[k - 1]);
}

TEST_CASE("fixed steps converge at fifth order") {
  const Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
  const double exact = std::exp(-3.0);
  double prev = 0.0;
  for (int steps : {20, 40, 80, 160}) {
    const double err = std::abs(dopri5_fixed(decay(-3.0), 0.0, y0, 1.0, steps)[0] - exact);
    if (prev > 0.0) {
      const double order = std::log2(prev / err);
      INFO("steps " << steps << " order " << order);
      CHECK(std::abs(order - 5.0) <= 0.3);
    }
    prev = err;
  }
}

TEST_CASE("events stop the integration on the zero") {
  IntegratorConfig cfg;
  const EventFunction first = [](double, const Eigen::VectorXd& y) { return y[0]; };
  const EventFunction late = [](double t, const Eigen::VectorXd&) { return t - 5.0; };
  const OdeSolution s =
      dopri5(oscillator(), 0.0, Eigen::Vector2d(1.0, 0.0), 10.0, cfg, {late, first});
  CHECK(s.event_index == 1);
  CHECK(std::abs(s.final_state()[0]) <= 1e-10);
  CHECK(s.final_time() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));
  const OdeSolution none = dopri5(oscillator(), 0.0, Eigen::Vector2d(1.0, 0.0), 1.0, cfg, {first});
  CHECK(none.event_index == -1);
}

TEST_CASE("integrator configuration and step limits") {
  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.rel_tol = 1e-2;
  CHECK_THROWS_AS(bad.validate(), Error);
  IntegratorConfig tight;
  tight.max_steps = 5;
  try {
    dopri5(oscillator(), 0.0, Eigen::Vector2d(1.0, 0.0), 100.0, tight);
    FAIL("expected a step limit failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSolver);
  }
}

TEST_CASE("Newton shooting on the minimum-time double integrator") {
  // Rest to rest over unit distance: switch at 1, arrive at 2.
  const ResidualFunction r = [](const Eigen::VectorXd& z) {
    const Eigen::Vector2d end = bang_bang_end(z[0], z[1]);
    return Eigen::VectorXd(Eigen::Vector2d(end[0] - 1.0, end[1]));
  };
  const NewtonShooting s = solve_shooting(r, Eigen::Vector2d(0.7, 1.6));
  REQUIRE(s.converged);
  CHECK(s.residual_norm <= 1e-9);
  CHECK(std::abs(s.unknowns[0] - 1.0) <= 1e-9);
  CHECK(std::abs(s.unknowns[1] - 2.0) <= 1e-9);
  CHECK(s.condition >= 1.0);
}

TEST_CASE("Newton shooting failure modes") {
  const ResidualFunction flat = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(Eigen::Vector2d(z[0] + z[1], z[0] + z[1] - 1.0));
  };
  const NewtonShooting s = solve_shooting(flat, Eigen::Vector2d(0.0, 0.0));
  CHECK_FALSE(s.converged);
  CHECK(s.rank_deficient);
  CHECK_FALSE(s.message.empty());

  const ResidualFunction wrong_size = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::Vector3d::Zero());
  };
  try {
    solve_shooting(wrong_size, Eigen::Vector2d(0.0, 0.0));
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
  const ResidualFunction nan = [](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(z.array() * std::numeric_limits<double>::quiet_NaN());
  };
  try {
    solve_shooting(nan, Eigen::Vector2d(1.0, 1.0));
    FAIL("expected a solver error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSolver);
  }
}

TEST_CASE("extremal flow keeps the Hamiltonian constant") {
  const Maneuver m = builtin_maneuver("NRTR");
  const Costate l0{0.2, -0.5, 0.3, -0.4, 0.6};
  const ExtremalResult ex = integrate_extremal(m.model, m.bc.initial, l0, 3.0);
  REQUIRE(ex.trajectory.has_costates);
  const double h0 = ex.trajectory.points.front().hamiltonian;
  for (const auto& p : ex.trajectory.points) CHECK(std::abs(p.hamiltonian - h0) <= 1e-8);
  for (size_t k = 0; k < ex.switch_times.size(); ++k) {
    const int j = ex.switch_controls[k];
    for (const auto& p : ex.trajectory.points) {
      if (p.t == ex.switch_times[k]) CHECK(std::abs(p.g[j]) <= 1e-9);
    }
  }
}

TEST_CASE("indirect shooting from the direct RTR solution") {
  const BbsocResult& r = rtr_solution();
  REQUIRE(r.report.success);
  const ShootingSpec spec{r.problem->maneuver(), r.report.structure};
  const ShootingGuess guess = guess_from_direct(r.trajectory, r.report.switch_times);
  const ShootingResult s = shoot(spec, guess);
  REQUIRE(s.converged);
  CHECK(s.residual_norm <= 1e-9);
  CHECK(std::abs(s.solution.final_time - r.report.final_time) <= 1e-5);
  const double h0 = s.trajectory.points.front().hamiltonian;
  CHECK(h0 == doctest::Approx(-1.0).epsilon(1e-8));
  for (const auto& p : s.trajectory.points) CHECK(std::abs(p.hamiltonian - h0) <= 1e-8);
  CHECK(shooting_residual(spec, s.solution).norm() <= 1e-9);

  const DiscrepancyReport d = cross_validate(spec.maneuver.model, r.trajectory, s.trajectory,
                                             r.report.switch_times, s.solution.switch_times);
  CHECK(d.max_state_discrepancy <= 1e-4);
  CHECK(d.max_switch_time_delta <= 1e-4);
}

TEST_CASE("shooting with a switch missing does not converge") {
  const BbsocResult& r = rtr_solution();
  REQUIRE(r.report.success);
  ControlStructure wrong = r.report.structure;
  // Drop the last breakpoint by merging the two arcs around it.
  const int j = wrong.breakpoint_control.back();
  auto& arcs = wrong.arcs[j];
  REQUIRE(arcs.size() >= 2);
  arcs[arcs.size() - 2].end_fraction = 1.0;
  arcs.pop_back();
  wrong.breakpoints.pop_back();
  wrong.breakpoint_control.pop_back();
  REQUIRE_NOTHROW(wrong.validate());
  std::vector<double> times = r.report.switch_times;
  times.pop_back();
  const ShootingGuess guess = guess_from_direct(r.trajectory, times);
  const ShootingResult s = shoot(ShootingSpec{r.problem->maneuver(), wrong}, guess);
  CHECK_FALSE(s.converged);
  CHECK(s.residual_norm > 1e-6);
}

TEST_CASE("cross validation of a trajectory with itself is exact") {
  const BbsocResult& r = rtr_solution();
  const DiscrepancyReport d = cross_validate(r.problem->maneuver().model, r.trajectory,
                                             r.trajectory, r.report.switch_times,
                                             r.report.switch_times);
  CHECK(d.max_state_discrepancy == 0.0);
  CHECK(d.final_time_delta == 0.0);
  CHECK(d.max_switch_time_delta == 0.0);
}

TEST_CASE("control policies") {
  const BbsocResult& r = rtr_solution();
  const SpacecraftModel& model = r.problem->maneuver().model;
  const ControlPolicy replay = sampled_policy(model, r.trajectory);
  for (const auto& p : r.trajectory.points) {
    const Control u = replay.law(p.t, p.y);
    for (int j = 0; j < 3; ++j) {
      CHECK(u[j] >= model.u_min());
      CHECK(u[j] <= model.u_max());
    }
  }
  const ControlPolicy bang = bang_policy(model, r.report.structure, r.report.switch_times);
  CHECK(bang.breakpoints.size() == r.report.switch_times.size());
  const Control start = bang.law(0.01, State{});
  const Control first = r.trajectory.points[1].u;
  for (int j = 0; j < 3; ++j) CHECK(start[j] == first[j]);

  ControlStructure singular = r.report.structure;
  singular.arcs[0].back().kind = ArcKind::kSingular;
  CHECK_THROWS_AS(bang_policy(model, singular, r.report.switch_times), Error);
}
