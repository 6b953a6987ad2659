#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "reorient/errors.hpp"
#include "reorient/oracle.hpp"
#include "reorient/pmp.hpp"

using namespace reorient;

namespace {

State random_state(std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.2, 1.2);
  return State{d(rng), d(rng), d(rng), d(rng), d(rng)};
}

Costate random_costate(std::mt19937& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return Costate{d(rng), d(rng), d(rng), d(rng), d(rng)};
}

// Combined state-costate flow with the control held fixed.
OdeFunction held_flow(const SpacecraftModel& model, const Control& u) {
  return [model, u](double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
    const State y = State::from(z.head<5>());
    const Costate l = Costate::from(z.tail<5>());
    dz.resize(10);
    dz.head<5>() = state_derivative(model, y, u);
    dz.tail<5>() = costate_derivative(model, y, l);
  };
}

// Rows k = 0..3 of d^k g_j / dt^k as a linear map of the costate.
Eigen::Matrix<double, 4, 5> switching_rows(const SpacecraftModel& model, const State& y,
                                           const Control& u, int j) {
  Eigen::Matrix<double, 4, 5> m;
  for (int c = 0; c < 5; ++c) {
    Vec5 e = Vec5::Zero();
    e[c] = 1.0;
    const auto d = switching_derivatives(model, y, Costate::from(e), u, j);
    for (int k = 0; k < 4; ++k) m(k, c) = d[k];
  }
  return m;
}

}  // namespace

TEST_CASE("Hamiltonian is the costate-weighted state rate") {
  std::mt19937 rng(1);
  const SpacecraftModel model{0.5};
  for (int i = 0; i < 20; ++i) {
    const State y = random_state(rng);
    const Costate l = random_costate(rng);
    const Control u{0.3, -1.0, 0.7};
    CHECK(hamiltonian(model, y, u, l) ==
          doctest::Approx(l.vec().dot(state_derivative(model, y, u))).epsilon(1e-13));
  }
}

TEST_CASE("costate rates equal minus dH/dY by finite differences") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ua(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const SpacecraftModel model{ua(rng)};
    const State y = random_state(rng);
    const Costate l = random_costate(rng);
    const Control u{ua(rng), ua(rng), ua(rng)};
    const Vec5 rates = costate_derivative(model, y, l);
    const double h = 1e-5;
    for (int k = 0; k < kNumStates; ++k) {
      Vec5 yp = y.vec(), ym = y.vec();
      yp[k] += h;
      ym[k] -= h;
      const double dh = (hamiltonian(model, State::from(yp), u, l) -
                         hamiltonian(model, State::from(ym), u, l)) / (2 * h);
      const double scale = std::max(1.0, std::abs(dh));
      INFO("sample " << i << " component " << k);
      CHECK(std::abs(rates[k] + dh) / scale < 1e-6);
    }
  }
}

TEST_CASE("switching functions and bang selection") {
  const Costate l{0.4, -0.2, 0.0, 9.0, 9.0};
  const Vec3 g = switching_functions(l);
  CHECK(g == Vec3(0.4, -0.2, 0.0));
  CHECK(bang_control(0.4) == ControlMode::kMin);
  CHECK(bang_control(-0.2) == ControlMode::kMax);
  CHECK(bang_control(1e-9, 1e-8) == ControlMode::kSingularCandidate);
  const SpacecraftModel model{0.5, -2.0, 3.0};
  CHECK(bang_value(model, ControlMode::kMin) == -2.0);
  CHECK(bang_value(model, ControlMode::kMax) == 3.0);
  CHECK_THROWS_AS(bang_value(model, ControlMode::kSingularCandidate), Error);
}

TEST_CASE("switching-function derivatives match the integrated flow") {
  std::mt19937 rng(9);
  const SpacecraftModel model{0.5};
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-14;
  for (int trial = 0; trial < 10; ++trial) {
    const State y = random_state(rng);
    const Costate l = random_costate(rng);
    const Control u{1.0, -1.0, 0.5};
    Eigen::VectorXd z0(10);
    z0 << y.vec(), l.vec();
    // Seven-point stencils on samples of g over [-3h, 3h].
    const double h = 0.02;
    std::array<double, 7> gs{};
    const auto flow = held_flow(model, u);
    for (int s = -3; s <= 3; ++s) {
      Eigen::VectorXd z = z0;
      if (s != 0) {
        // Integrate backward by flipping time.
        const double sign = s > 0 ? 1.0 : -1.0;
        const OdeFunction f = [&](double t, const Eigen::VectorXd& q, Eigen::VectorXd& dq) {
          flow(t, q, dq);
          dq *= sign;
        };
        z = dopri5(f, 0.0, z0, std::abs(s) * h, cfg).final_state();
      }
      gs[s + 3] = z[5];
    }
    const auto d = switching_derivatives(model, y, l, u, 0);
    const double d1 = (-gs[0] + 9 * gs[1] - 45 * gs[2] + 45 * gs[4] - 9 * gs[5] + gs[6]) / (60 * h);
    const double d2 = (2 * gs[0] - 27 * gs[1] + 270 * gs[2] - 490 * gs[3] + 270 * gs[4] -
                       27 * gs[5] + 2 * gs[6]) / (180 * h * h);
    const double d3 = (gs[0] - 8 * gs[1] + 13 * gs[2] - 13 * gs[4] + 8 * gs[5] - gs[6]) /
                      (8 * h * h * h);
    const double d4 = (-gs[0] + 12 * gs[1] - 39 * gs[2] + 56 * gs[3] - 39 * gs[4] + 12 * gs[5] -
                       gs[6]) / (6 * h * h * h * h);
    CHECK(d[0] == doctest::Approx(l.lam1).epsilon(1e-15));
    CHECK(std::abs(d[1] - d1) < 1e-8 * std::max(1.0, std::abs(d1)));
    CHECK(std::abs(d[2] - d2) < 1e-6 * std::max(1.0, std::abs(d2)));
    CHECK(std::abs(d[3] - d3) < 1e-3 * std::max(1.0, std::abs(d3)));
    CHECK(std::abs(d[4] - d4) < 1e-2 * std::max(1.0, std::abs(d4)));
  }
}

TEST_CASE("singular control laws on a constructed singular surface") {
  // g, g', g'', g''' are linear in the costate and never involve lambda3, so
  // a point on the singular surface needs a state where the remaining 4 x 4
  // block is singular. x2 is tuned by bisection on its determinant.
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const SpacecraftModel model{0.5};
  const std::array<int, 4> cols{0, 1, 3, 4};
  auto block = [&](const State& y, const Control& u, int j) {
    const auto rows = switching_rows(model, y, u, j);
    Eigen::Matrix4d m;
    for (int c = 0; c < 4; ++c) m.col(c) = rows.col(cols[c]);
    return m;
  };
  int tested = 0;
  for (int trial = 0; trial < 60; ++trial) {
    State y{d(rng), d(rng), d(rng), d(rng), d(rng)};
    const int j = trial % 2;
    Control u{1.0, -1.0, 0.0};
    u[j] = 0.0;
    auto det_at = [&](double x2) {
      State s = y;
      s.x2 = x2;
      return block(s, u, j).determinant();
    };
    double lo = -2.0, hi = lo;
    bool found = false;
    for (int k = 1; k <= 80 && !found; ++k) {
      hi = -2.0 + 4.0 * k / 80;
      if (det_at(lo) * det_at(hi) < 0.0) {
        found = true;
      } else {
        lo = hi;
      }
    }
    if (!found) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (det_at(lo) * det_at(mid) <= 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    y.x2 = 0.5 * (lo + hi);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(block(y, u, j), Eigen::ComputeFullV);
    Vec5 lv = Vec5::Zero();
    for (int c = 0; c < 4; ++c) lv[cols[c]] = svd.matrixV()(c, 3);
    lv[2] = d(rng);
    const Costate l = Costate::from(lv);
    const auto g = switching_derivatives(model, y, l, u, j);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(g[k]) < 1e-9);

    double exact = 0.0;
    try {
      exact = singular_control_exact(model, y, l, u, j);
    } catch (const Error&) {
      continue;
    }
    Control us = u;
    us[j] = exact;
    CHECK(std::abs(switching_derivatives(model, y, l, us, j)[4]) < 1e-9);
    const double general =
        singular_control_general(model, y, l, costate_derivative(model, y, l), u, j);
    CHECK(general == doctest::Approx(exact).epsilon(1e-6));
    // The fourth derivative is affine in u_j with slope of magnitude LC.
    Control up = u;
    up[j] = exact + 1.0;
    const double slope = switching_derivatives(model, y, l, up, j)[4] -
                         switching_derivatives(model, y, l, us, j)[4];
    const double lc = legendre_clebsch(model, y, l, costate_derivative(model, y, l), j);
    CHECK(std::abs(std::abs(slope) - std::abs(lc)) < 1e-8 * std::max(1.0, std::abs(lc)));
    ++tested;
  }
  CHECK(tested >= 15);
}

TEST_CASE("nonspinning singular surface keeps the fourth derivative at zero") {
  // omega3 = omega1 = x1 = 0 and lambda1 = lambda4 = 0 with u1 = 0.
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const SpacecraftModel model{0.5, -1.0, 1.0, TorqueMode::kTwoTorque};
  CHECK(singular_control_nonspinning() == 0.0);
  for (int i = 0; i < 50; ++i) {
    const State y{0.0, d(rng), 0.0, 0.0, d(rng)};
    const Costate l{0.0, d(rng), d(rng), 0.0, d(rng)};
    const Control u{0.0, d(rng) > 0 ? 1.0 : -1.0, 0.0};
    const auto g = switching_derivatives(model, y, l, u, 0);
    for (int k = 0; k <= 4; ++k) CHECK(std::abs(g[k]) < 1e-12);
    CHECK(nonspinning_arc_condition(y) == 0.0);
  }
  CHECK(nonspinning_arc_condition(State{0.2, 1.0, 0.0, -0.3, 0.0}) == doctest::Approx(0.3));
}

TEST_CASE("Legendre-Clebsch quantity for the nonspinning body") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const SpacecraftModel model{0.5, -1.0, 1.0, TorqueMode::kTwoTorque};
  for (int i = 0; i < 20; ++i) {
    const State y{d(rng), d(rng), 0.0, d(rng), d(rng)};
    const Costate l{d(rng), d(rng), d(rng), d(rng), d(rng)};
    const Vec5 ldot = costate_derivative(model, y, l);
    CHECK(legendre_clebsch(model, y, l, ldot, 0) ==
          doctest::Approx(y.omega2 * ldot[1]).epsilon(1e-12));
  }
}

TEST_CASE("residuals of an exact extremal") {
  const Maneuver m = builtin_maneuver("RTR");
  Costate l0{0.3, -0.8, 0.2, 0.5, -0.4};
  const Control u0{l0.lam1 > 0 ? -1.0 : 1.0, l0.lam2 > 0 ? -1.0 : 1.0, l0.lam3 > 0 ? -1.0 : 1.0};
  // Scale the costate so that H = -1.
  const double h0 = hamiltonian(m.model, m.bc.initial, u0, l0);
  REQUIRE(h0 < 0.0);
  l0 = Costate::from(l0.vec() / -h0);
  const ExtremalResult ex = integrate_extremal(m.model, m.bc.initial, l0, 2.0);
  Maneuver free_end = m;
  free_end.bc.terminal = {0.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  const PmpResiduals r = pmp_residuals(free_end, ex.trajectory);
  CHECK(r.hamiltonian_error < 1e-9);
  CHECK(r.hamiltonian_variation < 1e-9);
  CHECK(r.switching_consistency == 0.0);
  CHECK_THROWS_AS(pmp_residuals(m, Trajectory{}), Error);
}
