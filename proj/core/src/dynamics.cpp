#include "reorient/dynamics.hpp"

#include <cmath>
#include <fmt/format.h>

#include "reorient/errors.hpp"

namespace reorient {

namespace {

void require_finite(const State& y, const Control& u) {
  if (!y.finite() || !u.vec().allFinite()) {
    throw Error(ErrorCode::kDomain, "non-finite state or control");
  }
}

}  // namespace

SpacecraftModel::SpacecraftModel(double a, double u_min, double u_max,
                                 TorqueMode mode)
    : a_(a), u_min_(u_min), u_max_(u_max), mode_(mode) {
  if (!std::isfinite(a) || std::abs(a) > 1.0) {
    throw Error(ErrorCode::kDomain,
                fmt::format("inertia ratio a = {} must satisfy |a| <= 1", a));
  }
  if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_min < u_max)) {
    throw Error(ErrorCode::kDomain,
                fmt::format("control bounds [{}, {}] must satisfy u_min < u_max",
                            u_min, u_max));
  }
}

StateDerivative state_derivative(const SpacecraftModel& model, const State& y,
                                 const Control& u) {
  require_finite(y, u);
  if (model.torque_mode() == TorqueMode::kTwoTorque && u.u3 != 0.0) {
    throw Error(ErrorCode::kDomain, "u3 must be zero in two-torque mode");
  }
  const auto r = detail::eom(model.a(), y.omega1, y.omega2, y.omega3, y.x1,
                             y.x2, u.u1, u.u2, u.u3);
  return StateDerivative{r[0], r[1], r[2], r[3], r[4]};
}

DynamicsJacobians dynamics_jacobians(const SpacecraftModel& model,
                                     const State& y, const Control& u) {
  require_finite(y, u);
  const double a = model.a();
  const double w1 = y.omega1, w2 = y.omega2, w3 = y.omega3;
  const double x1 = y.x1, x2 = y.x2;

  DynamicsJacobians J;
  J.dy.setZero();
  J.du.setZero();

  J.dy(0, 1) = a * w3;
  J.dy(0, 2) = a * w2;

  J.dy(1, 0) = -a * w3;
  J.dy(1, 2) = -a * w1;

  J.dy(3, 0) = 0.5 * (1.0 + x1 * x1 - x2 * x2);
  J.dy(3, 1) = x1 * x2;
  J.dy(3, 2) = x2;
  J.dy(3, 3) = w2 * x2 + w1 * x1;
  J.dy(3, 4) = w3 + w2 * x1 - w1 * x2;

  J.dy(4, 0) = x1 * x2;
  J.dy(4, 1) = 0.5 * (1.0 + x2 * x2 - x1 * x1);
  J.dy(4, 2) = -x1;
  J.dy(4, 3) = -w3 + w1 * x2 - w2 * x1;
  J.dy(4, 4) = w1 * x1 + w2 * x2;

  J.du(0, 0) = 1.0;
  J.du(1, 1) = 1.0;
  J.du(2, 2) = 1.0;
  return J;
}

Mat5 dynamics_hessian_contraction(const SpacecraftModel& model, const State& y,
                                  const Vec5& weights) {
  const double a = model.a();
  const double w1 = y.omega1, w2 = y.omega2;
  const double x1 = y.x1, x2 = y.x2;
  const double m0 = weights[0], m1 = weights[1], m3 = weights[3],
               m4 = weights[4];

  // Indices: 0 w1, 1 w2, 2 w3, 3 x1, 4 x2.
  Mat5 h = Mat5::Zero();
  auto sym = [&h](int i, int j, double v) {
    h(i, j) += v;
    if (i != j) h(j, i) += v;
  };

  sym(1, 2, m0 * a);
  sym(0, 2, -m1 * a);

  // x1 rate
  sym(2, 4, m3);
  sym(1, 3, m3 * x2);
  sym(1, 4, m3 * x1);
  sym(3, 4, m3 * w2);
  sym(0, 3, m3 * x1);
  sym(0, 4, -m3 * x2);
  sym(3, 3, m3 * w1);
  sym(4, 4, -m3 * w1);

  // x2 rate
  sym(2, 3, -m4);
  sym(0, 3, m4 * x2);
  sym(0, 4, m4 * x1);
  sym(3, 4, m4 * w1);
  sym(1, 4, m4 * x2);
  sym(1, 3, -m4 * x1);
  sym(4, 4, m4 * w2);
  sym(3, 3, -m4 * w2);
  return h;
}

std::pair<double, double> direction_cosines_to_x(double sigma, double beta,
                                                 double gamma) {
  if (!std::isfinite(sigma) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kDomain, "non-finite direction cosines");
  }
  const double norm2 = sigma * sigma + beta * beta + gamma * gamma;
  if (std::abs(norm2 - 1.0) > 1e-9) {
    throw Error(ErrorCode::kDomain,
                fmt::format("direction cosines not unit norm (|n|^2 = {})",
                            norm2));
  }
  if (1.0 + gamma <= 1e-12) {
    throw Error(ErrorCode::kSingularity,
                "n3 anti-aligned with b3 (gamma = -1): parameterization is "
                "singular");
  }
  return {beta / (1.0 + gamma), sigma / (1.0 + gamma)};
}

std::array<double, 3> x_to_direction_cosines(double x1, double x2) {
  const double r2 = x1 * x1 + x2 * x2;
  const double gamma = (1.0 - r2) / (1.0 + r2);
  return {x2 * (1.0 + gamma), x1 * (1.0 + gamma), gamma};
}

void BoundaryConditions::validate() const {
  if (!initial.finite()) {
    throw Error(ErrorCode::kDomain, "initial state is not finite");
  }
  bool any_fixed = false;
  for (const auto& c : terminal) {
    if (c.has_value()) {
      if (!std::isfinite(*c)) {
        throw Error(ErrorCode::kDomain, "terminal value is not finite");
      }
      any_fixed = true;
    }
  }
  if (!any_fixed) {
    throw Error(ErrorCode::kDegenerate,
                "all terminal states free: minimum-time problem is degenerate");
  }
}

Maneuver builtin_maneuver(std::string_view name) {
  if (name == "RTR") {
    return {"RTR", SpacecraftModel{0.5},
            {State{0.0, 0.0, -0.5, 1.5, -0.5}, {0.0, 0.0, -0.5, 0.0, 0.0}}};
  }
  if (name == "NRTR") {
    return {"NRTR", SpacecraftModel{0.5},
            {State{-0.45, -1.1, -0.5, 1.5, -0.5}, {0.0, 0.0, -0.5, 0.0, 0.0}}};
  }
  if (name == "NRTR_NONSPIN") {
    return {"NRTR_NONSPIN",
            SpacecraftModel{0.5, -1.0, 1.0, TorqueMode::kTwoTorque},
            {State{-0.45, -1.1, 0.0, 0.1, -0.1}, {0.0, 0.0, 0.0, 0.0, 0.0}}};
  }
  if (name == "RTNR_INERTIAL") {
    return {"RTNR_INERTIAL",
            SpacecraftModel{0.0, -1.0, 1.0, TorqueMode::kTwoTorque},
            {State{0.0, 0.0, -0.3, 0.0, 0.0},
             {1.0, 2.0, -0.3, std::nullopt, std::nullopt}}};
  }
  throw Error(ErrorCode::kConfig, fmt::format("unknown maneuver '{}'", name));
}

std::vector<std::string> builtin_maneuver_names() {
  return {"RTR", "NRTR", "NRTR_NONSPIN", "RTNR_INERTIAL"};
}

std::string_view to_string(TorqueMode mode) {
  return mode == TorqueMode::kTwoTorque ? "two" : "three";
}

}  // namespace reorient
