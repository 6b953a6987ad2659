#include "reorient/pmp.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "taylor.hpp"

namespace reorient {

double hamiltonian(const SpacecraftModel& model, const State& y,
                   const Control& u, const Costate& lam) {
  const auto f = detail::eom(model.a(), y.omega1, y.omega2, y.omega3, y.x1,
                             y.x2, u.u1, u.u2, u.u3);
  return lam.lam1 * f[0] + lam.lam2 * f[1] + lam.lam3 * f[2] +
         lam.lam4 * f[3] + lam.lam5 * f[4];
}

CostateDerivative costate_derivative(const SpacecraftModel& model,
                                     const State& y, const Costate& lam) {
  const auto r = detail::costate_rates(
      model.a(), y.omega1, y.omega2, y.omega3, y.x1, y.x2, lam.lam1, lam.lam2,
      lam.lam3, lam.lam4, lam.lam5);
  return CostateDerivative{r[0], r[1], r[2], r[3], r[4]};
}

Vec3 switching_functions(const Costate& lam) {
  return Vec3{lam.lam1, lam.lam2, lam.lam3};
}

ControlMode bang_control(double g, double zero_threshold) {
  if (std::abs(g) <= zero_threshold) return ControlMode::kSingularCandidate;
  return g > 0.0 ? ControlMode::kMin : ControlMode::kMax;
}

double bang_value(const SpacecraftModel& model, ControlMode mode) {
  switch (mode) {
    case ControlMode::kMin:
      return model.u_min();
    case ControlMode::kMax:
      return model.u_max();
    case ControlMode::kSingularCandidate:
      break;
  }
  throw Error(ErrorCode::kDomain, "no bang value for a singular candidate");
}

std::array<double, 5> switching_derivatives(const SpacecraftModel& model,
                                            const State& y, const Costate& lam,
                                            const Control& u, int j) {
  if (j < 0 || j > 2) {
    throw Error(ErrorCode::kDomain, "switching function index out of range");
  }
  using S = detail::Series<5>;
  std::array<S, 10> z;
  const Vec5 yv = y.vec();
  const Vec5 lv = lam.vec();
  for (int i = 0; i < 5; ++i) {
    z[i] = S{yv[i]};
    z[5 + i] = S{lv[i]};
  }
  const S u1{u.u1}, u2{u.u2}, u3{u.u3};
  const double a = model.a();

  // Each pass fixes one more Taylor coefficient: c_{k+1} = [rhs]_k / (k+1).
  for (std::size_t k = 0; k < 4; ++k) {
    const auto f = detail::eom(a, z[0], z[1], z[2], z[3], z[4], u1, u2, u3);
    const auto l = detail::costate_rates(a, z[0], z[1], z[2], z[3], z[4],
                                         z[5], z[6], z[7], z[8], z[9]);
    for (int i = 0; i < 5; ++i) {
      z[i].c[k + 1] = f[i].c[k] / static_cast<double>(k + 1);
      z[5 + i].c[k + 1] = l[i].c[k] / static_cast<double>(k + 1);
    }
  }

  std::array<double, 5> out{};
  double factorial = 1.0;
  for (std::size_t k = 0; k < 5; ++k) {
    if (k > 0) factorial *= static_cast<double>(k);
    out[k] = z[5 + j].c[k] * factorial;
  }
  return out;
}

namespace {

constexpr double kLawDenominatorFloor = 1e-8;

struct LawTerms {
  double numerator;
  double denominator;
};

// Law for u1; the u2 law is obtained by mapping its arguments through the
// body symmetry before calling this.
LawTerms u1_law_terms(double a, double w1, double w2, double w3, double x1,
                      double x2, double l2, double l4, double l5, double ldot2,
                      double u2) {
  const double w3_3 = w3 * w3 * w3;
  const double numerator =
      -(ldot2 * (2.0 * a * w3_3 * (a + 1.0) * (a + 1.0) -
                 2.0 * a * w3 * w1 * w1 + 2.0 * a * w3 * w2 * w2 +
                 2.0 * w1 * u2) -
        w2 * l2 * (4.0 * a * a * w3 * w3 * w1 - 3.0 * a * w3 * u2));
  const double denominator =
      ldot2 * w2 - w3 * (1.0 + 2.0 * a) * (l4 * x2 - l5 * x1);
  return {numerator, denominator};
}

LawTerms law_terms(const SpacecraftModel& model, const State& y,
                   const Costate& lam, const CostateDerivative& lam_dot,
                   const Control& other, int j) {
  const double a = model.a();
  if (j == 0) {
    return u1_law_terms(a, y.omega1, y.omega2, y.omega3, y.x1, y.x2, lam.lam2,
                        lam.lam4, lam.lam5, lam_dot[1], other.u2);
  }
  if (j == 1) {
    // (w1, w2, w3, x1, x2) -> (w2, w1, -w3, x2, x1); (l1, l2, l4, l5) ->
    // (l2, l1, l5, l4); u1 -> u2.
    return u1_law_terms(a, y.omega2, y.omega1, -y.omega3, y.x2, y.x1,
                        lam.lam1, lam.lam5, lam.lam4, lam_dot[0], other.u1);
  }
  throw Error(ErrorCode::kDomain,
              "singular law defined only for u1 (j = 0) and u2 (j = 1)");
}

}  // namespace

double singular_control_general(const SpacecraftModel& model, const State& y,
                                const Costate& lam,
                                const CostateDerivative& lam_dot,
                                const Control& other_controls, int j) {
  const LawTerms t = law_terms(model, y, lam, lam_dot, other_controls, j);
  if (!std::isfinite(t.denominator) ||
      std::abs(t.denominator) < kLawDenominatorFloor) {
    throw Error(ErrorCode::kSingularity,
                fmt::format("singular law for u{} degenerate (denominator {})",
                            j + 1, t.denominator));
  }
  return t.numerator / t.denominator;
}

double singular_control_exact(const SpacecraftModel& model, const State& y,
                              const Costate& lam, const Control& u, int j) {
  if (j < 0 || j > 2) {
    throw Error(ErrorCode::kDomain, "control index out of range");
  }
  Control probe = u;
  probe[j] = 0.0;
  const double A = switching_derivatives(model, y, lam, probe, j)[4];
  probe[j] = 1.0;
  const double B = switching_derivatives(model, y, lam, probe, j)[4] - A;
  if (!std::isfinite(B) || std::abs(B) < kLawDenominatorFloor) {
    throw Error(ErrorCode::kSingularity,
                fmt::format("u{} does not appear in the fourth derivative "
                            "(coefficient {})",
                            j + 1, B));
  }
  return -A / B;
}

double singular_control_nonspinning() { return 0.0; }

double nonspinning_arc_condition(const State& y) {
  return std::max(std::abs(y.omega1), std::abs(y.x1));
}

double legendre_clebsch(const SpacecraftModel& model, const State& y,
                        const Costate& lam, const CostateDerivative& lam_dot,
                        int j) {
  return law_terms(model, y, lam, lam_dot, Control{}, j).denominator;
}

PmpResiduals pmp_residuals(const Maneuver& maneuver,
                           const Trajectory& trajectory,
                           const PmpCheckOptions& options) {
  if (!trajectory.has_costates) {
    throw Error(ErrorCode::kDomain, "trajectory carries no costate estimates");
  }
  if (trajectory.points.empty()) {
    throw Error(ErrorCode::kDomain, "empty trajectory");
  }
  const SpacecraftModel& model = maneuver.model;
  const auto& pts = trajectory.points;
  PmpResiduals r;

  const double h_final = hamiltonian(model, pts.back().y, pts.back().u,
                                     pts.back().lam);
  for (const auto& p : pts) {
    const double h = hamiltonian(model, p.y, p.u, p.lam);
    r.hamiltonian_error = std::max(r.hamiltonian_error, std::abs(h + 1.0));
    r.hamiltonian_variation =
        std::max(r.hamiltonian_variation, std::abs(h - h_final));
  }

  // Costate defect by second-order differences on the sample grid; samples
  // that share a time stamp are skipped.
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double h0 = pts[i].t - pts[i - 1].t;
    const double h1 = pts[i + 1].t - pts[i].t;
    if (h0 <= 1e-12 || h1 <= 1e-12) continue;
    const Vec5 l0 = pts[i - 1].lam.vec();
    const Vec5 l1 = pts[i].lam.vec();
    const Vec5 l2 = pts[i + 1].lam.vec();
    const Vec5 slope = (-h1 / (h0 * (h0 + h1))) * l0 +
                       ((h1 - h0) / (h0 * h1)) * l1 +
                       (h0 / (h1 * (h0 + h1))) * l2;
    const Vec5 expected = costate_derivative(model, pts[i].y, pts[i].lam);
    r.costate_defect =
        std::max(r.costate_defect, (slope - expected).cwiseAbs().maxCoeff());
  }

  const auto& last = pts.back().lam.vec();
  for (int i = 0; i < kNumStates; ++i) {
    const bool two_torque_spin =
        i == 2 && model.torque_mode() == TorqueMode::kTwoTorque;
    if (!maneuver.bc.terminal[i].has_value() && !two_torque_spin) {
      r.transversality_error =
          std::max(r.transversality_error, std::abs(last[i]));
    }
  }

  const double band = options.bang_tolerance * (model.u_max() - model.u_min());
  Vec3 g_max = Vec3::Zero();
  for (const auto& p : pts) {
    g_max = g_max.cwiseMax(switching_functions(p.lam).cwiseAbs());
  }
  int checked = 0;
  int violations = 0;
  for (const auto& p : pts) {
    const Vec3 g = switching_functions(p.lam);
    for (int j = 0; j < kNumControls; ++j) {
      if (!model.control_active(j)) continue;
      const double zero = options.zero_fraction * g_max[j];
      const double u = p.u[j];
      ++checked;
      bool ok = true;
      if (u >= model.u_max() - band) {
        ok = g[j] <= zero;
      } else if (u <= model.u_min() + band) {
        ok = g[j] >= -zero;
      } else {
        ok = std::abs(g[j]) <= zero;
        if (j < 2) {
          const double lc = legendre_clebsch(
              model, p.y, p.lam, costate_derivative(model, p.y, p.lam), j);
          r.legendre_clebsch_min =
              std::min(r.legendre_clebsch_min.value_or(lc), lc);
          ++r.singular_samples;
        }
      }
      if (!ok) ++violations;
    }
  }
  r.switching_consistency =
      checked > 0 ? static_cast<double>(violations) / checked : 0.0;
  return r;
}

}  // namespace reorient
