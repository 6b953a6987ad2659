#pragma once

#include <array>
#include <optional>

#include "reorient/dynamics.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

namespace detail {

/// lambda-dot = -(dH/dY)^T, written out term by term.
template <typename T, typename S>
std::array<T, 5> costate_rates(const S& a, const T& w1, const T& w2,
                               const T& w3, const T& x1, const T& x2,
                               const T& l1, const T& l2, const T& l3,
                               const T& l4, const T& l5) {
  (void)l3;
  return {l2 * a * w3 - l4 * (1.0 + x1 * x1 - x2 * x2) * 0.5 - l5 * x1 * x2,
          -(l1 * a * w3) - l4 * x1 * x2 - l5 * (1.0 + x2 * x2 - x1 * x1) * 0.5,
          -(l1 * a * w2) + l2 * a * w1 - l4 * x2 + l5 * x1,
          -(l4 * (w2 * x2 + w1 * x1)) + l5 * (w3 - w1 * x2 + w2 * x1),
          -(l4 * (w3 + w2 * x1 - w1 * x2)) - l5 * (w1 * x1 + w2 * x2)};
}

}  // namespace detail

using CostateDerivative = Vec5;

double hamiltonian(const SpacecraftModel& model, const State& y,
                   const Control& u, const Costate& lam);

CostateDerivative costate_derivative(const SpacecraftModel& model,
                                     const State& y, const Costate& lam);

/// g_j = lambda_j for the three torque components.
Vec3 switching_functions(const Costate& lam);

enum class ControlMode { kMin, kMax, kSingularCandidate };

/// Minimum-principle selection for one component: g > 0 picks the lower bound,
/// g < 0 the upper bound, and |g| <= zero_threshold is undecided.
ControlMode bang_control(double g, double zero_threshold = 0.0);

/// Value of the bound selected by `mode` (kSingularCandidate is rejected).
double bang_value(const SpacecraftModel& model, ControlMode mode);

/// Time derivatives d^k g_j / dt^k, k = 0..4, along the state-costate flow
/// with the control held at `u`. Computed by Taylor-series propagation of
/// the polynomial right-hand side, so the values are exact up to rounding.
/// `j` is zero-based.
std::array<double, 5> switching_derivatives(const SpacecraftModel& model,
                                            const State& y, const Costate& lam,
                                            const Control& u, int j);

/// Closed-form singular control for u1 (j = 0) or u2 (j = 1) on a
/// second-order singular arc, with the other two components at their bang
/// values in `other_controls`.
///
/// For j = 0:
///
///   u1 = -( ldot2 [2 a w3^3 (a+1)^2 - 2 a w3 w1^2 + 2 a w3 w2^2 + 2 w1 u2]
///           - w2 l2 (4 a^2 w3^2 w1 - 3 a w3 u2) )
///        / ( ldot2 w2 - w3 (1 + 2a) (l4 x2 - l5 x1) )
///
/// The kinematic costates pairing with (x1, x2) are (l4, l5). Printed
/// versions of this law that read (l3 x2 - l4 x1) in the denominator index
/// the costates one place off; differentiating g1 = l1 four times along
/// the flow gives (l4 x2 - l5 x1), which is what is used here. The j = 1 law
/// is the image of the j = 0 law under the body symmetry
/// (1 <-> 2 for w, x, u, l; l4 <-> l5; w3, u3, l3 change sign). The quotient
/// is exact on the singular surface g = g' = g'' = 0 when u3 = 0; with an
/// active u3 the second derivative gains an `a l2 u3` term and
/// singular_control_exact should be used instead.
///
/// Throws Error(kSingularity) when |denominator| < 1e-8.
double singular_control_general(const SpacecraftModel& model, const State& y,
                                const Costate& lam, const CostateDerivative& lam_dot,
                                const Control& other_controls, int j);

/// Root of d^4 g_j / dt^4 = A + B u_j with the remaining components taken
/// from `u`. Valid for any u3. Throws Error(kSingularity) when |B| < 1e-8.
double singular_control_exact(const SpacecraftModel& model, const State& y,
                              const Costate& lam, const Control& u, int j);

/// Singular u1 for the nonspinning body (omega3 = 0): identically zero.
double singular_control_nonspinning();

/// max(|omega1|, |x1|): vanishes along an optimal nonspinning singular arc.
double nonspinning_arc_condition(const State& y);

/// Generalized Legendre-Clebsch quantity for a second-order singular arc of
/// component j; optimality requires a nonnegative value. This is the
/// denominator of singular_control_general, which reduces to w2 * ldot2 for
/// the nonspinning body.
double legendre_clebsch(const SpacecraftModel& model, const State& y,
                        const Costate& lam, const CostateDerivative& lam_dot,
                        int j);

struct PmpResiduals {
  double hamiltonian_error = 0.0;      ///< max |H(t) + 1|
  double hamiltonian_variation = 0.0;  ///< max |H(t) - H(t_f)|
  double costate_defect = 0.0;  ///< max |lambda-dot + dH/dY| (finite differences)
  double transversality_error = 0.0;  ///< max |lambda_i(t_f)| over free i
  double switching_consistency = 0.0;  ///< fraction of sign-logic violations
  /// Minimum Legendre-Clebsch value over samples with an interior control,
  /// empty when no such samples exist.
  std::optional<double> legendre_clebsch_min;
  int singular_samples = 0;
};

struct PmpCheckOptions {
  /// Controls within this fraction of (u_max - u_min) of a bound are saturated.
  double bang_tolerance = 1e-3;
  /// |g_j| <= this fraction of max |g_j| counts as zero.
  double zero_fraction = 1e-4;
};

/// Samples every optimality condition along `trajectory`; the Hamiltonian
/// target is -1 (free final time, autonomous dynamics). Throws
/// Error(kDomain) when the trajectory carries no costates.
PmpResiduals pmp_residuals(const Maneuver& maneuver,
                           const Trajectory& trajectory,
                           const PmpCheckOptions& options = {});

}  // namespace reorient
