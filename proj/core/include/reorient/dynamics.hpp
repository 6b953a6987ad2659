#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace reorient {

using Vec3 = Eigen::Vector<double, 3>;
using Vec5 = Eigen::Vector<double, 5>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat53 = Eigen::Matrix<double, 5, 3>;

inline constexpr int kNumStates = 5;
inline constexpr int kNumControls = 3;

enum class TorqueMode { kThreeTorque, kTwoTorque };

/// Axisymmetric rigid spacecraft with normalized torques u_j = tau_j / I_j.
///
/// a = (I2 - I3) / I1 must satisfy |a| <= 1 to be physically realizable. In
/// two-torque mode the symmetry-axis torque is absent, so omega3 stays at its
/// initial value.
class SpacecraftModel {
 public:
  explicit SpacecraftModel(double a, double u_min = -1.0, double u_max = 1.0,
                           TorqueMode mode = TorqueMode::kThreeTorque);

  double a() const { return a_; }
  double u_min() const { return u_min_; }
  double u_max() const { return u_max_; }
  TorqueMode torque_mode() const { return mode_; }

  /// True for control components that are optimized (u3 is inactive in
  /// two-torque mode). `j` is zero-based.
  bool control_active(int j) const {
    return j < 2 || mode_ == TorqueMode::kThreeTorque;
  }

  SpacecraftModel with_torque_mode(TorqueMode mode) const {
    return SpacecraftModel{a_, u_min_, u_max_, mode};
  }
  SpacecraftModel with_bounds(double u_min, double u_max) const {
    return SpacecraftModel{a_, u_min, u_max, mode_};
  }

 private:
  double a_;
  double u_min_;
  double u_max_;
  TorqueMode mode_;
};

/// Body rates (rad/s) and the position (x1, x2) of the inertial n3 axis as
/// seen from the body.
struct State {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double omega3 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;

  Vec5 vec() const { return Vec5{omega1, omega2, omega3, x1, x2}; }
  static State from(const Vec5& v) { return State{v[0], v[1], v[2], v[3], v[4]}; }
  bool finite() const { return vec().allFinite(); }
};

struct Control {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;

  Vec3 vec() const { return Vec3{u1, u2, u3}; }
  static Control from(const Vec3& v) { return Control{v[0], v[1], v[2]}; }
  double operator[](int j) const { return j == 0 ? u1 : (j == 1 ? u2 : u3); }
  double& operator[](int j) { return j == 0 ? u1 : (j == 1 ? u2 : u3); }
};

using StateDerivative = Vec5;

namespace detail {

/// Equations of motion over any arithmetic type (doubles, Taylor series,
/// duals). Shared by the plant, the costate code and the test oracles.
template <typename T, typename S>
std::array<T, 5> eom(const S& a, const T& w1, const T& w2, const T& w3,
                     const T& x1, const T& x2, const T& u1, const T& u2,
                     const T& u3) {
  return {a * w3 * w2 + u1,
          -(a * w3 * w1) + u2,
          u3,
          w3 * x2 + w2 * x1 * x2 + w1 * 0.5 * (1.0 + x1 * x1 - x2 * x2),
          -(w3 * x1) + w1 * x1 * x2 + w2 * 0.5 * (1.0 + x2 * x2 - x1 * x1)};
}

}  // namespace detail

/// Five state rates. Throws Error(kDomain) on non-finite input, or when u3 is
/// nonzero in two-torque mode.
StateDerivative state_derivative(const SpacecraftModel& model, const State& y,
                                 const Control& u);

struct DynamicsJacobians {
  Mat5 dy;   ///< d f / d state
  Mat53 du;  ///< d f / d control
};

DynamicsJacobians dynamics_jacobians(const SpacecraftModel& model,
                                     const State& y, const Control& u);

/// sum_k weights[k] * d^2 f_k / d state^2. Controls enter linearly, so the
/// control blocks of the second derivative vanish.
Mat5 dynamics_hessian_contraction(const SpacecraftModel& model, const State& y,
                                  const Vec5& weights);

/// x1 = beta / (1 + gamma), x2 = sigma / (1 + gamma) for n3 = sigma b1 +
/// beta b2 + gamma b3. gamma = -1 is the parameterization singularity.
std::pair<double, double> direction_cosines_to_x(double sigma, double beta,
                                                 double gamma);

/// Inverse of direction_cosines_to_x; returns (sigma, beta, gamma).
std::array<double, 3> x_to_direction_cosines(double x1, double x2);

/// Per-component terminal condition: a value when fixed, empty when free.
using TerminalSpec = std::array<std::optional<double>, kNumStates>;

struct BoundaryConditions {
  State initial;
  TerminalSpec terminal;

  /// Throws Error(kDegenerate) when no terminal component is fixed.
  void validate() const;
};

struct Maneuver {
  std::string name;
  SpacecraftModel model;
  BoundaryConditions bc;
};

/// Built-in maneuvers: RTR, NRTR, NRTR_NONSPIN, RTNR_INERTIAL.
Maneuver builtin_maneuver(std::string_view name);
std::vector<std::string> builtin_maneuver_names();

std::string_view to_string(TorqueMode mode);

}  // namespace reorient
