#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "reorient/control_structure.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  /// Event times are bracketed to this width.
  double event_tol = 1e-13;
  /// Largest step; 0 leaves the step unbounded.
  double max_step = 0.0;
  int max_steps = 500000;

  /// Throws Error(kConfig) unless both tolerances lie in (0, 1e-3].
  void validate() const;
};

using OdeFunction =
    std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;
/// Scalar watched for sign changes; the integration stops at the first one.
using EventFunction = std::function<double(double t, const Eigen::VectorXd& y)>;

struct OdeSolution {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  int event_index = -1;  ///< index into the event list, -1 if none fired
  int accepted_steps = 0;
  int rejected_steps = 0;

  double final_time() const { return times.back(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// Dormand-Prince 5(4) with the free fourth-order dense output. Events are
/// located on the dense output by safeguarded regula falsi. Throws
/// Error(kSolver) on step-size underflow or when max_steps is exceeded.
OdeSolution dopri5(const OdeFunction& f, double t0, const Eigen::VectorXd& y0,
                   double t1, const IntegratorConfig& config,
                   const std::vector<EventFunction>& events = {});

/// The same fifth-order scheme on `steps` equal steps (no error control).
Eigen::VectorXd dopri5_fixed(const OdeFunction& f, double t0,
                             const Eigen::VectorXd& y0, double t1, int steps);

/// Control as a function of time and state. Integration is restarted at
/// every breakpoint, so discontinuities there cost nothing in accuracy.
struct ControlPolicy {
  std::function<Control(double t, const State& y)> law;
  std::vector<double> breakpoints;
};

/// Piecewise-linear replay of the controls stored in `trajectory`, clamped
/// to the bounds. Repeated time stamps become breakpoints.
ControlPolicy sampled_policy(const SpacecraftModel& model, const Trajectory& trajectory);

/// Bang-bang controls from a structure with switches at `switch_times`
/// (same order as structure.breakpoints). Throws Error(kDomain) for
/// singular arcs.
ControlPolicy bang_policy(const SpacecraftModel& model, const ControlStructure& structure,
                          const std::vector<double>& switch_times);

/// State trajectory under `policy`, one sample per accepted step.
Trajectory integrate(const SpacecraftModel& model, const State& y0,
                     const ControlPolicy& policy, double t0, double t1,
                     const IntegratorConfig& config = {});

struct ExtremalResult {
  Trajectory trajectory;  ///< carries costates; two rows at every switch
  std::vector<double> switch_times;
  std::vector<int> switch_controls;
};

/// Joint state-costate flow with every active control chosen from the sign
/// of its switching function, switching at located zeros of g_j.
ExtremalResult integrate_extremal(const SpacecraftModel& model, const State& y0,
                                  const Costate& lam0, double t1,
                                  const IntegratorConfig& config = {});

/// Unknowns: initial costates, the switch times of `structure` and the final
/// time. Residuals: terminal values of fixed states, transversality
/// (lambda_i(t_f) = 0) for free states, g_j = 0 at each switch and
/// H(t_f) = -1. Omega3 counts as free in two-torque mode, where it cannot
/// change.
struct ShootingSpec {
  Maneuver maneuver;
  ControlStructure structure;
};

struct ShootingGuess {
  Costate initial_costate;
  std::vector<double> switch_times;  ///< in structure.breakpoints order
  double final_time = 0.0;
};

struct ShootingConfig {
  IntegratorConfig integrator;
  double tolerance = 1e-9;  ///< on the Euclidean residual norm
  int max_iterations = 50;
  double fd_step = 1e-7;  ///< relative central-difference step
  /// Singular values below this fraction of the largest count as zero.
  double rank_tolerance = 1e-10;
};

struct ShootingResult {
  bool converged = false;
  bool rank_deficient = false;
  double residual_norm = 0.0;
  int iterations = 0;
  double condition = 0.0;
  ShootingGuess solution;
  Trajectory trajectory;
  std::string message;
};

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd& unknowns)>;

struct NewtonShooting {
  bool converged = false;
  bool rank_deficient = false;
  double residual_norm = 0.0;
  int iterations = 0;
  double condition = 0.0;
  Eigen::VectorXd unknowns;
  std::string message;
};

/// Square Gauss-Newton iteration behind shoot(), usable for any boundary
/// value problem. Error exceptions thrown by the residual at trial points
/// count as an infinite residual. Uses config.tolerance, max_iterations,
/// fd_step and rank_tolerance; the integrator settings are ignored.
NewtonShooting solve_shooting(const ResidualFunction& residual, const Eigen::VectorXd& start,
                              const ShootingConfig& config = {});

/// Seeds initial costate, switch times and final time from a direct
/// solution.
ShootingGuess guess_from_direct(const Trajectory& direct, const std::vector<double>& switch_times);

/// Residual vector of the shooting problem at `guess`.
Eigen::VectorXd shooting_residual(const ShootingSpec& spec, const ShootingGuess& guess,
                                  const IntegratorConfig& config = {});

/// Gauss-Newton with finite-difference sensitivities and an SVD solve. A
/// rank-deficient Jacobian or a stalled residual ends the iteration with
/// converged = false and a message.
ShootingResult shoot(const ShootingSpec& spec, const ShootingGuess& guess,
                     const ShootingConfig& config = {});

struct DiscrepancyReport {
  double max_state_discrepancy = 0.0;
  double final_time_delta = 0.0;
  double max_switch_time_delta = 0.0;
  std::vector<double> switch_time_deltas;
};

/// Compares two solutions of the same maneuver on a common uniform grid over
/// the shorter horizon. Switch lists are matched in order; extra entries are
/// ignored.
DiscrepancyReport cross_validate(const SpacecraftModel& model, const Trajectory& direct,
                                 const Trajectory& indirect,
                                 const std::vector<double>& direct_switches = {},
                                 const std::vector<double>& indirect_switches = {},
                                 int grid = 2001);

}  // namespace reorient
