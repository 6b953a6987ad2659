#pragma once

#include <functional>
#include <iosfwd>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace reorient {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// min f(x) s.t. c(x) = 0, lower <= x <= upper. Infinite bounds are allowed.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;
  virtual void variable_bounds(Eigen::VectorXd& lower,
                               Eigen::VectorXd& upper) const = 0;

  virtual double objective(const Eigen::VectorXd& x) const = 0;
  virtual void objective_gradient(const Eigen::VectorXd& x,
                                  Eigen::VectorXd& grad) const = 0;
  virtual void constraints(const Eigen::VectorXd& x,
                           Eigen::VectorXd& c) const = 0;
  /// m x n; the sparsity pattern must not depend on x.
  virtual void constraint_jacobian(const Eigen::VectorXd& x,
                                   SparseMatrix& jac) const = 0;
  /// Lower triangle (row >= col) of obj_factor * d2f + sum_i y_i d2c_i.
  /// The sparsity pattern must not depend on x or y.
  virtual void lagrangian_hessian(const Eigen::VectorXd& x, double obj_factor,
                                  const Eigen::VectorXd& y,
                                  SparseMatrix& hess) const = 0;
};

enum class NlpStatus {
  kSolved,
  kMaxIterations,
  kLinearSolverFailure,
  kLineSearchFailure,
  kInfeasibleStationary,
  kDiverged,
};

std::string_view to_string(NlpStatus status);

/// Lagrangian convention: L = f + y^T c - z_l^T (x - l) - z_u^T (u - x).
struct Multipliers {
  Eigen::VectorXd y;
  Eigen::VectorXd z_lower;
  Eigen::VectorXd z_upper;
};

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Max-norm KKT residuals at (x, multipliers). Bound multipliers of infinite
/// bounds are ignored.
KktResiduals kkt_residuals(const NlpProblem& problem, const Eigen::VectorXd& x,
                           const Multipliers& multipliers);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double feasibility = 0.0;
  double stationarity = 0.0;
  double barrier = 0.0;
  double regularization = 0.0;
  double step = 0.0;
  /// l1 merit before and after the accepted step, at the same barrier and
  /// penalty parameters.
  double merit_before = 0.0;
  double merit = 0.0;
};

enum class Globalization {
  kFilter,   ///< filter line search on (infeasibility, barrier objective)
  kMeritL1,  ///< backtracking on the l1 exact-penalty merit
};

struct NlpOptions {
  /// Bound on stationarity and feasibility (max norms).
  double tolerance = 1e-7;
  /// Bound on max |z_i s_i|; zero means `tolerance`.
  double complementarity_tolerance = 0.0;
  int max_iterations = 1000;
  double mu_init = 0.1;
  /// Relative distance by which the initial point is pushed inside bounds.
  double bound_push = 1e-2;
  Globalization globalization = Globalization::kFilter;
  /// Solve in variables scaled by max(1, |x0_i|).
  bool scale_by_initial_point = true;
  /// Run the derivative checker at the initial point (always on in debug
  /// builds).
  bool check_derivatives = false;
  /// Optional per-iteration callback; see also write_iteration_log.
  std::function<void(const IterationRecord&)> on_iteration;
};

struct NlpResult {
  NlpStatus status = NlpStatus::kMaxIterations;
  Eigen::VectorXd x;
  Multipliers multipliers;
  double objective = 0.0;
  KktResiduals kkt;
  int iterations = 0;

  bool ok() const { return status == NlpStatus::kSolved; }
};

/// Primal-dual interior point method with a logarithmic barrier on the
/// bounds and an exact Hessian with curvature-tested regularization. Steps
/// are globalized by a filter line search with second-order corrections and
/// a feasibility restoration phase, or by backtracking on the l1 merit
/// (see Globalization). Deterministic for identical inputs.
///
/// `warm` optionally seeds all multipliers (sizes must match); otherwise the
/// equality multipliers start from a least-squares estimate.
NlpResult solve(const NlpProblem& problem, const Eigen::VectorXd& initial_point,
                const NlpOptions& options = {},
                const Multipliers* warm = nullptr);

struct DerivativeCheck {
  double gradient_error = 0.0;   ///< max relative error
  double jacobian_error = 0.0;
  double hessian_error = 0.0;

  double max() const;
};

/// Central finite-difference check of every supplied derivative at x, with
/// random multipliers drawn from a fixed seed for the Hessian.
DerivativeCheck check_derivatives(const NlpProblem& problem,
                                  const Eigen::VectorXd& x, double step = 1e-6);

/// One line per iteration: iter, objective, feasibility, stationarity, step.
void write_iteration_log(std::ostream& out, const IterationRecord& record);

}  // namespace reorient
