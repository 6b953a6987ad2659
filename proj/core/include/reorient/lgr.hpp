#pragma once

#include <Eigen/Core>

namespace reorient {

inline constexpr int kMinLgrPoints = 1;
inline constexpr int kMaxLgrPoints = 12;

/// Legendre-Gauss-Radau rule on [-1, 1): the n roots of P_{n-1} + P_n, with
/// tau = -1 first, and their positive weights.
struct LgrRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.size()); }
  /// Collocation points followed by the non-collocated endpoint +1.
  Eigen::VectorXd support_points() const;
};

/// Throws Error(kDomain) unless kMinLgrPoints <= n <= kMaxLgrPoints.
LgrRule lgr_points_weights(int n);

/// Gauss-Legendre rule on [-1, 1] (used for exact integration of
/// interpolants).
LgrRule gauss_legendre(int n);

/// P_n(x).
double legendre(int n, double x);

/// Barycentric weights 1 / prod_{k != j} (s_j - s_k).
Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& nodes);

/// Values of every Lagrange basis polynomial on `nodes` at `t`.
Eigen::VectorXd lagrange_basis(const Eigen::VectorXd& nodes, double t);

/// Radau differentiation matrix, n x (n + 1): row i maps values at the n + 1
/// support points (LGR points plus +1) to the derivative of their
/// interpolating polynomial at LGR point i.
Eigen::MatrixXd differentiation_matrix(const Eigen::VectorXd& support_points);

/// I(k, l) = integral from -1 to eval_points(k) of the l-th Lagrange basis
/// polynomial on `nodes`.
Eigen::MatrixXd integration_matrix(const Eigen::VectorXd& nodes,
                                   const Eigen::VectorXd& eval_points);

namespace detail {
/// Same as lgr_points_weights without the range check; the mesh error
/// estimator samples with one point more than the refinement limit.
LgrRule lgr_rule_unchecked(int n);
}  // namespace detail

}  // namespace reorient
