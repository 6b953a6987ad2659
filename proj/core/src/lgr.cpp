#include "reorient/lgr.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fmt/format.h>

#include "reorient/errors.hpp"

namespace reorient {

namespace {

// Returns (P_n(x), P_{n-1}(x)).
std::pair<double, double> legendre_pair(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  return {p, p_prev};
}

double legendre_derivative(int n, double x) {
  if (n == 0) return 0.0;
  // Stable three-term form of P_n' valid on (-1, 1).
  const auto [p, p_prev] = legendre_pair(n, x);
  return n * (x * p - p_prev) / (x * x - 1.0);
}

LgrRule compute_lgr(int n) {
  LgrRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.points[0] = -1.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  // Newton on the interior roots of q(x) = P_{n-1}(x) + P_n(x), starting from
  // Chebyshev-Gauss-Radau nodes; x = -1 is an exact root.
  rule.points[0] = -1.0;
  for (int i = 1; i < n; ++i) {
    double x = -std::cos(2.0 * std::numbers::pi * i / (2.0 * n - 1.0));
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pn1] = legendre_pair(n, x);
      const double q = pn + pn1;
      const double dq = legendre_derivative(n, x) + legendre_derivative(n - 1, x);
      // Deflate the known root at -1.
      const double r = q / (x + 1.0);
      const double dr = (dq - r) / (x + 1.0);
      const double step = r / dr;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    rule.points[i] = x;
  }
  const double n2 = static_cast<double>(n) * n;
  rule.weights[0] = 2.0 / n2;
  for (int i = 1; i < n; ++i) {
    const double x = rule.points[i];
    const double p = legendre_pair(n - 1, x).first;
    rule.weights[i] = (1.0 - x) / (n2 * p * p);
  }
  return rule;
}

const LgrRule& cached_lgr(int n) {
  static std::mutex mutex;
  static std::map<int, LgrRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_lgr(n)).first;
  return it->second;
}

}  // namespace

Eigen::VectorXd LgrRule::support_points() const {
  Eigen::VectorXd s(points.size() + 1);
  s.head(points.size()) = points;
  s[points.size()] = 1.0;
  return s;
}

double legendre(int n, double x) { return legendre_pair(n, x).first; }

LgrRule lgr_points_weights(int n) {
  if (n < kMinLgrPoints || n > kMaxLgrPoints) {
    throw Error(ErrorCode::kDomain,
                fmt::format("LGR point count {} outside [{}, {}]", n,
                            kMinLgrPoints, kMaxLgrPoints));
  }
  return cached_lgr(n);
}

LgrRule detail::lgr_rule_unchecked(int n) {
  if (n < 1) throw Error(ErrorCode::kDomain, "LGR point count must be >= 1");
  return cached_lgr(n);
}

LgrRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::kDomain, "Gauss point count must be >= 1");
  LgrRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double step = legendre(n, x) / legendre_derivative(n, x);
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double dp = legendre_derivative(n, x);
    rule.points[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& nodes) {
  const Eigen::Index m = nodes.size();
  Eigen::VectorXd b = Eigen::VectorXd::Ones(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < m; ++k) {
      if (k != j) b[j] /= (nodes[j] - nodes[k]);
    }
  }
  return b;
}

Eigen::VectorXd lagrange_basis(const Eigen::VectorXd& nodes, double t) {
  const Eigen::Index m = nodes.size();
  const Eigen::VectorXd b = barycentric_weights(nodes);
  Eigen::VectorXd l(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (t == nodes[j]) {
      l.setZero();
      l[j] = 1.0;
      return l;
    }
  }
  double denom = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    l[j] = b[j] / (t - nodes[j]);
    denom += l[j];
  }
  // Second barycentric form; exact partition of unity by construction.
  return l / denom;
}

Eigen::MatrixXd differentiation_matrix(const Eigen::VectorXd& support_points) {
  const Eigen::Index m = support_points.size();
  const Eigen::Index n = m - 1;
  const Eigen::VectorXd b = barycentric_weights(support_points);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      D(i, j) = (b[j] / b[i]) / (support_points[i] - support_points[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

Eigen::MatrixXd integration_matrix(const Eigen::VectorXd& nodes,
                                   const Eigen::VectorXd& eval_points) {
  const Eigen::Index m = nodes.size();
  const LgrRule gl = gauss_legendre(static_cast<int>(m) + 1);
  Eigen::MatrixXd I = Eigen::MatrixXd::Zero(eval_points.size(), m);
  for (Eigen::Index k = 0; k < eval_points.size(); ++k) {
    const double upper = eval_points[k];
    const double half = 0.5 * (upper + 1.0);
    if (half <= 0.0) continue;
    for (Eigen::Index q = 0; q < gl.points.size(); ++q) {
      const double t = -1.0 + half * (gl.points[q] + 1.0);
      I.row(k) += (half * gl.weights[q]) * lagrange_basis(nodes, t).transpose();
    }
  }
  return I;
}

}  // namespace reorient
