#include "reorient/nlp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "reorient/errors.hpp"

namespace reorient {

std::string_view to_string(NlpStatus status) {
  switch (status) {
    case NlpStatus::kSolved: return "solved";
    case NlpStatus::kMaxIterations: return "max_iterations";
    case NlpStatus::kLinearSolverFailure: return "linear_solver_failure";
    case NlpStatus::kLineSearchFailure: return "line_search_failure";
    case NlpStatus::kInfeasibleStationary: return "infeasible_stationary_point";
    case NlpStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, feasibility, complementarity});
}

double DerivativeCheck::max() const {
  return std::max({gradient_error, jacobian_error, hessian_error});
}

KktResiduals kkt_residuals(const NlpProblem& problem, const Eigen::VectorXd& x,
                           const Multipliers& mult) {
  const int n = problem.num_variables();
  Eigen::VectorXd lower, upper, grad, c;
  problem.variable_bounds(lower, upper);
  problem.objective_gradient(x, grad);
  problem.constraints(x, c);
  SparseMatrix jac;
  problem.constraint_jacobian(x, jac);
  Eigen::VectorXd r = grad;
  if (mult.y.size() > 0) r += jac.transpose() * mult.y;
  KktResiduals out;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(lower[i]) && mult.z_lower.size() > 0) {
      r[i] -= mult.z_lower[i];
      out.complementarity =
          std::max(out.complementarity, std::abs(mult.z_lower[i] * (x[i] - lower[i])));
    }
    if (std::isfinite(upper[i]) && mult.z_upper.size() > 0) {
      r[i] += mult.z_upper[i];
      out.complementarity =
          std::max(out.complementarity, std::abs(mult.z_upper[i] * (upper[i] - x[i])));
    }
  }
  out.stationarity = n > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
  out.feasibility = c.size() > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
  return out;
}

void write_iteration_log(std::ostream& out, const IterationRecord& r) {
  out << fmt::format("{:4d} {:+.10e} {:.3e} {:.3e} mu={:.2e} reg={:.1e} step={:.3e}\n",
                     r.iteration, r.objective, r.feasibility, r.stationarity,
                     r.barrier, r.regularization, r.step);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SparseMatrix full_symmetric(const SparseMatrix& lower) {
  SparseMatrix upper = lower.transpose();
  SparseMatrix full = lower + upper;
  for (int k = 0; k < full.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(full, k); it; ++it) {
      if (it.row() == it.col()) it.valueRef() *= 0.5;
    }
  }
  return full;
}

// Problem seen through x = s .* xs.
class Scaled {
 public:
  Scaled(const NlpProblem& p, Eigen::VectorXd s) : p_(p), s_(std::move(s)) {}

  Eigen::VectorXd unscale(const Eigen::VectorXd& xs) const { return s_.cwiseProduct(xs); }
  double objective(const Eigen::VectorXd& xs) const { return p_.objective(unscale(xs)); }
  void gradient(const Eigen::VectorXd& xs, Eigen::VectorXd& g) const {
    p_.objective_gradient(unscale(xs), g);
    g = g.cwiseProduct(s_);
  }
  void constraints(const Eigen::VectorXd& xs, Eigen::VectorXd& c) const {
    p_.constraints(unscale(xs), c);
  }
  void jacobian(const Eigen::VectorXd& xs, SparseMatrix& j) const {
    p_.constraint_jacobian(unscale(xs), j);
    j = j * s_.asDiagonal();
  }
  void hessian(const Eigen::VectorXd& xs, const Eigen::VectorXd& y, SparseMatrix& h) const {
    p_.lagrangian_hessian(unscale(xs), 1.0, y, h);
    h = s_.asDiagonal() * h * s_.asDiagonal();
  }
  const Eigen::VectorXd& s() const { return s_; }

 private:
  const NlpProblem& p_;
  Eigen::VectorXd s_;
};

struct KktSystem {
  int n = 0;
  int m = 0;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  SparseMatrix matrix;

  // Assembles [W + diag(sigma) + dw I, J^T; J, -dc I] and factorizes it.
  bool factorize(const SparseMatrix& w_lower, const Eigen::VectorXd& sigma,
                 const SparseMatrix& jac, double dw, double dc) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * w_lower.nonZeros() + 2 * jac.nonZeros() + n + m);
    for (int k = 0; k < w_lower.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(w_lower, k); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        trip.emplace_back(r, c, it.value());
        if (r != c) trip.emplace_back(c, r, it.value());
      }
    }
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, sigma[i] + dw);
    for (int k = 0; k < jac.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(jac, k); it; ++it) {
        const int r = n + static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        trip.emplace_back(r, c, it.value());
        trip.emplace_back(c, r, it.value());
      }
    }
    for (int i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -dc);
    matrix.resize(n + m, n + m);
    matrix.setFromTriplets(trip.begin(), trip.end());
    matrix.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(matrix);
      analyzed = true;
    }
    lu.factorize(matrix);
    return lu.info() == Eigen::Success;
  }

  // Solve with two rounds of iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
    Eigen::VectorXd sol = lu.solve(rhs);
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd res = rhs - matrix * sol;
      if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += lu.solve(res);
    }
    return sol;
  }
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                const std::vector<char>& mask, double tau) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (!mask[i] || dv[i] >= 0.0) continue;
    alpha = std::min(alpha, -tau * v[i] / dv[i]);
  }
  return alpha;
}

// Restoration problem: min 1/2 |c(x)|^2 + 1/2 zeta |D (x - ref)|^2 over the
// original bounds.
class FeasibilityProblem final : public NlpProblem {
 public:
  FeasibilityProblem(const NlpProblem& p, Eigen::VectorXd ref, double zeta)
      : p_(p), ref_(std::move(ref)), zeta_(zeta) {
    weight_ = ref_.cwiseAbs().cwiseMax(1.0).cwiseInverse().cwiseAbs2();
  }
  int num_variables() const override { return p_.num_variables(); }
  int num_constraints() const override { return 0; }
  void variable_bounds(Eigen::VectorXd& lower, Eigen::VectorXd& upper) const override {
    p_.variable_bounds(lower, upper);
  }
  double objective(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd c;
    p_.constraints(x, c);
    const Eigen::VectorXd d = x - ref_;
    return 0.5 * c.squaredNorm() + 0.5 * zeta_ * d.dot(weight_.cwiseProduct(d));
  }
  void objective_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override {
    Eigen::VectorXd c;
    p_.constraints(x, c);
    SparseMatrix jac;
    p_.constraint_jacobian(x, jac);
    grad = jac.transpose() * c + zeta_ * weight_.cwiseProduct(x - ref_);
  }
  void constraints(const Eigen::VectorXd&, Eigen::VectorXd& c) const override { c.resize(0); }
  void constraint_jacobian(const Eigen::VectorXd&, SparseMatrix& jac) const override {
    jac.resize(0, num_variables());
  }
  void lagrangian_hessian(const Eigen::VectorXd& x, double obj_factor, const Eigen::VectorXd&,
                          SparseMatrix& hess) const override {
    Eigen::VectorXd c;
    p_.constraints(x, c);
    SparseMatrix jac;
    p_.constraint_jacobian(x, jac);
    SparseMatrix second;
    p_.lagrangian_hessian(x, 0.0, c, second);
    SparseMatrix gauss = SparseMatrix(jac.transpose() * jac).triangularView<Eigen::Lower>();
    SparseMatrix diag(num_variables(), num_variables());
    diag.setIdentity();
    diag = diag * (zeta_ * weight_).asDiagonal();
    hess = obj_factor * (gauss + second + diag);
  }

 private:
  const NlpProblem& p_;
  Eigen::VectorXd ref_;
  Eigen::VectorXd weight_;
  double zeta_;
};

}  // namespace

NlpResult solve(const NlpProblem& problem, const Eigen::VectorXd& initial_point,
                const NlpOptions& options, const Multipliers* warm) {
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  if (initial_point.size() != n) {
    throw Error(ErrorCode::kDomain, "initial point has the wrong dimension");
  }
  if (!(options.tolerance > 0.0)) throw Error(ErrorCode::kDomain, "tolerance must be positive");

  Eigen::VectorXd lower, upper;
  problem.variable_bounds(lower, upper);
  for (int i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) throw Error(ErrorCode::kDomain, "inconsistent bounds");
  }

  // Bound push, then scaling.
  Eigen::VectorXd x0 = initial_point;
  for (int i = 0; i < n; ++i) {
    const bool hl = std::isfinite(lower[i]);
    const bool hu = std::isfinite(upper[i]);
    const double range = hl && hu ? upper[i] - lower[i] : kInf;
    if (hl) {
      const double push = std::min(options.bound_push * std::max(1.0, std::abs(lower[i])), options.bound_push * range);
      x0[i] = std::max(x0[i], lower[i] + push);
    }
    if (hu) {
      const double push = std::min(options.bound_push * std::max(1.0, std::abs(upper[i])), options.bound_push * range);
      x0[i] = std::min(x0[i], upper[i] - push);
    }
  }
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  if (options.scale_by_initial_point) scale = x0.cwiseAbs().cwiseMax(1.0);

#ifndef NDEBUG
  const bool run_check = true;
#else
  const bool run_check = options.check_derivatives;
#endif
  if (run_check) {
    const DerivativeCheck chk = check_derivatives(problem, x0);
    if (chk.max() > 1e-5) {
      throw Error(ErrorCode::kSolver,
                  fmt::format("derivative check failed: gradient {:.2e}, jacobian "
                              "{:.2e}, hessian {:.2e}",
                              chk.gradient_error, chk.jacobian_error, chk.hessian_error));
    }
  }

  const Scaled sp(problem, scale);
  Eigen::VectorXd x = x0.cwiseQuotient(scale);
  const Eigen::VectorXd lo = lower.cwiseQuotient(scale);
  const Eigen::VectorXd up = upper.cwiseQuotient(scale);
  std::vector<char> has_l(n), has_u(n);
  for (int i = 0; i < n; ++i) {
    has_l[i] = std::isfinite(lo[i]);
    has_u[i] = std::isfinite(up[i]);
  }

  Eigen::VectorXd zl = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd zu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < n; ++i) {
    if (has_l[i]) zl[i] = 1.0;
    if (has_u[i]) zu[i] = 1.0;
  }

  double mu = options.mu_init;
  const double compl_tol =
      options.complementarity_tolerance > 0.0 ? options.complementarity_tolerance : options.tolerance;
  const double mu_min = std::min(options.tolerance, compl_tol) / 10.0;

  double f = sp.objective(x);
  Eigen::VectorXd g, c;
  SparseMatrix jac, hess;
  sp.gradient(x, g);
  sp.constraints(x, c);
  sp.jacobian(x, jac);

  KktSystem kkt;
  kkt.n = n;
  kkt.m = m;

  auto least_squares_y = [&]() {
    Eigen::VectorXd est = Eigen::VectorXd::Zero(m);
    SparseMatrix zero(n, n);
    if (kkt.factorize(zero, Eigen::VectorXd::Ones(n), jac, 0.0, 1e-10)) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
      rhs.head(n) = -(g - zl + zu);
      est = kkt.solve(rhs).tail(m);
      if (!est.allFinite() || est.lpNorm<Eigen::Infinity>() > 1e3) est.setZero();
    }
    return est;
  };
  if (warm != nullptr && warm->y.size() == m && warm->z_lower.size() == n &&
      warm->z_upper.size() == n) {
    y = warm->y;
    for (int i = 0; i < n; ++i) {
      if (has_l[i]) zl[i] = std::max(warm->z_lower[i] * scale[i], 1e-12);
      if (has_u[i]) zu[i] = std::max(warm->z_upper[i] * scale[i], 1e-12);
    }
  } else if (m > 0) {
    y = least_squares_y();
  }

  auto slack_l = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
      if (has_l[i]) s[i] = v[i] - lo[i];
    }
    return s;
  };
  auto slack_u = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
      if (has_u[i]) s[i] = up[i] - v[i];
    }
    return s;
  };
  auto barrier_value = [&](const Eigen::VectorXd& v, double fv) {
    double b = fv;
    for (int i = 0; i < n; ++i) {
      if (has_l[i]) b -= mu * std::log(v[i] - lo[i]);
      if (has_u[i]) b -= mu * std::log(up[i] - v[i]);
    }
    return b;
  };

  NlpResult result;
  double penalty = 1.0;
  double last_dw = 0.0;
  constexpr int kMaxRestorations = 5;
  int restorations = 0;
  std::vector<std::pair<double, double>> filter;
  const double theta0 = m > 0 ? c.lpNorm<1>() : 0.0;
  const double theta_max = 1e4 * std::max(1.0, theta0);
  const double theta_min = 1e-4 * std::max(1.0, theta0);

  auto residuals = [&](double target) {
    KktResiduals r;
    Eigen::VectorXd stat = g + jac.transpose() * y - zl + zu;
    // Report stationarity in the original variables.
    r.stationarity = n > 0 ? stat.cwiseQuotient(scale).lpNorm<Eigen::Infinity>() : 0.0;
    r.feasibility = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    const Eigen::VectorXd sl = slack_l(x), su = slack_u(x);
    for (int i = 0; i < n; ++i) {
      if (has_l[i]) r.complementarity = std::max(r.complementarity, std::abs(zl[i] * sl[i] - target));
      if (has_u[i]) r.complementarity = std::max(r.complementarity, std::abs(zu[i] * su[i] - target));
    }
    return r;
  };

  auto finish = [&](NlpStatus status, int iters) {
    result.status = status;
    result.x = sp.unscale(x);
    result.multipliers.y = y;
    result.multipliers.z_lower = zl.cwiseQuotient(scale);
    result.multipliers.z_upper = zu.cwiseQuotient(scale);
    result.objective = problem.objective(result.x);
    result.kkt = residuals(0.0);
    result.iterations = iters;
    return result;
  };

  for (int iter = 0;; ++iter) {
    const KktResiduals r0 = residuals(0.0);
    if (r0.stationarity <= options.tolerance && r0.feasibility <= options.tolerance &&
        r0.complementarity <= compl_tol) {
      return finish(NlpStatus::kSolved, iter);
    }
    if (iter >= options.max_iterations) return finish(NlpStatus::kMaxIterations, iter);
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e20) {
      return finish(NlpStatus::kDiverged, iter);
    }
    while (mu > mu_min && residuals(mu).max() <= 10.0 * mu) {
      mu = std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));
      filter.clear();
    }
    if (m > 0 && r0.feasibility > 1e-4) {
      const Eigen::VectorXd jtc = jac.transpose() * c;
      if (jtc.lpNorm<Eigen::Infinity>() <= 1e-10 * r0.feasibility) {
        return finish(NlpStatus::kInfeasibleStationary, iter);
      }
    }

    sp.hessian(x, y, hess);
    const Eigen::VectorXd sl = slack_l(x), su = slack_u(x);
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad_barrier = g;
    for (int i = 0; i < n; ++i) {
      if (has_l[i]) {
        sigma[i] += zl[i] / sl[i];
        grad_barrier[i] -= mu / sl[i];
      }
      if (has_u[i]) {
        sigma[i] += zu[i] / su[i];
        grad_barrier[i] += mu / su[i];
      }
    }
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -(grad_barrier + jac.transpose() * y);
    rhs.tail(m) = -c;

    const SparseMatrix hess_full = full_symmetric(hess);
    double dw = 0.0;
    double dc = 0.0;
    Eigen::VectorXd dx, dy;
    bool have_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      if (!kkt.factorize(hess, sigma, jac, dw, dc)) {
        if (dc == 0.0) {
          dc = 1e-8 * std::pow(mu, 0.25);
        } else {
          dw = dw == 0.0 ? (last_dw == 0.0 ? 1e-4 : std::max(1e-20, last_dw / 3.0))
                         : dw * (last_dw == 0.0 ? 100.0 : 8.0);
        }
        continue;
      }
      const Eigen::VectorXd sol = kkt.solve(rhs);
      if (!sol.allFinite()) {
        dc = dc == 0.0 ? 1e-8 * std::pow(mu, 0.25) : dc;
        dw = dw == 0.0 ? 1e-4 : dw * 8.0;
        continue;
      }
      dx = sol.head(n);
      dy = sol.tail(m);
      const double curvature =
          dx.dot(hess_full * dx) + dx.dot(sigma.cwiseProduct(dx)) + dw * dx.squaredNorm();
      if (curvature >= 1e-10 * dx.squaredNorm() || dx.squaredNorm() == 0.0) {
        have_step = true;
        break;
      }
      dw = dw == 0.0 ? (last_dw == 0.0 ? 1e-4 : std::max(1e-20, last_dw / 3.0))
                     : dw * (last_dw == 0.0 ? 100.0 : 8.0);
      if (dw > 1e40) break;
    }
    if (!have_step) return finish(NlpStatus::kLinearSolverFailure, iter);
    if (dw > 0.0) last_dw = dw;

    const double tau = std::max(0.99, 1.0 - mu);
    auto dz_of = [&](const Eigen::VectorXd& step, Eigen::VectorXd& dzl, Eigen::VectorXd& dzu) {
      dzl = Eigen::VectorXd::Zero(n);
      dzu = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (has_l[i]) dzl[i] = (mu - zl[i] * sl[i] - zl[i] * step[i]) / sl[i];
        if (has_u[i]) dzu[i] = (mu - zu[i] * su[i] + zu[i] * step[i]) / su[i];
      }
    };

    // l1 merit of the barrier problem; drives acceptance in merit mode and is
    // reported in both modes.
    const double theta = m > 0 ? c.lpNorm<1>() : 0.0;
    const double phi_b = barrier_value(x, f);
    const double gtd = grad_barrier.dot(dx);
    if (theta > 0.0) {
      const double quad = std::max(0.0, 0.5 * (dx.dot(hess_full * dx) + dx.dot(sigma.cwiseProduct(dx))));
      const double needed = (gtd + quad) / (0.9 * theta);
      if (penalty < needed) penalty = needed + 1e-4;
    }
    const double phi0 = phi_b + penalty * theta;
    const double dphi = gtd - penalty * theta;
    const double slack_tol = 1e-13 * std::max(1.0, std::abs(phi0));
    const bool merit_mode = options.globalization == Globalization::kMeritL1;

    auto alpha_max_of = [&](const Eigen::VectorXd& step) {
      Eigen::VectorXd neg_step = -step;
      return std::min(max_step(sl, neg_step, has_l, tau), max_step(su, step, has_u, tau));
    };
    bool f_type = false;
    auto acceptable = [&](double th_t, double ph_t, double a) {
      if (!std::isfinite(ph_t) || !std::isfinite(th_t)) return false;
      if (merit_mode) return ph_t + penalty * th_t <= phi0 + 1e-4 * a * dphi + slack_tol;
      if (th_t >= theta_max) return false;
      for (const auto& [ft, fp] : filter) {
        if (th_t >= ft && ph_t >= fp) return false;
      }
      const double fuzz = 1e-13 * std::max(1.0, std::abs(phi_b));
      const bool switching = gtd < 0.0 && a * std::pow(-gtd, 2.3) > std::pow(theta, 1.1);
      if (switching && theta <= theta_min) {
        f_type = true;
        return ph_t <= phi_b + 1e-8 * a * gtd + fuzz;
      }
      f_type = false;
      return th_t <= (1.0 - 1e-5) * theta || ph_t <= phi_b - 1e-8 * theta + fuzz;
    };
    double alpha_min = 1e-14;
    if (!merit_mode) {
      double a = 1e-5;
      if (gtd < 0.0) {
        a = std::min({1e-5, 1e-8 * theta / -gtd, std::pow(theta, 1.1) / std::pow(-gtd, 2.3)});
      }
      alpha_min = std::max(1e-14, 0.05 * a);
    }

    double alpha = alpha_max_of(dx);
    Eigen::VectorXd x_trial, c_trial;
    double f_trial = 0.0;
    double phi_trial = 0.0;
    double theta_trial = 0.0;
    bool accepted = false;
    bool soc_tried = false;
    while (alpha >= alpha_min) {
      x_trial = x + alpha * dx;
      f_trial = sp.objective(x_trial);
      sp.constraints(x_trial, c_trial);
      theta_trial = m > 0 ? c_trial.lpNorm<1>() : 0.0;
      phi_trial = barrier_value(x_trial, f_trial);
      if (acceptable(theta_trial, phi_trial, alpha)) {
        accepted = true;
        break;
      }
      if (!soc_tried && m > 0 && theta_trial >= theta) {
        // Second-order correction, repeated while it keeps reducing the
        // infeasibility.
        soc_tried = true;
        Eigen::VectorXd c_soc = alpha * c + c_trial;
        double theta_prev = theta_trial;
        for (int k = 0; k < 4; ++k) {
          Eigen::VectorXd rhs_soc = rhs;
          rhs_soc.tail(m) = -c_soc;
          const Eigen::VectorXd sol = kkt.solve(rhs_soc);
          if (!sol.allFinite()) break;
          const Eigen::VectorXd dx_soc = sol.head(n);
          const double a_soc = alpha_max_of(dx_soc);
          const Eigen::VectorXd x_soc = x + a_soc * dx_soc;
          Eigen::VectorXd cs;
          const double f_soc = sp.objective(x_soc);
          sp.constraints(x_soc, cs);
          const double th_soc = cs.lpNorm<1>();
          const double ph_soc = barrier_value(x_soc, f_soc);
          if (acceptable(th_soc, ph_soc, alpha)) {
            dx = dx_soc;
            dy = sol.tail(m);
            alpha = a_soc;
            x_trial = x_soc;
            f_trial = f_soc;
            c_trial = cs;
            theta_trial = th_soc;
            phi_trial = ph_soc;
            accepted = true;
            break;
          }
          if (th_soc > 0.99 * theta_prev) break;
          theta_prev = th_soc;
          c_soc = a_soc * c_soc + cs;
        }
        if (accepted) break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (merit_mode || m == 0 || restorations >= kMaxRestorations) {
        return finish(NlpStatus::kLineSearchFailure, iter);
      }
      ++restorations;
      filter.emplace_back((1.0 - 1e-5) * theta, phi_b - 1e-8 * theta);
      const FeasibilityProblem feas(problem, sp.unscale(x), 1e-6 * std::sqrt(mu));
      NlpOptions ropts;
      ropts.tolerance = 1e-10;
      ropts.max_iterations = 200;
      ropts.mu_init = mu;
      ropts.bound_push = 1e-8;
      ropts.scale_by_initial_point = options.scale_by_initial_point;
      const NlpResult restored = solve(feas, sp.unscale(x), ropts);
      Eigen::VectorXd xr = restored.x.cwiseQuotient(scale);
      Eigen::VectorXd cr;
      sp.constraints(xr, cr);
      const double theta_r = cr.lpNorm<1>();
      if (!xr.allFinite() || theta_r > 0.9 * theta) {
        return finish(NlpStatus::kInfeasibleStationary, iter);
      }
      // Restart the multipliers from the restored point.
      x = xr;
      c = cr;
      f = sp.objective(x);
      sp.gradient(x, g);
      sp.jacobian(x, jac);
      const Eigen::VectorXd nl = slack_l(x), nu = slack_u(x);
      for (int i = 0; i < n; ++i) {
        if (has_l[i]) zl[i] = std::min(1.0, mu / nl[i]);
        if (has_u[i]) zu[i] = std::min(1.0, mu / nu[i]);
      }
      y = least_squares_y();
      continue;
    }
    if (!merit_mode && !f_type) {
      filter.emplace_back((1.0 - 1e-5) * theta, phi_b - 1e-8 * theta);
    }

    Eigen::VectorXd dzl, dzu;
    dz_of(dx, dzl, dzu);
    const double alpha_z = std::min(max_step(zl, dzl, has_l, tau), max_step(zu, dzu, has_u, tau));

    x = x_trial;
    f = f_trial;
    c = c_trial;
    y += alpha * dy;
    zl += alpha_z * dzl;
    zu += alpha_z * dzu;
    {
      const Eigen::VectorXd nl = slack_l(x), nu = slack_u(x);
      for (int i = 0; i < n; ++i) {
        if (has_l[i]) zl[i] = std::clamp(zl[i], mu / (1e10 * nl[i]), 1e10 * mu / nl[i]);
        if (has_u[i]) zu[i] = std::clamp(zu[i], mu / (1e10 * nu[i]), 1e10 * mu / nu[i]);
      }
    }
    sp.gradient(x, g);
    sp.jacobian(x, jac);

    if (options.on_iteration) {
      IterationRecord rec;
      rec.iteration = iter + 1;
      rec.objective = f;
      rec.feasibility = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
      rec.stationarity = residuals(0.0).stationarity;
      rec.barrier = mu;
      rec.regularization = dw;
      rec.step = alpha;
      rec.merit_before = phi0;
      rec.merit = phi_trial + penalty * theta_trial;
      options.on_iteration(rec);
    }
  }
}

DerivativeCheck check_derivatives(const NlpProblem& problem,
                                  const Eigen::VectorXd& x, double step) {
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
  };
  DerivativeCheck out;
  Eigen::VectorXd g;
  problem.objective_gradient(x, g);
  SparseMatrix jac;
  problem.constraint_jacobian(x, jac);
  const Eigen::MatrixXd jd = Eigen::MatrixXd(jac);

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) y[i] = dist(rng);
  SparseMatrix hl;
  problem.lagrangian_hessian(x, 1.0, y, hl);
  const Eigen::MatrixXd hd = Eigen::MatrixXd(full_symmetric(hl));

  auto lag_grad = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd gv;
    problem.objective_gradient(v, gv);
    SparseMatrix jv;
    problem.constraint_jacobian(v, jv);
    return Eigen::VectorXd(gv + jv.transpose() * y);
  };

  Eigen::VectorXd cp, cm;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fd = (problem.objective(xp) - problem.objective(xm)) / (2.0 * step);
    out.gradient_error = std::max(out.gradient_error, rel(fd, g[i]));
    problem.constraints(xp, cp);
    problem.constraints(xm, cm);
    const Eigen::VectorXd col = (cp - cm) / (2.0 * step);
    for (int r = 0; r < m; ++r) {
      out.jacobian_error = std::max(out.jacobian_error, rel(col[r], jd(r, i)));
    }
    const Eigen::VectorXd hcol = (lag_grad(xp) - lag_grad(xm)) / (2.0 * step);
    for (int r = 0; r < n; ++r) {
      out.hessian_error = std::max(out.hessian_error, rel(hcol[r], hd(r, i)));
    }
  }
  return out;
}

}  // namespace reorient
