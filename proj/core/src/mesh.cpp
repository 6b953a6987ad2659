#include "reorient/mesh.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "reorient/lgr.hpp"
#include "reorient/transcription.hpp"

namespace reorient {

Mesh Mesh::uniform(int intervals, int points) { return per_domain(1, intervals, points); }

Mesh Mesh::per_domain(int domains, int intervals, int points) {
  if (domains < 1 || intervals < 1) {
    throw Error(ErrorCode::kDomain, "mesh needs at least one domain and interval");
  }
  Domain d;
  d.breaks.clear();
  for (int i = 0; i <= intervals; ++i) {
    d.breaks.push_back(static_cast<double>(i) / intervals);
  }
  d.breaks.back() = 1.0;
  d.points.assign(intervals, points);
  d.last_error.assign(intervals, std::numeric_limits<double>::quiet_NaN());
  Mesh mesh;
  mesh.domains.assign(domains, d);
  mesh.validate();
  return mesh;
}

int Mesh::total_points() const {
  int total = 0;
  for (const auto& d : domains) {
    for (int p : d.points) total += p;
  }
  return total;
}

int Mesh::total_intervals() const {
  int total = 0;
  for (const auto& d : domains) total += d.num_intervals();
  return total;
}

void Mesh::validate() const {
  if (domains.empty()) throw Error(ErrorCode::kDomain, "mesh has no domains");
  for (const auto& d : domains) {
    if (d.points.empty() || d.breaks.size() != d.points.size() + 1 ||
        d.last_error.size() != d.points.size()) {
      throw Error(ErrorCode::kDomain, "mesh domain arrays are inconsistent");
    }
    if (d.breaks.front() != 0.0 || d.breaks.back() != 1.0) {
      throw Error(ErrorCode::kDomain, "mesh domain breaks must span [0, 1]");
    }
    for (std::size_t i = 0; i + 1 < d.breaks.size(); ++i) {
      if (!(d.breaks[i + 1] > d.breaks[i])) {
        throw Error(ErrorCode::kDomain, "mesh breaks must be strictly increasing");
      }
    }
    for (int p : d.points) {
      if (p < kMinMeshPoints || p > kMaxMeshPoints) {
        throw Error(ErrorCode::kDomain,
                    fmt::format("{} points per interval outside [{}, {}]", p,
                                kMinMeshPoints, kMaxMeshPoints));
      }
    }
  }
}

ErrorEstimate estimate_error(const CollocationProblem& problem,
                             const Eigen::VectorXd& x) {
  const auto& model = problem.maneuver().model;
  const auto& mesh = problem.mesh();
  ErrorEstimate est;
  est.per_interval.resize(mesh.num_domains());
  for (int d = 0; d < mesh.num_domains(); ++d) {
    est.per_interval[d].assign(mesh.domains[d].num_intervals(), 0.0);
  }
  const auto& intervals = problem.intervals();
  for (int iv = 0; iv < static_cast<int>(intervals.size()); ++iv) {
    const auto& info = intervals[iv];
    const int n = info.num_points;
    const LgrRule rule = lgr_points_weights(n);
    const Eigen::VectorXd support = rule.support_points();
    const LgrRule fine = detail::lgr_rule_unchecked(n + 1);
    const int mf = fine.size();
    const Eigen::VectorXd fine_support = fine.support_points();
    const auto [start, len] = problem.interval_span(x, iv);

    // Interpolated state and dynamics on the finer grid.
    Eigen::MatrixXd ys(mf + 1, kNumStates);
    Eigen::MatrixXd fs(mf, kNumStates);
    for (int s = 0; s <= mf; ++s) {
      const Eigen::VectorXd basis = lagrange_basis(support, fine_support[s]);
      Vec5 y = Vec5::Zero();
      for (int k = 0; k <= n; ++k) y += basis[k] * problem.node_state(x, info.first_point + k).vec();
      ys.row(s) = y.transpose();
      if (s == mf) break;
      Control u = problem.point_control(x, info.first_point);
      for (int j = 0; j < kNumControls; ++j) {
        if (problem.control_index(info.first_point, j) < 0) continue;
        Eigen::VectorXd values(n);
        for (int k = 0; k < n; ++k) values[k] = problem.point_control(x, info.first_point + k)[j];
        u[j] = std::clamp(lagrange_basis(rule.points, fine_support[s]).dot(values),
                          model.u_min(), model.u_max());
      }
      const auto f = detail::eom(model.a(), y[0], y[1], y[2], y[3], y[4], u.u1, u.u2, u.u3);
      for (int c = 0; c < kNumStates; ++c) fs(s, c) = f[c];
    }
    const Eigen::MatrixXd integ =
        integration_matrix(fine.points, fine_support.tail(mf));
    Eigen::MatrixXd yint = (0.5 * len) * (integ * fs);
    yint.rowwise() += ys.row(0);

    double err = 0.0;
    for (int c = 0; c < kNumStates; ++c) {
      const double norm = 1.0 + ys.col(c).cwiseAbs().maxCoeff();
      for (int s = 1; s <= mf; ++s) {
        err = std::max(err, std::abs(ys(s, c) - yint(s - 1, c)) / norm);
      }
    }
    est.per_interval[info.domain][info.interval] = err;
    est.max_error = std::max(est.max_error, err);
  }
  return est;
}

Mesh refine(const Mesh& mesh, const ErrorEstimate& estimate,
            const RefineOptions& options) {
  if (estimate.per_interval.size() != mesh.domains.size()) {
    throw Error(ErrorCode::kDomain, "error estimate does not match the mesh");
  }
  Mesh out;
  for (std::size_t d = 0; d < mesh.domains.size(); ++d) {
    const Domain& dom = mesh.domains[d];
    if (estimate.per_interval[d].size() != dom.points.size()) {
      throw Error(ErrorCode::kDomain, "error estimate does not match the mesh");
    }
    Domain next;
    next.breaks = {0.0};
    next.points.clear();
    next.last_error.clear();
    for (int i = 0; i < dom.num_intervals(); ++i) {
      const double e = estimate.per_interval[d][i];
      const int np = dom.points[i];
      const double lo = dom.breaks[i];
      const double hi = dom.breaks[i + 1];
      if (e <= options.tolerance) {
        next.points.push_back(np);
        next.last_error.push_back(dom.last_error[i]);
        next.breaks.push_back(hi);
        continue;
      }
      const int raise = std::max(
          1, static_cast<int>(std::ceil(std::log(e / options.tolerance) / std::log(np))));
      const bool decaying =
          std::isnan(dom.last_error[i]) || e <= options.decay_ratio * dom.last_error[i];
      if (decaying && np + raise <= options.max_points) {
        next.points.push_back(np + raise);
        next.last_error.push_back(e);
        next.breaks.push_back(hi);
      } else {
        const double mid = 0.5 * (lo + hi);
        for (int k = 0; k < 2; ++k) {
          next.points.push_back(options.min_points);
          next.last_error.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        next.breaks.push_back(mid);
        next.breaks.push_back(hi);
      }
    }
    next.breaks.back() = 1.0;
    out.domains.push_back(std::move(next));
  }
  out.validate();
  return out;
}

}  // namespace reorient
