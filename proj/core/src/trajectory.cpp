#include "reorient/trajectory.hpp"

#include <algorithm>

#include "reorient/errors.hpp"
#include "reorient/pmp.hpp"

namespace reorient {

void Trajectory::refresh_costate_fields(const SpacecraftModel& model) {
  for (auto& p : points) {
    p.g = switching_functions(p.lam);
    p.hamiltonian = hamiltonian(model, p.y, p.u, p.lam);
  }
}

State Trajectory::state_at(const SpacecraftModel& model, double t) const {
  if (points.empty()) throw Error(ErrorCode::kDomain, "empty trajectory");
  if (t <= points.front().t) return points.front().y;
  if (t >= points.back().t) return points.back().y;

  // Last sample with time <= t, so duplicated switch rows resolve to the
  // right-hand side.
  auto it = std::upper_bound(
      points.begin(), points.end(), t,
      [](double value, const TrajectoryPoint& p) { return value < p.t; });
  const auto& p1 = *it;
  const auto& p0 = *(it - 1);
  const double h = p1.t - p0.t;
  if (h <= 0.0) return p1.y;

  // Slopes use the left sample's control on both ends: within a sample
  // interval the control is taken as constant from the left.
  const Vec5 f0 = state_derivative(model, p0.y, p0.u);
  const Vec5 f1 = state_derivative(model, p1.y, p0.u);
  const double s = (t - p0.t) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  const Vec5 v = h00 * p0.y.vec() + h10 * h * f0 + h01 * p1.y.vec() +
                 h11 * h * f1;
  return State::from(v);
}

}  // namespace reorient
