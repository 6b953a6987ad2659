#pragma once

#include <array>
#include <vector>

#include "reorient/dynamics.hpp"

namespace reorient {

/// Adjoint variables paired with (omega1, omega2, omega3, x1, x2).
struct Costate {
  double lam1 = 0.0;
  double lam2 = 0.0;
  double lam3 = 0.0;
  double lam4 = 0.0;
  double lam5 = 0.0;

  Vec5 vec() const { return Vec5{lam1, lam2, lam3, lam4, lam5}; }
  static Costate from(const Vec5& v) {
    return Costate{v[0], v[1], v[2], v[3], v[4]};
  }
  bool finite() const { return vec().allFinite(); }
};

enum class ArcKind { kBangMin, kBangMax, kSingular };

struct TrajectoryPoint {
  double t = 0.0;
  State y;
  Control u;
  Costate lam;
  Vec3 g = Vec3::Zero();  ///< switching functions
  double hamiltonian = 0.0;
};

/// Time-ordered samples of a solution. Costate-dependent fields (lam, g,
/// hamiltonian) are meaningful only when `has_costates` is set.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool has_costates = false;

  bool empty() const { return points.empty(); }
  double initial_time() const { return points.front().t; }
  double final_time() const { return points.back().t; }

  /// Recomputes g and H from the stored state, control and costate samples.
  void refresh_costate_fields(const SpacecraftModel& model);

  /// State at time t by piecewise cubic Hermite interpolation, using the
  /// dynamics at each sample for slopes. Samples that share a time stamp
  /// (switch rows) are handled by taking the right-hand sample.
  State state_at(const SpacecraftModel& model, double t) const;
};

}  // namespace reorient
