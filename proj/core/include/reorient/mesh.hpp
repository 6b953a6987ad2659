#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

namespace reorient {

class CollocationProblem;

/// A run of mesh intervals that shares one time scaling. Interval breaks are
/// fractions of the domain; the domain itself spans one duration variable.
struct Domain {
  std::vector<double> breaks{0.0, 1.0};  ///< 0 = b_0 < ... < b_k = 1
  std::vector<int> points{3};            ///< LGR points per interval
  /// Error recorded when the interval was last p-refined (NaN otherwise).
  std::vector<double> last_error{std::numeric_limits<double>::quiet_NaN()};

  int num_intervals() const { return static_cast<int>(points.size()); }
};

struct Mesh {
  std::vector<Domain> domains;

  /// Single domain of `intervals` equal intervals with `points` each.
  static Mesh uniform(int intervals, int points);
  /// One domain per entry, each a single interval with `points` points.
  static Mesh per_domain(int domains, int intervals, int points);

  int num_domains() const { return static_cast<int>(domains.size()); }
  int total_points() const;
  int total_intervals() const;
  /// Throws Error(kDomain) on non-increasing breaks or point counts outside
  /// [kMinMeshPoints, kMaxMeshPoints].
  void validate() const;
};

inline constexpr int kMinMeshPoints = 3;
inline constexpr int kMaxMeshPoints = 12;

/// Relative discretization error of the state interpolant on each interval.
struct ErrorEstimate {
  std::vector<std::vector<double>> per_interval;  ///< [domain][interval]
  double max_error = 0.0;
};

/// Integrates the dynamics of the interpolated state and control with the
/// next-higher Radau rule and compares against the state interpolant:
///   e = max |Y_interp - Y_integrated| / (1 + max |Y_interp|).
ErrorEstimate estimate_error(const CollocationProblem& problem,
                             const Eigen::VectorXd& x);

struct RefineOptions {
  double tolerance = 1e-5;
  int min_points = kMinMeshPoints;
  int max_points = kMaxMeshPoints;
  /// A p-refined interval must reduce its error by at least this factor to
  /// be p-refined again; otherwise it is split.
  double decay_ratio = 0.1;
};

/// ph refinement. Intervals under tolerance are unchanged. Over-tolerance
/// intervals raise their point count by ceil(log(e/tol) / log(N)) when that
/// stays within the limit and the last p-step showed geometric decay;
/// otherwise they are bisected with the point count reset. Domain
/// boundaries never move.
Mesh refine(const Mesh& mesh, const ErrorEstimate& estimate,
            const RefineOptions& options = {});

}  // namespace reorient
