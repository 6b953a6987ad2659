#pragma once

#include <array>
#include <string>
#include <vector>

#include "reorient/dynamics.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

/// One arc of one control component, as fractions of the horizon.
struct ArcSpec {
  int control = 0;  ///< zero-based component index
  ArcKind kind = ArcKind::kBangMax;
  double start_fraction = 0.0;
  double end_fraction = 1.0;
};

/// Switching structure of all control components. The arcs of each active
/// component tile [0, 1]; `breakpoints` is the merged, strictly increasing
/// list of interior arc boundaries and `breakpoint_control` names the
/// component that changes there.
struct ControlStructure {
  std::array<std::vector<ArcSpec>, kNumControls> arcs;
  std::vector<double> breakpoints;
  std::vector<int> breakpoint_control;
  /// Horizon of the solution the structure was read from.
  double final_time = 1.0;

  int num_domains() const { return static_cast<int>(breakpoints.size()) + 1; }
  bool has_singular() const;
  /// Kind of component j on the arc containing `fraction`; components with
  /// no arcs (inactive) report nothing meaningful and must not be queried.
  ArcKind kind_at(int j, double fraction) const;
  /// Throws Error(kStructure) if the arcs do not tile [0, 1] or the
  /// breakpoints are inconsistent with them.
  void validate() const;
  std::string describe() const;
};

std::string_view to_string(ArcKind kind);

}  // namespace reorient
