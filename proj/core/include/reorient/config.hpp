#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "reorient/dynamics.hpp"
#include "reorient/structure.hpp"

namespace reorient {

/// Everything a run needs. Unset optionals keep the built-in maneuver's
/// value; a maneuver name that is not built in requires `a`, `initial` and
/// `terminal`.
struct RunConfig {
  std::string maneuver = "RTR";
  std::optional<TorqueMode> torque_mode;
  std::optional<double> u_min;
  std::optional<double> u_max;
  std::optional<double> a;
  std::optional<State> initial;
  std::optional<TerminalSpec> terminal;

  int mesh_intervals = 20;
  int mesh_points = 3;
  double eps_mesh = 1e-5;
  double eps_nlp = 1e-7;
  int max_refinements = 10;
  int nlp_max_iterations = 1000;
  double reg_epsilon = 1e-1;
  double reg_reduction = 1e2;
  double reg_delta = 1e-8;
  int reg_max_iterations = 6;
  int samples = 1000;

  bool verify = false;
  /// Acceptance limits of the verification step.
  double verify_residual = 1e-9;
  double verify_final_time = 1e-5;
  double verify_state = 1e-4;
  double verify_replay = 1e-4;
  std::string out_dir = "out";

  /// Throws Error(kConfig) on non-positive tolerances, a mesh seed outside
  /// the point bounds, or inverted control bounds.
  void validate() const;
};

/// Sets one key from its text value. Throws Error(kConfig) for unknown keys
/// and unparseable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines; `#` starts a comment. When the text has
/// `[section]` headers, only keys before the first header and inside
/// `[config]` are read, so a report file is itself a valid config.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Every key with its current value, one per line, in the same format.
std::string config_text(const RunConfig& config);

/// Built-in or inline maneuver with overrides applied.
Maneuver resolve_maneuver(const RunConfig& config);

BbsocOptions solver_options(const RunConfig& config);

}  // namespace reorient
