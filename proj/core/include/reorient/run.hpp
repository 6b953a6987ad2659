#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reorient/config.hpp"
#include "reorient/oracle.hpp"
#include "reorient/structure.hpp"

namespace reorient {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitSolver = 2,
  kExitVerification = 3,
};

struct VerificationThresholds {
  double shooting_residual = 1e-9;
  double final_time = 1e-5;
  double state = 1e-4;
  /// Fixed terminal states reached by replaying the direct controls.
  double replay_terminal = 1e-4;
};

struct VerificationReport {
  bool passed = false;
  /// Largest error in the fixed terminal states when the direct controls
  /// are replayed through the integrator.
  double replay_terminal_error = 0.0;
  bool shooting_attempted = false;
  std::optional<ShootingResult> shooting;
  std::optional<DiscrepancyReport> discrepancy;
  std::vector<std::string> notes;
};

/// Replays the direct controls, and for structures without singular arcs
/// also shoots from the direct solution and compares the two.
VerificationReport verify_solution(const Maneuver& maneuver, const BbsocResult& result,
                                   const VerificationThresholds& thresholds = {});

struct RunOutcome {
  int exit_code = kExitOk;
  std::optional<Maneuver> maneuver;
  std::optional<BbsocResult> result;
  std::optional<VerificationReport> verification;
  std::string error;
};

/// Solves, optionally verifies, and writes trajectory.csv, report and
/// plot/*.csv under config.out_dir. Never throws; failures are encoded in
/// the exit code (see ExitCode) and the error text.
RunOutcome run(const RunConfig& config, std::ostream* log = nullptr);

/// Header `t,omega1,...,H`, one row per sample, shortest round-trip decimals.
/// Throws Error(kIo) when the file cannot be written.
void export_trajectory(const Trajectory& trajectory, const std::string& path);

/// controls.csv, switching.csv, rates.csv and xplane.csv in `dir`.
void export_plot_series(const Trajectory& trajectory, const std::string& dir);

/// Sectioned key = value text. The [config] section reloads as a config.
std::string format_report(const RunConfig& config, const RunOutcome& outcome);

/// The built-in maneuvers with model constant and boundary data.
std::string list_maneuvers();

}  // namespace reorient
