#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reorient/control_structure.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/mesh.hpp"
#include "reorient/pmp.hpp"
#include "reorient/transcription.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

struct DetectionOptions {
  /// Controls within this fraction of (u_max - u_min) of a bound are saturated.
  double bang_fraction = 1e-3;
  /// |g_j| <= this fraction of max |g_j| marks a singular sample.
  double singular_fraction = 1e-4;
  /// Minimum length of a run of interior samples that can form a singular arc.
  int min_singular_samples = 3;
};

/// Reads the switching structure from samples carrying costates. Interior
/// samples with a small switching function form singular arcs; other
/// interior samples are switch transitions and take the side given by the
/// sign of g_j. Bang-to-bang boundaries sit at the zero crossing of g_j,
/// bang-to-singular boundaries halfway between the neighbouring samples.
/// Single samples that disagree with both neighbours are absorbed. Inactive
/// components are ignored. Throws Error(kStructure) for a run of interior
/// samples that is neither a transition nor singular.
ControlStructure detect_structure(const Trajectory& trajectory,
                                  const SpacecraftModel& model,
                                  const DetectionOptions& options = {});

/// True when both structures have the same arc kinds per component and the
/// same number of breakpoints.
bool same_structure(const ControlStructure& a, const ControlStructure& b);

/// One domain per segment between breakpoints; each domain gets
/// `intervals_per_domain` intervals of `points` points.
CollocationProblem apply_structure(const Maneuver& maneuver,
                                   const ControlStructure& structure,
                                   const Mesh& mesh, double epsilon = 0.0);

/// Mesh with one domain per structure segment; the interval count of each
/// domain is proportional to its share of the horizon (at least one).
Mesh structured_mesh(const ControlStructure& structure, int total_intervals,
                     int points);

struct RegularizationSchedule {
  double initial_epsilon = 1e-1;
  double reduction = 1e2;
  double delta_tolerance = 1e-8;
  int max_iterations = 6;
};

struct RegularizationRecord {
  double epsilon = 0.0;
  double delta = 0.0;
  int p = 0;
  /// delta after each iteration.
  std::vector<double> history;
};

struct StageRecord {
  std::string stage;
  int domains = 0;
  int intervals = 0;
  int points = 0;
  double max_error = 0.0;
  double final_time = 0.0;
  int nlp_iterations = 0;
};

struct SolveReport {
  std::string maneuver;
  TorqueMode torque_mode = TorqueMode::kThreeTorque;
  bool success = false;
  std::string failed_stage;
  std::string message;
  double final_time = 0.0;
  std::vector<double> switch_times;
  std::vector<int> switch_controls;  ///< zero-based component per switch
  ControlStructure structure;
  RegularizationRecord regularization;
  std::optional<PmpResiduals> pmp;
  std::vector<StageRecord> mesh_history;
  int nlp_iterations = 0;
  double wall_seconds = 0.0;
  bool idempotent = false;

  /// Start time of the first singular arc, if any.
  std::optional<double> singular_onset() const;
};

struct BbsocOptions {
  int mesh_intervals = 20;
  int mesh_points = 3;
  double eps_mesh = 1e-5;
  double eps_nlp = 1e-7;
  int max_refinements = 10;
  /// Refinement rounds spent on the unstructured solve before detection.
  int initial_refinements = 3;
  /// 0 selects a guess from the boundary data.
  double final_time_guess = 0.0;
  int nlp_max_iterations = 1000;
  DetectionOptions detection;
  RegularizationSchedule schedule;
  int dense_samples = 1000;
  /// Optional progress log.
  std::ostream* log = nullptr;
};

struct BbsocResult {
  SolveReport report;
  Trajectory trajectory;  ///< dense samples
  Trajectory nodes;       ///< collocation nodes
  std::shared_ptr<const CollocationProblem> problem;
  DiscreteSolution solution;
};

/// Solves `problem` from x0 (and optional multipliers), throwing
/// Error(kSolver) unless the NLP converges.
DiscreteSolution solve_collocation(const CollocationProblem& problem,
                                   const Eigen::VectorXd& x0,
                                   const BbsocOptions& options,
                                   const Multipliers* warm = nullptr,
                                   int* iterations = nullptr);

/// Regularization loop on a structured problem with singular arcs: solve,
/// measure delta = epsilon * integral u^2, divide epsilon by the reduction
/// factor and warm start until delta <= tolerance. Each iteration also
/// refines the mesh to eps_mesh. Without singular arcs it is one plain
/// solve with record (0, 0, 0).
struct RegularizedSolve {
  std::shared_ptr<const CollocationProblem> problem;
  DiscreteSolution solution;
  RegularizationRecord record;
  std::vector<StageRecord> history;
  int nlp_iterations = 0;
};
RegularizedSolve regularize_singular(const Maneuver& maneuver,
                                     const ControlStructure& structure,
                                     const Mesh& mesh, const GuessFunction& guess,
                                     const std::vector<double>& durations,
                                     const BbsocOptions& options);

/// Full pipeline: unstructured solve and refinement, structure detection,
/// structured solve with switch-time optimization, singular regularization,
/// re-detection and PMP verification. Never throws for numerical failure;
/// the report names the failing stage instead.
BbsocResult bbsoc_solve(const Maneuver& maneuver, const BbsocOptions& options = {});

}  // namespace reorient
