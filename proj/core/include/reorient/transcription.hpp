#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "reorient/control_structure.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/lgr.hpp"
#include "reorient/mesh.hpp"
#include "reorient/nlp.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

/// How one control component is represented in one domain.
enum class ControlTreatment {
  kFree,      ///< bounded decision variable
  kSingular,  ///< bounded decision variable, penalized by epsilon * u^2
  kFixedMin,  ///< pinned to u_min
  kFixedMax,  ///< pinned to u_max
  kZero,      ///< inactive component
};

/// Solution of a transcribed problem plus its NLP multipliers (empty when
/// not available).
struct DiscreteSolution {
  Eigen::VectorXd x;
  Multipliers multipliers;
  double objective = 0.0;

  bool has_multipliers() const { return multipliers.y.size() > 0; }
};

/// State and control at one time, as used for initial guesses.
struct GuessSample {
  State y;
  Control u;
};
using GuessFunction = std::function<GuessSample(double t)>;

/// Multi-domain LGR transcription of the minimum-time problem.
///
/// Variables: the five states at every collocation node plus the final
/// node (nodes are shared at interval and domain junctions, which enforces
/// continuity), the free controls at collocation points, and one duration
/// per domain. Constraints: five defects per collocation point, the initial
/// state and the fixed terminal components. The objective is the sum of the
/// durations plus epsilon * integral of u^2 over singular treatments.
///
/// In two-torque mode omega3 is constant, so a fixed terminal omega3 equal
/// to its initial value is implied and is not imposed a second time.
class CollocationProblem final : public NlpProblem {
 public:
  CollocationProblem(Maneuver maneuver, Mesh mesh,
                     std::vector<std::array<ControlTreatment, kNumControls>>
                         treatments,
                     double epsilon, double min_duration,
                     double max_duration);

  const Maneuver& maneuver() const { return maneuver_; }
  const Mesh& mesh() const { return mesh_; }
  double epsilon() const { return epsilon_; }
  ControlTreatment treatment(int domain, int j) const {
    return treatments_[domain][j];
  }
  int num_domains() const { return mesh_.num_domains(); }
  int num_collocation_points() const { return num_points_; }
  int num_nodes() const { return num_points_ + 1; }
  int num_defects() const { return kNumStates * num_points_; }
  int num_control_variables() const { return num_controls_; }
  /// Indices of the duration variables.
  int duration_index(int domain) const { return duration_offset_ + domain; }
  int state_index(int node, int component) const {
    return kNumStates * node + component;
  }
  /// -1 when the component is not a decision variable at that point.
  int control_index(int point, int j) const { return control_index_[point][j]; }

  // NlpProblem
  int num_variables() const override { return num_variables_; }
  int num_constraints() const override { return num_constraints_; }
  void variable_bounds(Eigen::VectorXd& lower,
                       Eigen::VectorXd& upper) const override;
  double objective(const Eigen::VectorXd& x) const override;
  void objective_gradient(const Eigen::VectorXd& x,
                          Eigen::VectorXd& grad) const override;
  void constraints(const Eigen::VectorXd& x, Eigen::VectorXd& c) const override;
  void constraint_jacobian(const Eigen::VectorXd& x,
                           SparseMatrix& jac) const override;
  void lagrangian_hessian(const Eigen::VectorXd& x, double obj_factor,
                          const Eigen::VectorXd& y,
                          SparseMatrix& hess) const override;

  /// Decision vector sampled from `guess` at the node times implied by
  /// `domain_durations` (one per domain).
  Eigen::VectorXd initial_point(const GuessFunction& guess,
                                const std::vector<double>& domain_durations) const;
  /// Straight-line state guess between the boundary conditions (free
  /// terminal components stay at their initial value), zero free controls.
  Eigen::VectorXd default_initial_point(double final_time) const;

  double final_time(const Eigen::VectorXd& x) const;
  /// Domain boundary times, 0 first and t_f last.
  std::vector<double> domain_boundaries(const Eigen::VectorXd& x) const;
  /// Times of all nodes (collocation points then the final node).
  std::vector<double> node_times(const Eigen::VectorXd& x) const;
  State node_state(const Eigen::VectorXd& x, int node) const;
  Control point_control(const Eigen::VectorXd& x, int point) const;
  /// epsilon * integral of u^2 over the singular treatments (delta).
  double regularization_value(const Eigen::VectorXd& x) const;
  /// integral of u^2 over the singular treatments.
  double singular_control_energy(const Eigen::VectorXd& x) const;

  /// Geometry of one interval.
  struct IntervalInfo {
    int domain = 0;
    int interval = 0;
    int first_point = 0;  ///< global index of its first collocation point
    int num_points = 0;
    double fraction_begin = 0.0;  ///< within the domain
    double fraction_end = 1.0;
  };
  const std::vector<IntervalInfo>& intervals() const { return intervals_; }
  /// Start time and length of an interval for decision vector x.
  std::pair<double, double> interval_span(const Eigen::VectorXd& x,
                                          int interval) const;

  /// State and control at time t. At a domain boundary the arc ending there
  /// is used when `left_limit` is set.
  GuessSample evaluate(const Eigen::VectorXd& x, double t,
                       bool left_limit = false) const;

 private:
  struct IntervalCache {
    LgrRule rule;
    Eigen::VectorXd support;
    Eigen::MatrixXd diff;
  };
  const IntervalCache& cache(int n) const { return caches_[n]; }
  int locate(const Eigen::VectorXd& x, double t, bool left_limit) const;

  Maneuver maneuver_;
  Mesh mesh_;
  std::vector<std::array<ControlTreatment, kNumControls>> treatments_;
  double epsilon_;
  double min_duration_;
  double max_duration_;
  std::array<std::optional<double>, kNumStates> terminal_;

  std::vector<IntervalInfo> intervals_;
  std::vector<int> point_interval_;
  std::vector<int> point_local_;
  std::vector<std::array<int, kNumControls>> control_index_;
  std::vector<IntervalCache> caches_;
  int num_points_ = 0;
  int num_controls_ = 0;
  int duration_offset_ = 0;
  int num_variables_ = 0;
  int num_constraints_ = 0;
  int terminal_row_offset_ = 0;
  std::vector<int> terminal_components_;
};

/// Unstructured transcription: one domain, every active control free,
/// durations in [min_duration, max_duration].
CollocationProblem transcribe(const Maneuver& maneuver, const Mesh& mesh,
                              const ControlStructure* structure = nullptr,
                              double epsilon = 0.0);

/// Costates at every node (rows follow node order), from
///   lambda_k = -y_k / w_k at collocation points and
///   lambda_f = -sum_k D_{k,N} y_k over the last interval at the final node
///   and, the same way, over the last interval of a domain at each interior
///   domain boundary.
/// Throws Error(kDomain) when the solution carries no multipliers.
Eigen::MatrixXd estimate_costates(const CollocationProblem& problem,
                                  const DiscreteSolution& solution);

/// Node samples with costates, g and H filled in.
Trajectory node_trajectory(const CollocationProblem& problem,
                           const DiscreteSolution& solution);

/// Uniform samples of the interpolating polynomials plus two rows at each
/// interior domain boundary: the left limit of the controls, then the right.
Trajectory dense_trajectory(const CollocationProblem& problem,
                            const DiscreteSolution& solution, int samples = 1000);

}  // namespace reorient
