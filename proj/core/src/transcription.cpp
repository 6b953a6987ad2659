#include "reorient/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "reorient/pmp.hpp"

namespace reorient {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_variable(ControlTreatment t) {
  return t == ControlTreatment::kFree || t == ControlTreatment::kSingular;
}

Vec5 rates(const SpacecraftModel& model, const State& y, const Control& u) {
  const auto f = detail::eom(model.a(), y.omega1, y.omega2, y.omega3, y.x1, y.x2,
                             u.u1, u.u2, u.u3);
  return Vec5{f[0], f[1], f[2], f[3], f[4]};
}

// Value at t of the polynomial through (nodes, values).
double interpolate(const Eigen::VectorXd& nodes, const Eigen::VectorXd& values,
                   double t) {
  return lagrange_basis(nodes, t).dot(values);
}

}  // namespace

CollocationProblem::CollocationProblem(
    Maneuver maneuver, Mesh mesh,
    std::vector<std::array<ControlTreatment, kNumControls>> treatments,
    double epsilon, double min_duration, double max_duration)
    : maneuver_(std::move(maneuver)),
      mesh_(std::move(mesh)),
      treatments_(std::move(treatments)),
      epsilon_(epsilon),
      min_duration_(min_duration),
      max_duration_(max_duration) {
  mesh_.validate();
  maneuver_.bc.validate();
  if (static_cast<int>(treatments_.size()) != mesh_.num_domains()) {
    throw Error(ErrorCode::kStructure,
                fmt::format("{} control treatments for {} mesh domains",
                            treatments_.size(), mesh_.num_domains()));
  }
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
    throw Error(ErrorCode::kDomain, "regularization weight must be >= 0");
  }
  if (!(min_duration_ > 0.0) || !(max_duration_ > min_duration_)) {
    throw Error(ErrorCode::kDomain, "invalid duration bounds");
  }
  const auto& model = maneuver_.model;
  for (const auto& row : treatments_) {
    for (int j = 0; j < kNumControls; ++j) {
      if (!model.control_active(j) && row[j] != ControlTreatment::kZero) {
        throw Error(ErrorCode::kStructure, "inactive control must be treated as zero");
      }
    }
  }

  caches_.resize(kMaxMeshPoints + 1);
  for (int d = 0; d < mesh_.num_domains(); ++d) {
    const Domain& dom = mesh_.domains[d];
    for (int i = 0; i < dom.num_intervals(); ++i) {
      const int n = dom.points[i];
      if (caches_[n].rule.size() == 0) {
        caches_[n].rule = lgr_points_weights(n);
        caches_[n].support = caches_[n].rule.support_points();
        caches_[n].diff = differentiation_matrix(caches_[n].support);
      }
      IntervalInfo info;
      info.domain = d;
      info.interval = i;
      info.first_point = num_points_;
      info.num_points = n;
      info.fraction_begin = dom.breaks[i];
      info.fraction_end = dom.breaks[i + 1];
      for (int r = 0; r < n; ++r) {
        point_interval_.push_back(static_cast<int>(intervals_.size()));
        point_local_.push_back(r);
      }
      intervals_.push_back(info);
      num_points_ += n;
    }
  }

  int next = kNumStates * (num_points_ + 1);
  control_index_.resize(num_points_);
  for (int k = 0; k < num_points_; ++k) {
    const int d = intervals_[point_interval_[k]].domain;
    for (int j = 0; j < kNumControls; ++j) {
      control_index_[k][j] = is_variable(treatments_[d][j]) ? next++ : -1;
    }
  }
  num_controls_ = next - kNumStates * (num_points_ + 1);
  duration_offset_ = next;
  num_variables_ = next + mesh_.num_domains();

  terminal_ = maneuver_.bc.terminal;
  const bool two_torque = model.torque_mode() == TorqueMode::kTwoTorque;
  for (int c = 0; c < kNumStates; ++c) {
    if (!terminal_[c]) continue;
    if (c == 2 && two_torque) {
      if (std::abs(*terminal_[c] - maneuver_.bc.initial.omega3) > 1e-12) {
        throw Error(ErrorCode::kDegenerate,
                    "terminal omega3 differs from its initial value, which "
                    "two-torque mode cannot change");
      }
      continue;
    }
    terminal_components_.push_back(c);
  }
  terminal_row_offset_ = num_defects() + kNumStates;
  num_constraints_ =
      terminal_row_offset_ + static_cast<int>(terminal_components_.size());
}

void CollocationProblem::variable_bounds(Eigen::VectorXd& lower,
                                         Eigen::VectorXd& upper) const {
  lower = Eigen::VectorXd::Constant(num_variables_, -kInf);
  upper = Eigen::VectorXd::Constant(num_variables_, kInf);
  const auto& model = maneuver_.model;
  for (int k = 0; k < num_points_; ++k) {
    for (int j = 0; j < kNumControls; ++j) {
      const int idx = control_index_[k][j];
      if (idx < 0) continue;
      lower[idx] = model.u_min();
      upper[idx] = model.u_max();
    }
  }
  for (int d = 0; d < num_domains(); ++d) {
    lower[duration_index(d)] = min_duration_;
    upper[duration_index(d)] = max_duration_;
  }
}

State CollocationProblem::node_state(const Eigen::VectorXd& x, int node) const {
  return State::from(x.segment<kNumStates>(kNumStates * node));
}

Control CollocationProblem::point_control(const Eigen::VectorXd& x,
                                          int point) const {
  const auto& model = maneuver_.model;
  const int d = intervals_[point_interval_[point]].domain;
  Control u;
  for (int j = 0; j < kNumControls; ++j) {
    switch (treatments_[d][j]) {
      case ControlTreatment::kFree:
      case ControlTreatment::kSingular:
        u[j] = x[control_index_[point][j]];
        break;
      case ControlTreatment::kFixedMin:
        u[j] = model.u_min();
        break;
      case ControlTreatment::kFixedMax:
        u[j] = model.u_max();
        break;
      case ControlTreatment::kZero:
        u[j] = 0.0;
        break;
    }
  }
  return u;
}

double CollocationProblem::singular_control_energy(const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (int k = 0; k < num_points_; ++k) {
    const IntervalInfo& info = intervals_[point_interval_[k]];
    const double h = x[duration_index(info.domain)];
    const double half = 0.5 * h * (info.fraction_end - info.fraction_begin);
    const double w = cache(info.num_points).rule.weights[point_local_[k]];
    for (int j = 0; j < kNumControls; ++j) {
      if (treatments_[info.domain][j] != ControlTreatment::kSingular) continue;
      const double u = x[control_index_[k][j]];
      sum += half * w * u * u;
    }
  }
  return sum;
}

double CollocationProblem::regularization_value(const Eigen::VectorXd& x) const {
  return epsilon_ * singular_control_energy(x);
}

double CollocationProblem::objective(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (int d = 0; d < num_domains(); ++d) f += x[duration_index(d)];
  if (epsilon_ > 0.0) f += regularization_value(x);
  return f;
}

void CollocationProblem::objective_gradient(const Eigen::VectorXd& x,
                                            Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(num_variables_);
  for (int d = 0; d < num_domains(); ++d) grad[duration_index(d)] = 1.0;
  if (epsilon_ == 0.0) return;
  for (int k = 0; k < num_points_; ++k) {
    const IntervalInfo& info = intervals_[point_interval_[k]];
    const int hd = duration_index(info.domain);
    const double phi = info.fraction_end - info.fraction_begin;
    const double w = cache(info.num_points).rule.weights[point_local_[k]];
    for (int j = 0; j < kNumControls; ++j) {
      if (treatments_[info.domain][j] != ControlTreatment::kSingular) continue;
      const int idx = control_index_[k][j];
      const double u = x[idx];
      grad[idx] += epsilon_ * x[hd] * phi * w * u;
      grad[hd] += epsilon_ * 0.5 * phi * w * u * u;
    }
  }
}

void CollocationProblem::constraints(const Eigen::VectorXd& x,
                                     Eigen::VectorXd& c) const {
  c.resize(num_constraints_);
  const auto& model = maneuver_.model;
  for (const IntervalInfo& info : intervals_) {
    const IntervalCache& ic = cache(info.num_points);
    const double scale = 0.5 * x[duration_index(info.domain)] *
                         (info.fraction_end - info.fraction_begin);
    const int n = info.num_points;
    for (int r = 0; r < n; ++r) {
      const int k = info.first_point + r;
      Vec5 dy = Vec5::Zero();
      for (int s = 0; s <= n; ++s) {
        dy += ic.diff(r, s) * x.segment<kNumStates>(kNumStates * (info.first_point + s));
      }
      const Vec5 f = rates(model, node_state(x, k), point_control(x, k));
      c.segment<kNumStates>(kNumStates * k) = dy - scale * f;
    }
  }
  const Vec5 y0 = maneuver_.bc.initial.vec();
  for (int comp = 0; comp < kNumStates; ++comp) {
    c[num_defects() + comp] = x[state_index(0, comp)] - y0[comp];
  }
  const int last = num_points_;
  for (std::size_t t = 0; t < terminal_components_.size(); ++t) {
    const int comp = terminal_components_[t];
    c[terminal_row_offset_ + static_cast<int>(t)] =
        x[state_index(last, comp)] - *terminal_[comp];
  }
}

void CollocationProblem::constraint_jacobian(const Eigen::VectorXd& x,
                                             SparseMatrix& jac) const {
  const auto& model = maneuver_.model;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(num_points_) * 60);
  for (const IntervalInfo& info : intervals_) {
    const IntervalCache& ic = cache(info.num_points);
    const int hd = duration_index(info.domain);
    const double phi = info.fraction_end - info.fraction_begin;
    const double scale = 0.5 * x[hd] * phi;
    const int n = info.num_points;
    for (int r = 0; r < n; ++r) {
      const int k = info.first_point + r;
      const State y = node_state(x, k);
      const Control u = point_control(x, k);
      const auto jacs = dynamics_jacobians(model, y, u);
      const Vec5 f = rates(model, y, u);
      const int row = kNumStates * k;
      for (int s = 0; s <= n; ++s) {
        const int col = kNumStates * (info.first_point + s);
        if (s == r) {
          for (int a = 0; a < kNumStates; ++a) {
            for (int b = 0; b < kNumStates; ++b) {
              const double v = (a == b ? ic.diff(r, s) : 0.0) - scale * jacs.dy(a, b);
              trip.emplace_back(row + a, col + b, v);
            }
          }
        } else {
          for (int a = 0; a < kNumStates; ++a) {
            trip.emplace_back(row + a, col + a, ic.diff(r, s));
          }
        }
      }
      for (int j = 0; j < kNumControls; ++j) {
        const int idx = control_index_[k][j];
        if (idx >= 0) trip.emplace_back(row + j, idx, -scale);
      }
      for (int a = 0; a < kNumStates; ++a) {
        trip.emplace_back(row + a, hd, -0.5 * phi * f[a]);
      }
    }
  }
  for (int comp = 0; comp < kNumStates; ++comp) {
    trip.emplace_back(num_defects() + comp, state_index(0, comp), 1.0);
  }
  for (std::size_t t = 0; t < terminal_components_.size(); ++t) {
    trip.emplace_back(terminal_row_offset_ + static_cast<int>(t),
                      state_index(num_points_, terminal_components_[t]), 1.0);
  }
  jac.resize(num_constraints_, num_variables_);
  jac.setFromTriplets(trip.begin(), trip.end());
}

void CollocationProblem::lagrangian_hessian(const Eigen::VectorXd& x,
                                            double obj_factor,
                                            const Eigen::VectorXd& y,
                                            SparseMatrix& hess) const {
  const auto& model = maneuver_.model;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(num_points_) * 30);
  for (const IntervalInfo& info : intervals_) {
    const int hd = duration_index(info.domain);
    const double phi = info.fraction_end - info.fraction_begin;
    const double h = x[hd];
    const double scale = 0.5 * h * phi;
    const Eigen::VectorXd& weights = cache(info.num_points).rule.weights;
    for (int r = 0; r < info.num_points; ++r) {
      const int k = info.first_point + r;
      const Vec5 mu = y.segment<kNumStates>(kNumStates * k);
      const State st = node_state(x, k);
      const Control u = point_control(x, k);
      const Mat5 hc = dynamics_hessian_contraction(model, st, mu);
      const Vec5 jt_mu = dynamics_jacobians(model, st, u).dy.transpose() * mu;
      const int col = kNumStates * k;
      for (int a = 0; a < kNumStates; ++a) {
        for (int b = 0; b <= a; ++b) {
          trip.emplace_back(col + a, col + b, -scale * hc(a, b));
        }
        trip.emplace_back(hd, col + a, -0.5 * phi * jt_mu[a]);
      }
      for (int j = 0; j < kNumControls; ++j) {
        const int idx = control_index_[k][j];
        if (idx < 0) continue;
        double hu = -0.5 * phi * mu[j];
        double uu = 0.0;
        if (treatments_[info.domain][j] == ControlTreatment::kSingular) {
          hu += obj_factor * epsilon_ * phi * weights[r] * x[idx];
          uu = obj_factor * epsilon_ * h * phi * weights[r];
        }
        trip.emplace_back(hd, idx, hu);
        trip.emplace_back(idx, idx, uu);
      }
    }
  }
  hess.resize(num_variables_, num_variables_);
  hess.setFromTriplets(trip.begin(), trip.end());
}

double CollocationProblem::final_time(const Eigen::VectorXd& x) const {
  double t = 0.0;
  for (int d = 0; d < num_domains(); ++d) t += x[duration_index(d)];
  return t;
}

std::vector<double> CollocationProblem::domain_boundaries(
    const Eigen::VectorXd& x) const {
  std::vector<double> b{0.0};
  for (int d = 0; d < num_domains(); ++d) b.push_back(b.back() + x[duration_index(d)]);
  return b;
}

std::pair<double, double> CollocationProblem::interval_span(
    const Eigen::VectorXd& x, int interval) const {
  const IntervalInfo& info = intervals_[interval];
  double start = 0.0;
  for (int d = 0; d < info.domain; ++d) start += x[duration_index(d)];
  const double h = x[duration_index(info.domain)];
  return {start + h * info.fraction_begin,
          h * (info.fraction_end - info.fraction_begin)};
}

std::vector<double> CollocationProblem::node_times(const Eigen::VectorXd& x) const {
  std::vector<double> t(num_nodes());
  for (int i = 0; i < static_cast<int>(intervals_.size()); ++i) {
    const auto [start, len] = interval_span(x, i);
    const LgrRule& rule = cache(intervals_[i].num_points).rule;
    for (int r = 0; r < rule.size(); ++r) {
      t[intervals_[i].first_point + r] = start + 0.5 * (rule.points[r] + 1.0) * len;
    }
  }
  t.back() = final_time(x);
  return t;
}

Eigen::VectorXd CollocationProblem::initial_point(
    const GuessFunction& guess, const std::vector<double>& domain_durations) const {
  if (static_cast<int>(domain_durations.size()) != num_domains()) {
    throw Error(ErrorCode::kDomain, "one duration per domain required");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_variables_);
  for (int d = 0; d < num_domains(); ++d) {
    x[duration_index(d)] =
        std::clamp(domain_durations[d], min_duration_, max_duration_);
  }
  const std::vector<double> times = node_times(x);
  const auto& model = maneuver_.model;
  for (int node = 0; node < num_nodes(); ++node) {
    const GuessSample s = guess(times[node]);
    x.segment<kNumStates>(kNumStates * node) = s.y.vec();
    if (node == num_points_) break;
    for (int j = 0; j < kNumControls; ++j) {
      const int idx = control_index_[node][j];
      if (idx >= 0) x[idx] = std::clamp(s.u[j], model.u_min(), model.u_max());
    }
  }
  return x;
}

Eigen::VectorXd CollocationProblem::default_initial_point(double final_time) const {
  const Vec5 y0 = maneuver_.bc.initial.vec();
  Vec5 yf = y0;
  for (int c = 0; c < kNumStates; ++c) {
    if (terminal_[c]) yf[c] = *terminal_[c];
  }
  const double mid = 0.5 * (maneuver_.model.u_min() + maneuver_.model.u_max());
  auto guess = [&](double t) {
    const double s = std::clamp(t / final_time, 0.0, 1.0);
    return GuessSample{State::from((1.0 - s) * y0 + s * yf), Control{mid, mid, mid}};
  };
  std::vector<double> durations(num_domains(), final_time / num_domains());
  return initial_point(guess, durations);
}

int CollocationProblem::locate(const Eigen::VectorXd& x, double t,
                               bool left_limit) const {
  const int count = static_cast<int>(intervals_.size());
  int best = 0;
  for (int i = 0; i < count; ++i) {
    const double start = interval_span(x, i).first;
    if (left_limit ? start < t : start <= t) best = i;
  }
  return best;
}

GuessSample CollocationProblem::evaluate(const Eigen::VectorXd& x, double t,
                                         bool left_limit) const {
  const int i = locate(x, t, left_limit);
  const IntervalInfo& info = intervals_[i];
  const IntervalCache& ic = cache(info.num_points);
  const auto [start, len] = interval_span(x, i);
  const double tau = std::clamp(2.0 * (t - start) / len - 1.0, -1.0, 1.0);
  const int n = info.num_points;

  const Eigen::VectorXd basis = lagrange_basis(ic.support, tau);
  Vec5 y = Vec5::Zero();
  for (int s = 0; s <= n; ++s) {
    y += basis[s] * x.segment<kNumStates>(kNumStates * (info.first_point + s));
  }
  Control u = point_control(x, info.first_point);
  const auto& model = maneuver_.model;
  for (int j = 0; j < kNumControls; ++j) {
    if (control_index_[info.first_point][j] < 0) continue;
    Eigen::VectorXd values(n);
    for (int r = 0; r < n; ++r) values[r] = x[control_index_[info.first_point + r][j]];
    u[j] = std::clamp(interpolate(ic.rule.points, values, tau), model.u_min(),
                      model.u_max());
  }
  return GuessSample{State::from(y), u};
}

namespace {

std::vector<std::array<ControlTreatment, kNumControls>> treatments_for(
    const SpacecraftModel& model, const Mesh& mesh,
    const ControlStructure* structure) {
  std::vector<std::array<ControlTreatment, kNumControls>> out;
  if (structure == nullptr) {
    for (int d = 0; d < mesh.num_domains(); ++d) {
      std::array<ControlTreatment, kNumControls> row{};
      for (int j = 0; j < kNumControls; ++j) {
        row[j] = model.control_active(j) ? ControlTreatment::kFree
                                         : ControlTreatment::kZero;
      }
      out.push_back(row);
    }
    return out;
  }
  structure->validate();
  if (structure->num_domains() != mesh.num_domains()) {
    throw Error(ErrorCode::kStructure,
                fmt::format("structure has {} segments but the mesh has {} domains",
                            structure->num_domains(), mesh.num_domains()));
  }
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), structure->breakpoints.begin(),
               structure->breakpoints.end());
  edges.push_back(1.0);
  for (int d = 0; d < mesh.num_domains(); ++d) {
    const double mid = 0.5 * (edges[d] + edges[d + 1]);
    std::array<ControlTreatment, kNumControls> row{};
    for (int j = 0; j < kNumControls; ++j) {
      if (!model.control_active(j) || structure->arcs[j].empty()) {
        row[j] = model.control_active(j) ? ControlTreatment::kFree
                                         : ControlTreatment::kZero;
        continue;
      }
      switch (structure->kind_at(j, mid)) {
        case ArcKind::kBangMin:
          row[j] = ControlTreatment::kFixedMin;
          break;
        case ArcKind::kBangMax:
          row[j] = ControlTreatment::kFixedMax;
          break;
        case ArcKind::kSingular:
          row[j] = ControlTreatment::kSingular;
          break;
      }
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace

CollocationProblem transcribe(const Maneuver& maneuver, const Mesh& mesh,
                              const ControlStructure* structure, double epsilon) {
  auto treatments = treatments_for(maneuver.model, mesh, structure);
  if (structure == nullptr) {
    return CollocationProblem(maneuver, mesh, std::move(treatments), epsilon, 1e-2,
                              1e2);
  }
  const double tf = structure->final_time;
  return CollocationProblem(maneuver, mesh, std::move(treatments), epsilon,
                            1e-3 * tf, 10.0 * tf);
}

namespace {

Vec5 endpoint_costate(const Eigen::VectorXd& y, const CollocationProblem::IntervalInfo& info) {
  const LgrRule rule = lgr_points_weights(info.num_points);
  const Eigen::MatrixXd diff = differentiation_matrix(rule.support_points());
  Vec5 lam = Vec5::Zero();
  for (int r = 0; r < info.num_points; ++r) {
    lam -= diff(r, info.num_points) * y.segment<kNumStates>(kNumStates * (info.first_point + r));
  }
  return lam;
}

}  // namespace

Eigen::MatrixXd estimate_costates(const CollocationProblem& problem,
                                  const DiscreteSolution& solution) {
  if (!solution.has_multipliers() ||
      solution.multipliers.y.size() != problem.num_constraints()) {
    throw Error(ErrorCode::kDomain, "solution carries no constraint multipliers");
  }
  const Eigen::VectorXd& y = solution.multipliers.y;
  Eigen::MatrixXd lam(problem.num_nodes(), kNumStates);
  const auto& intervals = problem.intervals();
  for (const auto& info : intervals) {
    const LgrRule rule = lgr_points_weights(info.num_points);
    for (int r = 0; r < info.num_points; ++r) {
      const int k = info.first_point + r;
      lam.row(k) = -y.segment<kNumStates>(kNumStates * k).transpose() / rule.weights[r];
    }
  }
  // At a domain boundary the controls jump; the end-point estimate of the
  // preceding domain is the better costate there.
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    const auto& prev = intervals[i - 1];
    if (intervals[i].domain == prev.domain) continue;
    lam.row(intervals[i].first_point) = endpoint_costate(y, prev).transpose();
  }
  lam.row(problem.num_nodes() - 1) = endpoint_costate(y, intervals.back()).transpose();
  return lam;
}

Trajectory node_trajectory(const CollocationProblem& problem,
                           const DiscreteSolution& solution) {
  const Eigen::MatrixXd lam = estimate_costates(problem, solution);
  const std::vector<double> times = problem.node_times(solution.x);
  Trajectory traj;
  traj.has_costates = true;
  for (int node = 0; node < problem.num_nodes(); ++node) {
    TrajectoryPoint p;
    p.t = times[node];
    p.y = problem.node_state(solution.x, node);
    p.u = node < problem.num_collocation_points()
              ? problem.point_control(solution.x, node)
              : problem.evaluate(solution.x, times[node], true).u;
    p.lam = Costate::from(lam.row(node).transpose());
    traj.points.push_back(p);
  }
  traj.refresh_costate_fields(problem.maneuver().model);
  return traj;
}

Trajectory dense_trajectory(const CollocationProblem& problem,
                            const DiscreteSolution& solution, int samples) {
  if (samples < 2) throw Error(ErrorCode::kDomain, "need at least two samples");
  const Eigen::VectorXd& x = solution.x;
  const bool with_costates = solution.has_multipliers();
  Eigen::MatrixXd lam;
  if (with_costates) lam = estimate_costates(problem, solution);
  const double tf = problem.final_time(x);

  std::vector<std::pair<double, bool>> stamps;
  for (int i = 0; i < samples; ++i) {
    stamps.emplace_back(tf * static_cast<double>(i) / (samples - 1), false);
  }
  const std::vector<double> bounds = problem.domain_boundaries(x);
  for (std::size_t b = 1; b + 1 < bounds.size(); ++b) {
    stamps.emplace_back(bounds[b], true);
    stamps.emplace_back(bounds[b], false);
  }
  std::stable_sort(stamps.begin(), stamps.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });

  const auto& intervals = problem.intervals();
  Trajectory traj;
  traj.has_costates = with_costates;
  for (const auto& [t, left] : stamps) {
    TrajectoryPoint p;
    p.t = t;
    const GuessSample s = problem.evaluate(x, t, left);
    p.y = s.y;
    p.u = s.u;
    if (with_costates) {
      // Same interval choice as evaluate().
      int iv = 0;
      for (int i = 0; i < static_cast<int>(intervals.size()); ++i) {
        const double start = problem.interval_span(x, i).first;
        if (left ? start < t : start <= t) iv = i;
      }
      const auto& info = intervals[iv];
      const auto [start, len] = problem.interval_span(x, iv);
      const double tau = std::clamp(2.0 * (t - start) / len - 1.0, -1.0, 1.0);
      const LgrRule rule = lgr_points_weights(info.num_points);
      const Eigen::VectorXd basis = lagrange_basis(rule.support_points(), tau);
      Vec5 l = Vec5::Zero();
      for (int r = 0; r <= info.num_points; ++r) {
        l += basis[r] * lam.row(info.first_point + r).transpose();
      }
      p.lam = Costate::from(l);
    }
    traj.points.push_back(p);
  }
  if (with_costates) traj.refresh_costate_fields(problem.maneuver().model);
  return traj;
}

}  // namespace reorient
