#include "reorient/structure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>

#include <Eigen/LU>
#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "reorient/nlp.hpp"
#include "reorient/oracle.hpp"

namespace reorient {

std::string_view to_string(ArcKind kind) {
  switch (kind) {
    case ArcKind::kBangMin: return "min";
    case ArcKind::kBangMax: return "max";
    case ArcKind::kSingular: return "singular";
  }
  return "?";
}

bool ControlStructure::has_singular() const {
  for (const auto& list : arcs) {
    for (const auto& arc : list) {
      if (arc.kind == ArcKind::kSingular) return true;
    }
  }
  return false;
}

ArcKind ControlStructure::kind_at(int j, double fraction) const {
  const auto& list = arcs.at(j);
  if (list.empty()) throw Error(ErrorCode::kStructure, "component has no arcs");
  for (const auto& arc : list) {
    if (fraction < arc.end_fraction) return arc.kind;
  }
  return list.back().kind;
}

void ControlStructure::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kStructure, what); };
  if (breakpoints.size() != breakpoint_control.size()) fail("breakpoint list mismatch");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0 && breakpoints[i] < 1.0)) fail("breakpoint outside (0, 1)");
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
      fail("breakpoints must be strictly increasing");
    }
  }
  for (int j = 0; j < kNumControls; ++j) {
    const auto& list = arcs[j];
    if (list.empty()) continue;
    if (list.front().start_fraction != 0.0 || list.back().end_fraction != 1.0) {
      fail(fmt::format("arcs of u{} do not cover [0, 1]", j + 1));
    }
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].control != j) fail("arc filed under the wrong component");
      if (!(list[k].end_fraction > list[k].start_fraction)) fail("empty arc");
      if (k == 0) continue;
      if (list[k].start_fraction != list[k - 1].end_fraction) fail("arcs overlap or leave gaps");
      if (list[k].kind == list[k - 1].kind) fail("adjacent arcs of the same kind");
      const double b = list[k].start_fraction;
      const bool listed = std::any_of(breakpoints.begin(), breakpoints.end(),
                                      [b](double v) { return v == b; });
      if (!listed) fail("arc boundary missing from the breakpoint list");
    }
  }
}

std::string ControlStructure::describe() const {
  std::string out;
  for (int j = 0; j < kNumControls; ++j) {
    if (arcs[j].empty()) continue;
    if (!out.empty()) out += "; ";
    out += fmt::format("u{}:", j + 1);
    for (const auto& arc : arcs[j]) {
      out += fmt::format(" {}[{:.6f},{:.6f}]", to_string(arc.kind),
                         arc.start_fraction * final_time, arc.end_fraction * final_time);
    }
  }
  return out;
}

namespace {

enum class Sample { kMin, kMax, kInterior };

struct Segment {
  ArcKind kind;
  int first;
  int last;
};

double zero_crossing(double t0, double g0, double t1, double g1) {
  if (g0 == g1) return 0.5 * (t0 + t1);
  const double s = std::clamp(g0 / (g0 - g1), 0.0, 1.0);
  return t0 + s * (t1 - t0);
}

}  // namespace

ControlStructure detect_structure(const Trajectory& trajectory,
                                  const SpacecraftModel& model,
                                  const DetectionOptions& options) {
  if (!trajectory.has_costates) {
    throw Error(ErrorCode::kDomain, "structure detection needs costate estimates");
  }
  // Drop repeated time stamps (switch rows).
  std::vector<const TrajectoryPoint*> pts;
  for (const auto& p : trajectory.points) {
    if (!pts.empty() && p.t <= pts.back()->t) continue;
    pts.push_back(&p);
  }
  const int count = static_cast<int>(pts.size());
  if (count < 2) throw Error(ErrorCode::kStructure, "too few samples");
  const double t0 = pts.front()->t;
  const double tf = pts.back()->t;
  const double span = tf - t0;
  const double tol = options.bang_fraction * (model.u_max() - model.u_min());

  ControlStructure cs;
  cs.final_time = span;
  std::vector<std::pair<double, int>> bps;

  // Each switching function is measured against its own peak, floored at 1%
  // of the largest peak so that a g that is noise everywhere still reads as
  // singular.
  Vec3 gpeak = Vec3::Zero();
  for (int j = 0; j < kNumControls; ++j) {
    if (!model.control_active(j)) continue;
    for (const auto* p : pts) gpeak[j] = std::max(gpeak[j], std::abs(p->g[j]));
  }

  for (int j = 0; j < kNumControls; ++j) {
    if (!model.control_active(j)) continue;
    const double gzero =
        options.singular_fraction * std::max(gpeak[j], 1e-2 * gpeak.maxCoeff());

    std::vector<Sample> cls(count);
    for (int k = 0; k < count; ++k) {
      const double u = pts[k]->u[j];
      if (u <= model.u_min() + tol) {
        cls[k] = Sample::kMin;
      } else if (u >= model.u_max() - tol) {
        cls[k] = Sample::kMax;
      } else {
        cls[k] = Sample::kInterior;
      }
    }
    auto by_sign = [&](int k) {
      return pts[k]->g[j] > 0.0 ? ArcKind::kBangMin : ArcKind::kBangMax;
    };
    auto is_singular = [&](int k, int e) {
      const int len = e - k + 1;
      int small = 0;
      for (int i = k; i <= e; ++i) {
        if (std::abs(pts[i]->g[j]) <= gzero) ++small;
      }
      return len >= options.min_singular_samples && 2 * small >= len;
    };

    std::vector<ArcKind> kind(count);
    for (int k = 0; k < count;) {
      if (cls[k] != Sample::kInterior) {
        kind[k] = cls[k] == Sample::kMin ? ArcKind::kBangMin : ArcKind::kBangMax;
        ++k;
        continue;
      }
      int e = k;
      while (e + 1 < count && cls[e + 1] == Sample::kInterior) ++e;
      const int len = e - k + 1;
      if (is_singular(k, e)) {
        // Samples leaning to a bound, with g on that bound's side, mark
        // unresolved bang arcs next to the singular arc.
        std::vector<double> us;
        for (int i = k; i <= e; ++i) us.push_back(pts[i]->u[j]);
        std::nth_element(us.begin(), us.begin() + len / 2, us.end());
        const double mid = us[len / 2];
        std::vector<int> lean(len, 0);
        for (int i = k; i <= e; ++i) {
          const double u = pts[i]->u[j];
          const double g = pts[i]->g[j];
          if (g > 0.0 && u - model.u_min() < std::abs(u - mid)) lean[i - k] = -1;
          if (g < 0.0 && model.u_max() - u < std::abs(u - mid)) lean[i - k] = 1;
        }
        for (int i = 0; i < len;) {
          int f = i;
          while (f + 1 < len && lean[f + 1] == lean[i]) ++f;
          if (lean[i] != 0 && f - i + 1 < 2) lean[i] = 0;
          i = f + 1;
        }
        for (int i = 0; i < len;) {
          int f = i;
          while (f + 1 < len && (lean[f + 1] != 0) == (lean[i] != 0) &&
                 (lean[i] == 0 || lean[f + 1] == lean[i])) {
            ++f;
          }
          if (lean[i] != 0) {
            for (int q = i; q <= f; ++q) {
              kind[k + q] = lean[i] < 0 ? ArcKind::kBangMin : ArcKind::kBangMax;
            }
          } else if (is_singular(k + i, k + f)) {
            for (int q = i; q <= f; ++q) kind[k + q] = ArcKind::kSingular;
          } else {
            for (int q = i; q <= f; ++q) kind[k + q] = by_sign(k + q);
          }
          i = f + 1;
        }
      } else {
        bool crossing = false;
        for (int i = std::max(0, k - 1); i < std::min(count - 1, e + 1); ++i) {
          if (pts[i]->g[j] * pts[i + 1]->g[j] <= 0.0) crossing = true;
        }
        if (len > 2 && !crossing) {
          throw Error(ErrorCode::kStructure,
                      fmt::format("u{} is interior on [{:.4f}, {:.4f}] while |g{}| "
                                  "stays above {:.2e}",
                                  j + 1, pts[k]->t, pts[e]->t, j + 1, gzero));
        }
        for (int i = k; i <= e; ++i) kind[i] = by_sign(i);
      }
      k = e + 1;
    }

    std::vector<Segment> segs;
    for (int k = 0; k < count; ++k) {
      if (!segs.empty() && segs.back().kind == kind[k]) {
        segs.back().last = k;
      } else {
        segs.push_back({kind[k], k, k});
      }
    }
    // Absorb isolated samples.
    bool changed = true;
    while (changed && segs.size() > 1) {
      changed = false;
      for (std::size_t s = 0; s < segs.size(); ++s) {
        if (segs[s].first != segs[s].last || segs[s].kind == ArcKind::kSingular) continue;
        const bool at_start = s == 0;
        const bool at_end = s + 1 == segs.size();
        if (at_start) {
          segs[1].first = segs[0].first;
          segs.erase(segs.begin());
        } else if (at_end) {
          segs[s - 1].last = segs[s].last;
          segs.pop_back();
        } else if (segs[s - 1].kind == segs[s + 1].kind) {
          segs[s - 1].last = segs[s + 1].last;
          segs.erase(segs.begin() + static_cast<long>(s), segs.begin() + static_cast<long>(s) + 2);
        } else {
          continue;
        }
        changed = true;
        break;
      }
    }

    std::vector<ArcSpec> list;
    double start = 0.0;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      double end = 1.0;
      if (s + 1 < segs.size()) {
        const int a = segs[s].last;
        const int b = segs[s + 1].first;
        double t = 0.5 * (pts[a]->t + pts[b]->t);
        const bool bang_bang = segs[s].kind != ArcKind::kSingular &&
                               segs[s + 1].kind != ArcKind::kSingular;
        if (bang_bang) {
          // Nearest sign change of g around the junction.
          const double ga = pts[a]->g[j];
          const double gb = pts[b]->g[j];
          if (ga * gb <= 0.0) {
            t = zero_crossing(pts[a]->t, ga, pts[b]->t, gb);
          } else {
            for (int w = 1; w <= 3; ++w) {
              const int lo = std::max(0, a - w);
              const int hi = std::min(count - 1, b + w);
              bool found = false;
              for (int i = lo; i < hi; ++i) {
                if (pts[i]->g[j] * pts[i + 1]->g[j] <= 0.0) {
                  t = zero_crossing(pts[i]->t, pts[i]->g[j], pts[i + 1]->t, pts[i + 1]->g[j]);
                  found = true;
                  break;
                }
              }
              if (found) break;
            }
          }
        }
        end = std::clamp((t - t0) / span, 1e-6, 1.0 - 1e-6);
        if (end <= start) end = start + 1e-6;
      }
      list.push_back({j, segs[s].kind, start, end});
      if (s + 1 < segs.size()) bps.emplace_back(end, j);
      start = end;
    }
    cs.arcs[j] = std::move(list);
  }

  std::sort(bps.begin(), bps.end());
  for (const auto& [b, j] : bps) {
    if (!cs.breakpoints.empty() && b - cs.breakpoints.back() < 1e-12) {
      // Coincident switches of two components share one breakpoint.
      for (auto& arc : cs.arcs[j]) {
        if (arc.start_fraction == b) arc.start_fraction = cs.breakpoints.back();
        if (arc.end_fraction == b) arc.end_fraction = cs.breakpoints.back();
      }
      continue;
    }
    cs.breakpoints.push_back(b);
    cs.breakpoint_control.push_back(j);
  }
  cs.validate();
  return cs;
}

bool same_structure(const ControlStructure& a, const ControlStructure& b) {
  if (a.breakpoints.size() != b.breakpoints.size()) return false;
  for (int j = 0; j < kNumControls; ++j) {
    if (a.arcs[j].size() != b.arcs[j].size()) return false;
    for (std::size_t k = 0; k < a.arcs[j].size(); ++k) {
      if (a.arcs[j][k].kind != b.arcs[j][k].kind) return false;
    }
  }
  return true;
}

Mesh structured_mesh(const ControlStructure& structure, int total_intervals,
                     int points) {
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), structure.breakpoints.begin(), structure.breakpoints.end());
  edges.push_back(1.0);
  Mesh mesh;
  for (std::size_t d = 0; d + 1 < edges.size(); ++d) {
    const int k = std::max(
        1, static_cast<int>(std::lround(total_intervals * (edges[d + 1] - edges[d]))));
    mesh.domains.push_back(Mesh::uniform(k, points).domains.front());
  }
  mesh.validate();
  return mesh;
}

CollocationProblem apply_structure(const Maneuver& maneuver,
                                   const ControlStructure& structure,
                                   const Mesh& mesh, double epsilon) {
  return transcribe(maneuver, mesh, &structure, epsilon);
}

std::optional<double> SolveReport::singular_onset() const {
  std::optional<double> onset;
  for (const auto& list : structure.arcs) {
    for (const auto& arc : list) {
      if (arc.kind != ArcKind::kSingular) continue;
      const double t = arc.start_fraction * final_time;
      if (!onset || t < *onset) onset = t;
    }
  }
  return onset;
}

DiscreteSolution solve_collocation(const CollocationProblem& problem,
                                   const Eigen::VectorXd& x0,
                                   const BbsocOptions& options,
                                   const Multipliers* warm, int* iterations) {
  NlpOptions nlp;
  nlp.tolerance = options.eps_nlp;
  // Bang controls sit about z^-1 times the complementarity inside their
  // bounds, and the bound multipliers carry quadrature-weight scale.
  nlp.complementarity_tolerance = 1e-2 * options.eps_nlp;
  nlp.max_iterations = options.nlp_max_iterations;
  if (warm != nullptr) {
    nlp.mu_init = 1e-6;
    nlp.bound_push = 1e-8;
  }
  const NlpResult res = solve(problem, x0, nlp, warm);
  if (iterations != nullptr) *iterations += res.iterations;
  if (!res.ok()) {
    throw Error(ErrorCode::kSolver,
                fmt::format("NLP stopped with status {} after {} iterations "
                            "(feasibility {:.2e}, stationarity {:.2e})",
                            to_string(res.status), res.iterations, res.kkt.feasibility,
                            res.kkt.stationarity));
  }
  return DiscreteSolution{res.x, res.multipliers, res.objective};
}

namespace {

using ProblemPtr = std::shared_ptr<const CollocationProblem>;

struct Stage {
  ProblemPtr problem;
  DiscreteSolution solution;
  double max_error = 0.0;
};

GuessFunction guess_from(const ProblemPtr& problem, const Eigen::VectorXd& x) {
  return [problem, x](double t) { return problem->evaluate(x, t); };
}

std::vector<double> durations_of(const CollocationProblem& problem,
                                 const Eigen::VectorXd& x) {
  std::vector<double> d;
  for (int k = 0; k < problem.num_domains(); ++k) d.push_back(x[problem.duration_index(k)]);
  return d;
}

// Solve, estimate, refine until the error meets eps_mesh or `rounds` runs out.
// A warm start (x and multipliers) applies to the first solve only.
Stage refine_loop(const Maneuver& maneuver, const ControlStructure* structure,
                  Mesh mesh, double epsilon, GuessFunction guess,
                  std::vector<double> durations, const BbsocOptions& options,
                  int rounds, const std::string& name,
                  std::vector<StageRecord>& history, int& iterations,
                  const DiscreteSolution* warm = nullptr) {
  for (int r = 0;; ++r) {
    auto problem = std::make_shared<const CollocationProblem>(
        transcribe(maneuver, mesh, structure, epsilon));
    int its = 0;
    DiscreteSolution sol;
    if (warm != nullptr && r == 0 && warm->x.size() == problem->num_variables()) {
      sol = solve_collocation(*problem, warm->x, options, &warm->multipliers, &its);
    } else {
      sol = solve_collocation(*problem, problem->initial_point(guess, durations),
                              options, nullptr, &its);
    }
    iterations += its;
    const ErrorEstimate est = estimate_error(*problem, sol.x);
    StageRecord rec;
    rec.stage = name;
    rec.domains = mesh.num_domains();
    rec.intervals = mesh.total_intervals();
    rec.points = mesh.total_points();
    rec.max_error = est.max_error;
    rec.final_time = problem->final_time(sol.x);
    rec.nlp_iterations = its;
    history.push_back(rec);
    if (options.log != nullptr) {
      *options.log << fmt::format("  {} round {}: {} intervals, {} points, tf {:.8f}, "
                                  "error {:.2e}, {} iterations\n",
                                  name, r, rec.intervals, rec.points, rec.final_time,
                                  rec.max_error, its);
    }
    if (est.max_error <= options.eps_mesh || r >= rounds) {
      return Stage{problem, std::move(sol), est.max_error};
    }
    RefineOptions ro;
    ro.tolerance = options.eps_mesh;
    mesh = refine(mesh, est, ro);
    guess = guess_from(problem, sol.x);
    durations = durations_of(*problem, sol.x);
  }
}

// Switching functions of the penalized problem: on domains where u_j carries
// the epsilon * u_j^2 term, dH/du_j = g_j + 2 epsilon u_j, which vanishes on
// a resolved singular arc.
Trajectory penalized_switching(const CollocationProblem& problem, const Eigen::VectorXd& x,
                               Trajectory traj) {
  if (problem.epsilon() == 0.0) return traj;
  const std::vector<double> bounds = problem.domain_boundaries(x);
  for (auto& p : traj.points) {
    int d = 0;
    while (d + 1 < problem.num_domains() && p.t >= bounds[d + 1]) ++d;
    for (int j = 0; j < kNumControls; ++j) {
      if (problem.treatment(d, j) == ControlTreatment::kSingular) {
        p.g[j] += 2.0 * problem.epsilon() * p.u[j];
      }
    }
  }
  return traj;
}

// Saturated rate-tracking law that steers toward the fixed terminal
// components. Used to build a dynamically consistent starting guess when
// straight-line interpolation leads the NLP astray.
Control steering_law(const Maneuver& m, const State& y) {
  const auto& tgt = m.bc.terminal;
  const auto& model = m.model;
  double ref1 = tgt[0].value_or(0.0);
  double ref2 = tgt[1].value_or(0.0);
  if (tgt[3] && tgt[4]) {
    const double x1 = y.x1, x2 = y.x2;
    Eigen::Matrix2d b;
    b << 0.5 * (1.0 + x1 * x1 - x2 * x2), x1 * x2, x1 * x2, 0.5 * (1.0 + x2 * x2 - x1 * x1);
    const Eigen::Vector2d drift{y.omega3 * x2, -y.omega3 * x1};
    const Eigen::Vector2d err{x1 - *tgt[3], x2 - *tgt[4]};
    Eigen::Vector2d w = b.inverse() * (-1.5 * err - drift);
    if (w.norm() > 1.0) w /= w.norm();
    ref1 = w[0];
    ref2 = w[1];
  }
  const double gain = 4.0;
  Control u;
  u.u1 = -model.a() * y.omega3 * y.omega2 - gain * (y.omega1 - ref1);
  u.u2 = model.a() * y.omega3 * y.omega1 - gain * (y.omega2 - ref2);
  if (model.control_active(2)) {
    u.u3 = -gain * (y.omega3 - tgt[2].value_or(m.bc.initial.omega3));
  }
  for (int j = 0; j < kNumControls; ++j) {
    u[j] = model.control_active(j) ? std::clamp(u[j], model.u_min(), model.u_max()) : 0.0;
  }
  return u;
}

// Simulates steering_law until every fixed terminal component is within
// 1e-2; returns the horizon and a guess, or nothing if it never gets there.
std::optional<std::pair<double, GuessFunction>> steering_guess(const Maneuver& m) {
  ControlPolicy policy;
  policy.law = [m](double, const State& y) { return steering_law(m, y); };
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  cfg.max_step = 0.02;
  const Trajectory traj = integrate(m.model, m.bc.initial, policy, 0.0, 30.0, cfg);
  std::size_t end = traj.points.size();
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const Vec5 y = traj.points[i].y.vec();
    double err = 0.0;
    for (int c = 0; c < kNumStates; ++c) {
      if (m.bc.terminal[c]) err = std::max(err, std::abs(y[c] - *m.bc.terminal[c]));
    }
    if (err <= 1e-2) {
      end = i + 1;
      break;
    }
  }
  if (end == traj.points.size() || end < 2) return std::nullopt;
  Trajectory cut;
  cut.points.assign(traj.points.begin(), traj.points.begin() + end);
  const double tf = cut.final_time();
  const ControlPolicy replay = sampled_policy(m.model, cut);
  GuessFunction guess = [cut, replay, model = m.model](double t) {
    const State y = cut.state_at(model, t);
    return GuessSample{y, replay.law(t, y)};
  };
  return std::make_pair(tf, guess);
}

double final_time_guess(const Maneuver& m) {
  const Vec5 y0 = m.bc.initial.vec();
  const double umax = std::max(std::abs(m.model.u_min()), std::abs(m.model.u_max()));
  double rate = 0.0;
  for (int c = 0; c < 3; ++c) {
    if (m.bc.terminal[c]) rate = std::max(rate, std::abs(*m.bc.terminal[c] - y0[c]) / umax);
  }
  double angle = 0.0;
  if (m.bc.terminal[3] && m.bc.terminal[4]) {
    const auto a = x_to_direction_cosines(y0[3], y0[4]);
    const auto b = x_to_direction_cosines(*m.bc.terminal[3], *m.bc.terminal[4]);
    const double dot = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
    angle = std::acos(dot);
  }
  return std::max(0.5, rate + 2.0 * std::sqrt(angle / umax));
}

}  // namespace

RegularizedSolve regularize_singular(const Maneuver& maneuver,
                                     const ControlStructure& structure,
                                     const Mesh& mesh, const GuessFunction& guess,
                                     const std::vector<double>& durations,
                                     const BbsocOptions& options) {
  RegularizedSolve out;
  const auto& sched = options.schedule;
  if (!structure.has_singular()) {
    Stage st = refine_loop(maneuver, &structure, mesh, 0.0, guess, durations, options,
                           options.max_refinements, "structured", out.history,
                           out.nlp_iterations);
    out.problem = st.problem;
    out.solution = std::move(st.solution);
    return out;
  }
  if (!(sched.initial_epsilon > 0.0) || !(sched.reduction > 1.0) || sched.max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "invalid regularization schedule");
  }
  double eps = sched.initial_epsilon;
  Mesh current = mesh;
  GuessFunction g = guess;
  std::vector<double> dur = durations;
  DiscreteSolution prev;
  bool have_prev = false;
  for (int p = 1; p <= sched.max_iterations; ++p) {
    Stage st = refine_loop(maneuver, &structure, current, eps, g, dur, options,
                           options.max_refinements, fmt::format("regularized p={}", p),
                           out.history, out.nlp_iterations, have_prev ? &prev : nullptr);
    const double delta = st.problem->regularization_value(st.solution.x);
    out.record.history.push_back(delta);
    out.record.epsilon = eps;
    out.record.delta = delta;
    out.record.p = p;
    out.problem = st.problem;
    out.solution = st.solution;
    if (options.log != nullptr) {
      *options.log << fmt::format("  p={} epsilon={:.1e} delta={:.3e}\n", p, eps, delta);
    }
    if (delta <= sched.delta_tolerance) return out;
    current = st.problem->mesh();
    g = guess_from(st.problem, st.solution.x);
    dur = durations_of(*st.problem, st.solution.x);
    prev = st.solution;
    have_prev = true;
    eps /= sched.reduction;
  }
  throw Error(ErrorCode::kSolver,
              fmt::format("regularization did not reach delta <= {:.1e} in {} iterations "
                          "(last delta {:.3e})",
                          sched.delta_tolerance, sched.max_iterations, out.record.delta));
}

BbsocResult bbsoc_solve(const Maneuver& maneuver, const BbsocOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  BbsocResult result;
  SolveReport& rep = result.report;
  rep.maneuver = maneuver.name;
  rep.torque_mode = maneuver.model.torque_mode();
  std::string stage = "setup";
  auto log = [&](const std::string& s) {
    if (options.log != nullptr) *options.log << s << '\n';
  };
  auto record_best = [&](const ProblemPtr& problem, const DiscreteSolution& sol) {
    result.problem = problem;
    result.solution = sol;
    rep.final_time = problem->final_time(sol.x);
  };

  try {
    maneuver.bc.validate();
    if (options.mesh_points < kMinMeshPoints || options.mesh_points > kMaxMeshPoints ||
        options.mesh_intervals < 1) {
      throw Error(ErrorCode::kConfig, "mesh seed outside the point limits");
    }

    // Unstructured solve. Retry a few horizon guesses if the NLP fails.
    stage = "initial";
    log(fmt::format("{}: initial unstructured solve", maneuver.name));
    const double base = options.final_time_guess > 0.0 ? options.final_time_guess
                                                       : final_time_guess(maneuver);
    Stage initial;
    std::string last_error;
    bool solved = false;
    const Mesh seed_mesh = Mesh::uniform(options.mesh_intervals, options.mesh_points);
    const auto seed_problem =
        std::make_shared<const CollocationProblem>(transcribe(maneuver, seed_mesh));
    std::vector<std::pair<double, GuessFunction>> attempts;
    auto straight = [&](double tf0) {
      return std::make_pair(tf0, guess_from(seed_problem, seed_problem->default_initial_point(tf0)));
    };
    attempts.push_back(straight(base));
    if (auto steered = steering_guess(maneuver)) attempts.push_back(*steered);
    for (double factor : {0.75, 1.5, 2.0, 3.0}) attempts.push_back(straight(base * factor));
    // The unstructured problem has several local minima; keep the shortest
    // horizon over all starts, then refine from it.
    std::optional<DiscreteSolution> best;
    double best_tf = 0.0;
    for (const auto& [tf0, guess] : attempts) {
      try {
        int its = 0;
        DiscreteSolution sol = solve_collocation(
            *seed_problem, seed_problem->initial_point(guess, {tf0}), options, nullptr, &its);
        rep.nlp_iterations += its;
        const double tf = seed_problem->final_time(sol.x);
        log(fmt::format("  start tf={:.3f}: tf {:.8f}, {} iterations", tf0, tf, its));
        if (!best || tf < best_tf) {
          best = std::move(sol);
          best_tf = tf;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSolver) throw;
        last_error = e.what();
        log(fmt::format("  start tf={:.3f} failed: {}", tf0, e.what()));
      }
    }
    if (best) {
      initial = refine_loop(maneuver, nullptr, seed_mesh, 0.0,
                            guess_from(seed_problem, best->x), {best_tf}, options,
                            options.initial_refinements, "unstructured", rep.mesh_history,
                            rep.nlp_iterations, &*best);
      solved = true;
    }
    if (!solved) throw Error(ErrorCode::kSolver, last_error);
    record_best(initial.problem, initial.solution);

    stage = "detection";
    Trajectory nodes = node_trajectory(*initial.problem, initial.solution);
    ControlStructure structure = detect_structure(nodes, maneuver.model, options.detection);
    log(fmt::format("  structure: {}", structure.describe()));

    RegularizedSolve reg;
    for (int attempt = 0; attempt < 2; ++attempt) {
      stage = "structured";
      const double tf = structure.final_time;
      std::vector<double> edges{0.0};
      edges.insert(edges.end(), structure.breakpoints.begin(), structure.breakpoints.end());
      edges.push_back(1.0);
      std::vector<double> durations;
      for (std::size_t d = 0; d + 1 < edges.size(); ++d) {
        durations.push_back(tf * (edges[d + 1] - edges[d]));
      }
      const Mesh mesh = structured_mesh(structure, options.mesh_intervals, 4);
      const ProblemPtr source = result.problem;
      const Eigen::VectorXd xs = result.solution.x;
      reg = regularize_singular(maneuver, structure, mesh, guess_from(source, xs),
                                durations, options);
      rep.mesh_history.insert(rep.mesh_history.end(), reg.history.begin(),
                              reg.history.end());
      rep.nlp_iterations += reg.nlp_iterations;
      record_best(reg.problem, reg.solution);

      stage = "redetection";
      const Trajectory again = penalized_switching(
          *reg.problem, reg.solution.x, node_trajectory(*reg.problem, reg.solution));
      const ControlStructure second = detect_structure(again, maneuver.model, options.detection);
      rep.idempotent = same_structure(structure, second);
      if (rep.idempotent) break;
      log(fmt::format("  structure changed on re-detection: {}", second.describe()));
      structure = second;
    }
    if (!rep.idempotent) {
      throw Error(ErrorCode::kStructure, "structure did not settle after re-detection");
    }

    stage = "verification";
    const auto& problem = *result.problem;
    const std::vector<double> bounds = problem.domain_boundaries(result.solution.x);
    rep.final_time = bounds.back();
    structure.final_time = rep.final_time;
    // Arc fractions of the optimized boundaries.
    for (std::size_t b = 1; b + 1 < bounds.size(); ++b) {
      const double old = structure.breakpoints[b - 1];
      const double now = bounds[b] / rep.final_time;
      for (auto& list : structure.arcs) {
        for (auto& arc : list) {
          if (arc.start_fraction == old) arc.start_fraction = now;
          if (arc.end_fraction == old) arc.end_fraction = now;
        }
      }
      structure.breakpoints[b - 1] = now;
      rep.switch_times.push_back(bounds[b]);
      rep.switch_controls.push_back(structure.breakpoint_control[b - 1]);
    }
    rep.structure = structure;
    rep.regularization = reg.record;
    result.nodes = node_trajectory(problem, result.solution);
    result.trajectory = dense_trajectory(problem, result.solution, options.dense_samples);
    rep.pmp = pmp_residuals(maneuver, result.nodes);
    rep.success = true;
  } catch (const Error& e) {
    rep.success = false;
    rep.failed_stage = stage;
    rep.message = e.what();
    if (result.problem) {
      try {
        result.nodes = node_trajectory(*result.problem, result.solution);
        result.trajectory =
            dense_trajectory(*result.problem, result.solution, options.dense_samples);
      } catch (const Error&) {
      }
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace reorient
