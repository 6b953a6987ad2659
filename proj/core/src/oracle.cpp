#include "reorient/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "reorient/pmp.hpp"

namespace reorient {

void IntegratorConfig::validate() const {
  auto ok = [](double v) { return v > 0.0 && v <= 1e-3; };
  if (!ok(rel_tol) || !ok(abs_tol)) {
    throw Error(ErrorCode::kConfig, "integrator tolerances must lie in (0, 1e-3]");
  }
  if (!(event_tol > 0.0) || max_step < 0.0 || max_steps < 1) {
    throw Error(ErrorCode::kConfig, "invalid integrator limits");
  }
}

namespace {

using Vec = Eigen::VectorXd;

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Step {
  Vec y1;
  Vec k7;
  Vec err;
  std::array<Vec, 7> k;
};

// One step from (t, y) with k1 = f(t, y) already known.
void rk_step(const OdeFunction& f, double t, const Vec& y, const Vec& k1, double h,
             Step& s) {
  auto& k = s.k;
  k[0] = k1;
  Vec tmp;
  tmp = y + h * a21 * k[0];
  f(t + c2 * h, tmp, k[1]);
  tmp = y + h * (a31 * k[0] + a32 * k[1]);
  f(t + c3 * h, tmp, k[2]);
  tmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
  f(t + c4 * h, tmp, k[3]);
  tmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
  f(t + c5 * h, tmp, k[4]);
  tmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
  f(t + h, tmp, k[5]);
  s.y1 = y + h * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] + a76 * k[5]);
  f(t + h, s.y1, k[6]);
  s.k7 = k[6];
  s.err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
}

struct Dense {
  double t0 = 0.0;
  double h = 0.0;
  Vec r1, r2, r3, r4, r5;

  Dense(double t, const Vec& y0, double step, const Step& s) : t0(t), h(step) {
    const auto& k = s.k;
    r1 = y0;
    r2 = s.y1 - y0;
    r3 = h * k[0] - r2;
    r4 = r2 - h * k[6] - r3;
    r5 = h * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
  }
  Vec operator()(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

}  // namespace

OdeSolution dopri5(const OdeFunction& f, double t0, const Eigen::VectorXd& y0, double t1,
                   const IntegratorConfig& config, const std::vector<EventFunction>& events) {
  config.validate();
  if (!(t1 > t0)) throw Error(ErrorCode::kDomain, "integration interval must be increasing");
  if (!y0.allFinite()) throw Error(ErrorCode::kDomain, "non-finite initial state");

  OdeSolution out;
  out.times.push_back(t0);
  out.states.push_back(y0);

  double t = t0;
  Vec y = y0;
  Vec k1;
  f(t, y, k1);

  auto err_scale = [&](const Vec& a, const Vec& b) {
    return (config.abs_tol + config.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };
  // Initial step, Hairer's heuristic.
  double h;
  {
    const Vec sc = err_scale(y, y);
    const double dn0 = std::sqrt(y.cwiseQuotient(sc).squaredNorm() / y.size());
    const double dn1 = std::sqrt(k1.cwiseQuotient(sc).squaredNorm() / y.size());
    h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h = std::min(h, t1 - t0);
    if (config.max_step > 0.0) h = std::min(h, config.max_step);
  }

  std::vector<double> ev_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) ev_prev[e] = events[e](t, y);

  Step s;
  const double h_min_rel = 16.0 * std::numeric_limits<double>::epsilon();
  while (t < t1) {
    if (out.accepted_steps + out.rejected_steps >= config.max_steps) {
      throw Error(ErrorCode::kSolver, "integrator exceeded the step limit");
    }
    const bool last = t + h >= t1 - h_min_rel * std::abs(t1);
    if (last) h = t1 - t;
    if (h <= h_min_rel * std::max(1.0, std::abs(t))) {
      throw Error(ErrorCode::kSolver, fmt::format("integrator step underflow at t = {}", t));
    }
    rk_step(f, t, y, k1, h, s);
    const Vec sc = err_scale(y, s.y1);
    const double err = std::sqrt(s.err.cwiseQuotient(sc).squaredNorm() / y.size());
    if (!std::isfinite(err) || err > 1.0) {
      ++out.rejected_steps;
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= fac;
      continue;
    }
    ++out.accepted_steps;
    const double t_new = last ? t1 : t + h;

    // Events on this step.
    int fired = -1;
    double t_hit = t_new;
    const Dense dense(t, y, h, s);
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double g1 = events[e](t_new, s.y1);
      const double g0 = ev_prev[e];
      if (!(g0 != 0.0 && (g0 * g1 < 0.0 || g1 == 0.0))) continue;
      // Illinois variant of regula falsi on the dense output.
      double ta = t, tb = t_new, ga = g0, gb = g1;
      int side = 0;
      while (tb - ta > config.event_tol) {
        double tm = (ta * gb - tb * ga) / (gb - ga);
        if (!(tm > ta && tm < tb)) tm = 0.5 * (ta + tb);
        const double gm = events[e](tm, dense(tm));
        if (gm == 0.0) {
          ta = tb = tm;
          break;
        }
        if (gm * ga < 0.0) {
          tb = tm;
          gb = gm;
          if (side == -1) ga *= 0.5;
          side = -1;
        } else {
          ta = tm;
          ga = gm;
          if (side == 1) gb *= 0.5;
          side = 1;
        }
      }
      if (tb < t_hit) {
        t_hit = tb;
        fired = static_cast<int>(e);
      }
    }
    if (fired >= 0) {
      out.event_index = fired;
      out.times.push_back(t_hit);
      out.states.push_back(t_hit == t_new ? s.y1 : dense(t_hit));
      return out;
    }

    t = t_new;
    y = s.y1;
    k1 = s.k7;
    for (std::size_t e = 0; e < events.size(); ++e) ev_prev[e] = events[e](t, y);
    out.times.push_back(t);
    out.states.push_back(y);

    const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= fac;
    if (config.max_step > 0.0) h = std::min(h, config.max_step);
  }
  return out;
}

Eigen::VectorXd dopri5_fixed(const OdeFunction& f, double t0, const Eigen::VectorXd& y0,
                             double t1, int steps) {
  if (steps < 1) throw Error(ErrorCode::kDomain, "need at least one step");
  const double h = (t1 - t0) / steps;
  Vec y = y0;
  Vec k1;
  Step s;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    f(t, y, k1);
    rk_step(f, t, y, k1, h, s);
    y = s.y1;
  }
  return y;
}

namespace {

Control clamp_control(const SpacecraftModel& model, Control u) {
  for (int j = 0; j < kNumControls; ++j) {
    u[j] = model.control_active(j) ? std::clamp(u[j], model.u_min(), model.u_max()) : 0.0;
  }
  return u;
}

// Sorted breakpoints strictly inside (t0, t1), with both ends added.
std::vector<double> segment_edges(std::vector<double> cuts, double t0, double t1) {
  std::vector<double> edges{t0};
  std::sort(cuts.begin(), cuts.end());
  for (double b : cuts) {
    if (b > edges.back() && b < t1) edges.push_back(b);
  }
  edges.push_back(t1);
  return edges;
}

double before(double t) { return std::nextafter(t, -std::numeric_limits<double>::infinity()); }

}  // namespace

ControlPolicy sampled_policy(const SpacecraftModel& model, const Trajectory& trajectory) {
  if (trajectory.points.size() < 2) {
    throw Error(ErrorCode::kDomain, "a sampled policy needs two samples");
  }
  ControlPolicy policy;
  const auto& pts = trajectory.points;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].t == pts[i - 1].t) policy.breakpoints.push_back(pts[i].t);
  }
  policy.law = [model, pts](double t, const State&) {
    if (t <= pts.front().t) return clamp_control(model, pts.front().u);
    if (t >= pts.back().t) return clamp_control(model, pts.back().u);
    auto it = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double v, const TrajectoryPoint& p) { return v < p.t; });
    const auto& p1 = *it;
    const auto& p0 = *(it - 1);
    const double s = (t - p0.t) / (p1.t - p0.t);
    return clamp_control(model, Control::from((1.0 - s) * p0.u.vec() + s * p1.u.vec()));
  };
  return policy;
}

namespace {

// Control of every active component under a bang structure, given the
// per-breakpoint switch times.
struct BangSchedule {
  SpacecraftModel model;
  ControlStructure structure;
  std::vector<double> times;

  Control at(double t) const {
    Control u;
    for (int j = 0; j < kNumControls; ++j) {
      const auto& arcs = structure.arcs[j];
      if (arcs.empty() || !model.control_active(j)) continue;
      std::size_t count = 0;
      for (std::size_t b = 0; b < times.size(); ++b) {
        if (structure.breakpoint_control[b] == j && times[b] <= t) ++count;
      }
      count = std::min(count, arcs.size() - 1);
      u[j] = arcs[count].kind == ArcKind::kBangMin ? model.u_min() : model.u_max();
    }
    return u;
  }
};

BangSchedule make_schedule(const SpacecraftModel& model, const ControlStructure& structure,
                           const std::vector<double>& switch_times) {
  if (switch_times.size() != structure.breakpoints.size()) {
    throw Error(ErrorCode::kDomain, "one switch time per structure breakpoint is required");
  }
  for (const auto& arcs : structure.arcs) {
    for (const auto& arc : arcs) {
      if (arc.kind == ArcKind::kSingular) {
        throw Error(ErrorCode::kDomain, "bang schedule cannot contain singular arcs");
      }
    }
  }
  return BangSchedule{model, structure, switch_times};
}

}  // namespace

ControlPolicy bang_policy(const SpacecraftModel& model, const ControlStructure& structure,
                          const std::vector<double>& switch_times) {
  const BangSchedule sched = make_schedule(model, structure, switch_times);
  ControlPolicy policy;
  policy.breakpoints = switch_times;
  policy.law = [sched](double t, const State&) { return sched.at(t); };
  return policy;
}

Trajectory integrate(const SpacecraftModel& model, const State& y0, const ControlPolicy& policy,
                     double t0, double t1, const IntegratorConfig& config) {
  if (!policy.law) throw Error(ErrorCode::kDomain, "control policy has no law");
  const auto edges = segment_edges(policy.breakpoints, t0, t1);
  Trajectory traj;
  Vec y = y0.vec();
  for (std::size_t sgm = 0; sgm + 1 < edges.size(); ++sgm) {
    const double a = edges[sgm];
    const double b = edges[sgm + 1];
    // Stage times at the right edge still see this segment's control.
    const double last = before(b);
    auto law = [&](double t, const Vec& v) {
      return policy.law(std::min(t, last), State::from(v.head<5>()));
    };
    const OdeFunction rhs = [&](double t, const Vec& v, Vec& dv) {
      dv = state_derivative(model, State::from(v.head<5>()), law(t, v));
    };
    const OdeSolution sol = dopri5(rhs, a, y, b, config);
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
      if (sgm > 0 && i == 0) {
        // Right-hand row at the breakpoint.
        traj.points.push_back({a, State::from(sol.states[0]), law(a, sol.states[0])});
        continue;
      }
      TrajectoryPoint p;
      p.t = sol.times[i];
      p.y = State::from(sol.states[i]);
      p.u = law(p.t, sol.states[i]);
      traj.points.push_back(p);
    }
    y = sol.final_state();
  }
  return traj;
}

namespace {

// Joint state-costate vector [y; lambda].
void extremal_rhs(const SpacecraftModel& model, const Control& u, const Vec& z, Vec& dz) {
  const State y = State::from(z.head<5>());
  const Costate lam = Costate::from(z.tail<5>());
  dz.resize(10);
  dz.head<5>() = state_derivative(model, y, u);
  dz.tail<5>() = costate_derivative(model, y, lam);
}

TrajectoryPoint extremal_point(double t, const Vec& z, const Control& u) {
  TrajectoryPoint p;
  p.t = t;
  p.y = State::from(z.head<5>());
  p.lam = Costate::from(z.tail<5>());
  p.u = u;
  return p;
}

}  // namespace

ExtremalResult integrate_extremal(const SpacecraftModel& model, const State& y0,
                                  const Costate& lam0, double t1,
                                  const IntegratorConfig& config) {
  ExtremalResult out;
  out.trajectory.has_costates = true;
  Vec z(10);
  z << y0.vec(), lam0.vec();
  auto pick = [&](double g) { return g > 0.0 ? model.u_min() : model.u_max(); };
  Control u;
  for (int j = 0; j < kNumControls; ++j) {
    if (model.control_active(j)) u[j] = pick(z[5 + j]);
  }
  std::vector<EventFunction> events;
  std::vector<int> event_control;
  for (int j = 0; j < kNumControls; ++j) {
    if (!model.control_active(j)) continue;
    events.push_back([j](double, const Vec& v) { return v[5 + j]; });
    event_control.push_back(j);
  }
  double t = 0.0;
  while (t < t1) {
    const OdeFunction rhs = [&](double, const Vec& v, Vec& dv) { extremal_rhs(model, u, v, dv); };
    const OdeSolution sol = dopri5(rhs, t, z, t1, config, events);
    const std::size_t first = out.trajectory.points.empty() ? 0 : 1;
    if (first == 1) out.trajectory.points.push_back(extremal_point(t, z, u));
    for (std::size_t i = first; i < sol.times.size(); ++i) {
      out.trajectory.points.push_back(extremal_point(sol.times[i], sol.states[i], u));
    }
    t = sol.final_time();
    z = sol.final_state();
    if (sol.event_index < 0) break;
    const int j = event_control[sol.event_index];
    out.switch_times.push_back(t);
    out.switch_controls.push_back(j);
    u[j] = u[j] == model.u_min() ? model.u_max() : model.u_min();
  }
  out.trajectory.refresh_costate_fields(model);
  return out;
}

namespace {

struct ShootingRun {
  Vec residual;
  Trajectory trajectory;
};

ShootingRun run_shooting(const ShootingSpec& spec, const ShootingGuess& guess,
                         const IntegratorConfig& config, bool keep_trajectory) {
  const auto& model = spec.maneuver.model;
  const auto& bc = spec.maneuver.bc;
  const double tf = guess.final_time;
  if (!(tf > 0.0) || !std::isfinite(tf)) {
    throw Error(ErrorCode::kDomain, "shooting final time must be positive");
  }
  std::vector<double> times = guess.switch_times;
  for (double& s : times) s = std::clamp(s, 0.0, tf);
  const BangSchedule sched = make_schedule(model, spec.structure, times);

  // Integrate across every distinct switch time, recording the joint state
  // at each switch.
  std::vector<double> cuts = times;
  const auto edges = segment_edges(cuts, 0.0, tf);
  Vec z(10);
  z << bc.initial.vec(), guess.initial_costate.vec();
  ShootingRun run;
  run.trajectory.has_costates = true;
  std::vector<std::pair<double, Vec>> marks{{0.0, z}};
  for (std::size_t sgm = 0; sgm + 1 < edges.size(); ++sgm) {
    const double a = edges[sgm];
    const double b = edges[sgm + 1];
    const Control u = sched.at(0.5 * (a + b));
    const OdeFunction rhs = [&](double, const Vec& v, Vec& dv) { extremal_rhs(model, u, v, dv); };
    const OdeSolution sol = dopri5(rhs, a, z, b, config);
    if (keep_trajectory) {
      for (std::size_t i = 0; i < sol.times.size(); ++i) {
        run.trajectory.points.push_back(extremal_point(sol.times[i], sol.states[i], u));
      }
    }
    z = sol.final_state();
    marks.emplace_back(b, z);
  }
  auto state_at_mark = [&](double t) -> const Vec& {
    for (const auto& [tm, zm] : marks) {
      if (tm == t) return zm;
    }
    return t >= tf ? marks.back().second : marks.front().second;
  };

  const int k = static_cast<int>(times.size());
  run.residual.resize(kNumStates + k + 1);
  for (int i = 0; i < kNumStates; ++i) {
    const bool frozen = i == 2 && model.torque_mode() == TorqueMode::kTwoTorque;
    if (bc.terminal[i] && !frozen) {
      run.residual[i] = z[i] - *bc.terminal[i];
    } else {
      run.residual[i] = z[5 + i];
    }
  }
  for (int s = 0; s < k; ++s) {
    const int j = spec.structure.breakpoint_control[s];
    run.residual[kNumStates + s] = state_at_mark(times[s])[5 + j];
  }
  const State yf = State::from(z.head<5>());
  const Costate lf = Costate::from(z.tail<5>());
  run.residual[kNumStates + k] = hamiltonian(model, yf, sched.at(before(tf)), lf) + 1.0;
  if (keep_trajectory) run.trajectory.refresh_costate_fields(model);
  return run;
}

Vec pack(const ShootingGuess& g) {
  const int k = static_cast<int>(g.switch_times.size());
  Vec p(kNumStates + k + 1);
  p.head<5>() = g.initial_costate.vec();
  for (int s = 0; s < k; ++s) p[5 + s] = g.switch_times[s];
  p[5 + k] = g.final_time;
  return p;
}

ShootingGuess unpack(const Vec& p, int k) {
  ShootingGuess g;
  g.initial_costate = Costate::from(p.head<5>());
  g.switch_times.assign(p.data() + 5, p.data() + 5 + k);
  g.final_time = p[5 + k];
  return g;
}

}  // namespace

ShootingGuess guess_from_direct(const Trajectory& direct, const std::vector<double>& switch_times) {
  if (direct.empty() || !direct.has_costates) {
    throw Error(ErrorCode::kDomain, "shooting must be seeded from a solution with costates");
  }
  ShootingGuess g;
  g.initial_costate = direct.points.front().lam;
  g.switch_times = switch_times;
  g.final_time = direct.final_time();
  return g;
}

Eigen::VectorXd shooting_residual(const ShootingSpec& spec, const ShootingGuess& guess,
                                  const IntegratorConfig& config) {
  return run_shooting(spec, guess, config, false).residual;
}

NewtonShooting solve_shooting(const ResidualFunction& residual_fn, const Eigen::VectorXd& start,
                              const ShootingConfig& config) {
  NewtonShooting res;
  Vec p = start;
  auto residual = [&](const Vec& q) -> Vec {
    try {
      return residual_fn(q);
    } catch (const Error&) {
      return Vec(Vec::Constant(q.size(), std::numeric_limits<double>::infinity()));
    }
  };
  Vec r = residual(p);
  if (r.size() != p.size()) {
    throw Error(ErrorCode::kDomain, "shooting residual and unknowns differ in size");
  }
  if (!r.allFinite()) throw Error(ErrorCode::kSolver, "shooting residual is not finite at the guess");

  for (res.iterations = 0; res.iterations < config.max_iterations; ++res.iterations) {
    if (r.norm() <= config.tolerance) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd jac(r.size(), p.size());
    for (int i = 0; i < p.size(); ++i) {
      const double h = config.fd_step * std::max(1.0, std::abs(p[i]));
      Vec pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      jac.col(i) = (residual(pp) - residual(pm)) / (2.0 * h);
    }
    if (!jac.allFinite()) {
      res.message = "sensitivities are not finite";
      break;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec sv = svd.singularValues();
    res.condition = sv[0] / std::max(sv[sv.size() - 1], std::numeric_limits<double>::min());
    if (sv[sv.size() - 1] <= config.rank_tolerance * sv[0]) {
      res.rank_deficient = true;
      res.message = fmt::format(
          "shooting Jacobian is rank deficient (condition {:.2e}); the structure may be wrong",
          res.condition);
      break;
    }
    const Vec dp = -svd.solve(r);
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vec trial = p + alpha * dp;
      const Vec rt = residual(trial);
      if (rt.allFinite() && rt.norm() < (1.0 - 1e-4 * alpha) * r.norm()) {
        p = trial;
        r = rt;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) {
      res.message = fmt::format("shooting residual stalled at {:.3e}", r.norm());
      break;
    }
  }
  if (!res.converged && res.message.empty()) {
    res.message = fmt::format("shooting did not converge in {} iterations (residual {:.3e})",
                              config.max_iterations, r.norm());
  }
  res.residual_norm = r.norm();
  res.unknowns = p;
  return res;
}

ShootingResult shoot(const ShootingSpec& spec, const ShootingGuess& guess,
                     const ShootingConfig& config) {
  spec.structure.validate();
  const int k = static_cast<int>(guess.switch_times.size());
  if (k != static_cast<int>(spec.structure.breakpoints.size())) {
    throw Error(ErrorCode::kDomain, "guess and structure disagree on the number of switches");
  }
  const NewtonShooting n = solve_shooting(
      [&](const Vec& q) {
        return run_shooting(spec, unpack(q, k), config.integrator, false).residual;
      },
      pack(guess), config);
  ShootingResult res;
  res.converged = n.converged;
  res.rank_deficient = n.rank_deficient;
  res.residual_norm = n.residual_norm;
  res.iterations = n.iterations;
  res.condition = n.condition;
  res.message = n.message;
  res.solution = unpack(n.unknowns, k);
  res.trajectory = run_shooting(spec, res.solution, config.integrator, true).trajectory;
  return res;
}

DiscrepancyReport cross_validate(const SpacecraftModel& model, const Trajectory& direct,
                                 const Trajectory& indirect,
                                 const std::vector<double>& direct_switches,
                                 const std::vector<double>& indirect_switches, int grid) {
  if (direct.empty() || indirect.empty()) throw Error(ErrorCode::kDomain, "empty trajectory");
  if (grid < 2) throw Error(ErrorCode::kDomain, "comparison grid needs two points");
  DiscrepancyReport rep;
  const double t0 = std::max(direct.initial_time(), indirect.initial_time());
  const double t1 = std::min(direct.final_time(), indirect.final_time());
  for (int i = 0; i < grid; ++i) {
    const double t = t0 + (t1 - t0) * i / (grid - 1);
    const Vec5 d = direct.state_at(model, t).vec() - indirect.state_at(model, t).vec();
    rep.max_state_discrepancy = std::max(rep.max_state_discrepancy, d.cwiseAbs().maxCoeff());
  }
  rep.final_time_delta = std::abs(direct.final_time() - indirect.final_time());
  const std::size_t n = std::min(direct_switches.size(), indirect_switches.size());
  for (std::size_t i = 0; i < n; ++i) {
    rep.switch_time_deltas.push_back(std::abs(direct_switches[i] - indirect_switches[i]));
    rep.max_switch_time_delta = std::max(rep.max_switch_time_delta, rep.switch_time_deltas.back());
  }
  return rep;
}

}  // namespace reorient
