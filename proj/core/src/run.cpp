#include "reorient/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "reorient/errors.hpp"

namespace reorient {

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{}", values[i]);
  }
  return out;
}

std::string terminal_text(const TerminalSpec& spec) {
  std::string out;
  for (int i = 0; i < kNumStates; ++i) {
    if (i) out += ',';
    out += spec[i] ? fmt::format("{}", *spec[i]) : "free";
  }
  return out;
}

}  // namespace

VerificationReport verify_solution(const Maneuver& maneuver, const BbsocResult& result,
                                   const VerificationThresholds& thresholds) {
  VerificationReport v;
  const auto& rep = result.report;
  const auto& model = maneuver.model;
  const double tf = rep.final_time;

  const Trajectory replay = integrate(model, maneuver.bc.initial,
                                      sampled_policy(model, result.trajectory), 0.0, tf);
  const Vec5 yf = replay.points.back().y.vec();
  for (int i = 0; i < kNumStates; ++i) {
    if (maneuver.bc.terminal[i]) {
      v.replay_terminal_error =
          std::max(v.replay_terminal_error, std::abs(yf[i] - *maneuver.bc.terminal[i]));
    }
  }
  bool ok = v.replay_terminal_error <= thresholds.replay_terminal;
  if (!ok) v.notes.push_back("replayed controls miss the terminal state");

  if (rep.structure.has_singular()) {
    v.notes.push_back("shooting skipped: the structure has a singular arc");
  } else {
    v.shooting_attempted = true;
    const ShootingSpec spec{maneuver, rep.structure};
    const ShootingResult s =
        shoot(spec, guess_from_direct(result.trajectory, rep.switch_times));
    v.discrepancy = cross_validate(model, result.trajectory, s.trajectory, rep.switch_times,
                                   s.solution.switch_times);
    if (!s.converged || s.residual_norm > thresholds.shooting_residual) {
      ok = false;
      v.notes.push_back("shooting did not converge: " + s.message);
    } else if (v.discrepancy->final_time_delta > thresholds.final_time ||
               v.discrepancy->max_state_discrepancy > thresholds.state) {
      ok = false;
      v.notes.push_back("direct and indirect solutions disagree");
    }
    v.shooting = s;
  }
  v.passed = ok;
  return v;
}

void export_trajectory(const Trajectory& trajectory, const std::string& path) {
  auto out = open_output(path);
  out << "t,omega1,omega2,omega3,x1,x2,u1,u2,u3,lam1,lam2,lam3,lam4,lam5,g1,g2,g3,H\n";
  for (const auto& p : trajectory.points) {
    const Vec5 y = p.y.vec();
    const Vec5 l = p.lam.vec();
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", p.t, y[0],
                       y[1], y[2], y[3], y[4], p.u.u1, p.u.u2, p.u.u3, l[0], l[1], l[2], l[3],
                       l[4], p.g[0], p.g[1], p.g[2], p.hamiltonian);
  }
  if (!out) throw Error(ErrorCode::kIo, fmt::format("write to '{}' failed", path));
}

void export_plot_series(const Trajectory& trajectory, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}", dir, ec.message()));
  const auto path = [&dir](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  auto controls = open_output(path("controls.csv"));
  auto switching = open_output(path("switching.csv"));
  auto rates = open_output(path("rates.csv"));
  auto plane = open_output(path("xplane.csv"));
  controls << "t,u1,u2,u3\n";
  switching << "t,g1,g2,g3\n";
  rates << "t,omega1,omega2,omega3\n";
  plane << "x1,x2\n";
  for (const auto& p : trajectory.points) {
    controls << fmt::format("{},{},{},{}\n", p.t, p.u.u1, p.u.u2, p.u.u3);
    switching << fmt::format("{},{},{},{}\n", p.t, p.g[0], p.g[1], p.g[2]);
    rates << fmt::format("{},{},{},{}\n", p.t, p.y.omega1, p.y.omega2, p.y.omega3);
    plane << fmt::format("{},{}\n", p.y.x1, p.y.x2);
  }
}

std::string format_report(const RunConfig& config, const RunOutcome& outcome) {
  std::string out;
  auto add = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  out += "[summary]\n";
  add("maneuver", config.maneuver);
  add("exit_code", fmt::format("{}", outcome.exit_code));
  if (!outcome.error.empty()) add("error", outcome.error);
  if (outcome.maneuver) {
    const auto& m = *outcome.maneuver;
    add("torque_mode", std::string(to_string(m.model.torque_mode())));
    add("a", fmt::format("{}", m.model.a()));
    add("bounds", fmt::format("{},{}", m.model.u_min(), m.model.u_max()));
    add("initial", join({m.bc.initial.omega1, m.bc.initial.omega2, m.bc.initial.omega3,
                         m.bc.initial.x1, m.bc.initial.x2}));
    add("terminal", terminal_text(m.bc.terminal));
  }
  if (outcome.result) {
    const auto& rep = outcome.result->report;
    add("success", rep.success ? "true" : "false");
    if (!rep.failed_stage.empty()) add("failed_stage", rep.failed_stage);
    if (!rep.message.empty()) add("message", rep.message);
    add("tf", fmt::format("{}", rep.final_time));
    add("nlp_iterations", fmt::format("{}", rep.nlp_iterations));
    add("wall_seconds", fmt::format("{:.3f}", rep.wall_seconds));
    add("structure", rep.structure.describe());
    add("idempotent", rep.idempotent ? "true" : "false");
    if (const auto onset = rep.singular_onset()) add("singular_onset", fmt::format("{}", *onset));

    out += "\n[switches]\n";
    add("times", join(rep.switch_times));
    std::string controls;
    for (std::size_t i = 0; i < rep.switch_controls.size(); ++i) {
      if (i) controls += ',';
      controls += fmt::format("u{}", rep.switch_controls[i] + 1);
    }
    add("controls", controls);
    for (int j = 0; j < kNumControls; ++j) {
      std::vector<double> own;
      for (std::size_t i = 0; i < rep.switch_times.size(); ++i) {
        if (rep.switch_controls[i] == j) own.push_back(rep.switch_times[i]);
      }
      add(fmt::format("u{}", j + 1), join(own));
    }

    out += "\n[regularization]\n";
    add("epsilon", fmt::format("{}", rep.regularization.epsilon));
    add("delta", fmt::format("{}", rep.regularization.delta));
    add("p", fmt::format("{}", rep.regularization.p));
    add("history", join(rep.regularization.history));

    if (rep.pmp) {
      const auto& r = *rep.pmp;
      out += "\n[pmp]\n";
      add("hamiltonian_error", fmt::format("{}", r.hamiltonian_error));
      add("hamiltonian_variation", fmt::format("{}", r.hamiltonian_variation));
      add("costate_defect", fmt::format("{}", r.costate_defect));
      add("transversality_error", fmt::format("{}", r.transversality_error));
      add("switching_consistency", fmt::format("{}", r.switching_consistency));
      add("legendre_clebsch_min",
          r.legendre_clebsch_min ? fmt::format("{}", *r.legendre_clebsch_min) : "none");
      add("singular_samples", fmt::format("{}", r.singular_samples));
    }

    out += "\n[mesh]\n";
    for (std::size_t i = 0; i < rep.mesh_history.size(); ++i) {
      const auto& s = rep.mesh_history[i];
      add(fmt::format("round{}", i),
          fmt::format("{} domains={} intervals={} points={} error={:.3e} tf={} iterations={}",
                      s.stage, s.domains, s.intervals, s.points, s.max_error, s.final_time,
                      s.nlp_iterations));
    }
  }
  if (outcome.verification) {
    const auto& v = *outcome.verification;
    out += "\n[verification]\n";
    add("passed", v.passed ? "true" : "false");
    add("replay_terminal_error", fmt::format("{}", v.replay_terminal_error));
    if (v.shooting) {
      add("shooting_converged", v.shooting->converged ? "true" : "false");
      add("shooting_residual", fmt::format("{}", v.shooting->residual_norm));
      add("shooting_iterations", fmt::format("{}", v.shooting->iterations));
      add("shooting_tf", fmt::format("{}", v.shooting->solution.final_time));
      add("shooting_switches", join(v.shooting->solution.switch_times));
    }
    if (v.discrepancy) {
      add("max_state_discrepancy", fmt::format("{}", v.discrepancy->max_state_discrepancy));
      add("final_time_delta", fmt::format("{}", v.discrepancy->final_time_delta));
      add("max_switch_time_delta", fmt::format("{}", v.discrepancy->max_switch_time_delta));
    }
    for (std::size_t i = 0; i < v.notes.size(); ++i) add(fmt::format("note{}", i), v.notes[i]);
  }
  out += "\n[config]\n";
  out += config_text(config);
  return out;
}

RunOutcome run(const RunConfig& config, std::ostream* log) {
  RunOutcome outcome;
  std::filesystem::path dir;
  try {
    config.validate();
    outcome.maneuver = resolve_maneuver(config);
    dir = config.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      throw Error(ErrorCode::kConfig,
                  fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    }
  } catch (const std::exception& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = e.what();
    return outcome;
  }

  try {
    BbsocOptions options = solver_options(config);
    options.log = log;
    outcome.result = bbsoc_solve(*outcome.maneuver, options);
    if (!outcome.result->report.success) {
      outcome.exit_code = kExitSolver;
      outcome.error = fmt::format("{} stage failed: {}", outcome.result->report.failed_stage,
                                  outcome.result->report.message);
    } else if (config.verify) {
      const VerificationThresholds limits{config.verify_residual, config.verify_final_time,
                                          config.verify_state, config.verify_replay};
      outcome.verification = verify_solution(*outcome.maneuver, *outcome.result, limits);
      if (!outcome.verification->passed) {
        outcome.exit_code = kExitVerification;
        outcome.error = "verification failed";
      }
    }
  } catch (const Error& e) {
    outcome.exit_code = e.code() == ErrorCode::kConfig ? kExitConfig : kExitSolver;
    outcome.error = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = kExitSolver;
    outcome.error = e.what();
  }

  try {
    if (outcome.result && !outcome.result->trajectory.empty()) {
      export_trajectory(outcome.result->trajectory, (dir / "trajectory.csv").string());
      export_plot_series(outcome.result->trajectory, (dir / "plot").string());
    }
    auto out = open_output((dir / "report").string());
    out << format_report(config, outcome);
  } catch (const std::exception& e) {
    if (outcome.exit_code == kExitOk) outcome.exit_code = kExitSolver;
    if (outcome.error.empty()) outcome.error = e.what();
  }
  return outcome;
}

std::string list_maneuvers() {
  std::string out;
  for (const auto& name : builtin_maneuver_names()) {
    const Maneuver m = builtin_maneuver(name);
    const State& y0 = m.bc.initial;
    out += fmt::format(
        "{}\n  a = {}\n  omega30 = {}\n  torque_mode = {}\n  bounds = {},{}\n"
        "  initial = {}\n  terminal = {}\n",
        m.name, m.model.a(), y0.omega3, to_string(m.model.torque_mode()), m.model.u_min(),
        m.model.u_max(), join({y0.omega1, y0.omega2, y0.omega3, y0.x1, y0.x2}),
        terminal_text(m.bc.terminal));
  }
  return out;
}

}  // namespace reorient
