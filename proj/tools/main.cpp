// Command-line front end: solve built-in or inline maneuvers and write
// trajectory.csv, report and plot/*.csv per run.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reorient/config.hpp"
#include "reorient/errors.hpp"
#include "reorient/run.hpp"

namespace {

using reorient::RunConfig;

nlohmann::json maneuver_json(const reorient::Maneuver& m) {
  nlohmann::json terminal = nlohmann::json::array();
  for (const auto& v : m.bc.terminal) {
    terminal.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  }
  const auto& y0 = m.bc.initial;
  return {{"name", m.name},
          {"a", m.model.a()},
          {"omega30", y0.omega3},
          {"torque_mode", std::string(reorient::to_string(m.model.torque_mode()))},
          {"umin", m.model.u_min()},
          {"umax", m.model.u_max()},
          {"initial", {y0.omega1, y0.omega2, y0.omega3, y0.x1, y0.x2}},
          {"terminal", terminal}};
}

void print_summary(const RunConfig& config, const reorient::RunOutcome& outcome) {
  std::cout << config.maneuver << ": ";
  if (outcome.result && outcome.result->report.success) {
    const auto& rep = outcome.result->report;
    std::cout << "tf = " << rep.final_time << ", " << rep.switch_times.size() << " switches";
    if (outcome.verification) {
      std::cout << ", verification " << (outcome.verification->passed ? "passed" : "failed");
    }
  } else {
    std::cout << "failed";
  }
  if (!outcome.error.empty()) std::cout << " (" << outcome.error << ")";
  std::cout << ", exit " << outcome.exit_code << ", output in " << config.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal spacecraft reorientation solver"};
  app.set_help_all_flag("--help-all");

  bool list = false;
  bool json = false;
  app.add_flag("--list", list, "List the built-in maneuvers and exit");
  app.add_flag("--json", json, "With --list, print JSON");

  auto* run_cmd = app.add_subcommand("run", "Solve one or more maneuvers");
  std::vector<std::string> maneuvers;
  std::string config_path;
  std::string torque_mode;
  double umax = 0.0;
  double umin = 0.0;
  int mesh_intervals = 0;
  int mesh_points = 0;
  double eps_mesh = 0.0;
  double eps_nlp = 0.0;
  bool verify = false;
  bool verbose = false;
  std::string out_dir;
  int jobs = 1;
  std::vector<std::string> settings;

  auto* opt_maneuver = run_cmd->add_option("--maneuver", maneuvers,
                                           "Maneuver name; repeat or comma-separate for several")
                           ->delimiter(',');
  run_cmd->add_option("--config", config_path, "Flat key = value config file")
      ->check(CLI::ExistingFile);
  auto* opt_torque = run_cmd->add_option("--torque-mode", torque_mode, "two or three")
                         ->check(CLI::IsMember({"two", "three"}));
  auto* opt_umax = run_cmd->add_option("--umax", umax, "Upper control bound");
  auto* opt_umin = run_cmd->add_option("--umin", umin, "Lower control bound");
  auto* opt_intervals =
      run_cmd->add_option("--mesh-intervals", mesh_intervals, "Initial mesh intervals");
  auto* opt_points =
      run_cmd->add_option("--mesh-points", mesh_points, "Collocation points per interval");
  auto* opt_eps_mesh = run_cmd->add_option("--eps-mesh", eps_mesh, "Mesh error tolerance");
  auto* opt_eps_nlp = run_cmd->add_option("--eps-nlp", eps_nlp, "NLP tolerance");
  auto* opt_verify = run_cmd->add_flag("--verify", verify, "Check against the indirect oracle");
  auto* opt_out = run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--jobs", jobs, "Maneuvers solved concurrently")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--set", settings, "Extra config entry key=value (repeatable)");
  run_cmd->add_flag("--verbose,-v", verbose, "Print solver progress to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : reorient::kExitConfig;
  }

  if (list) {
    if (json) {
      nlohmann::json all = nlohmann::json::array();
      for (const auto& name : reorient::builtin_maneuver_names()) {
        all.push_back(maneuver_json(reorient::builtin_maneuver(name)));
      }
      std::cout << all.dump(2) << "\n";
    } else {
      std::cout << reorient::list_maneuvers();
    }
    return reorient::kExitOk;
  }
  if (!run_cmd->parsed()) {
    std::cout << app.help();
    return reorient::kExitConfig;
  }

  RunConfig base;
  try {
    if (!config_path.empty()) base = reorient::load_config(config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw reorient::Error(reorient::ErrorCode::kConfig, "--set expects key=value");
      }
      reorient::apply_setting(base, s.substr(0, eq), s.substr(eq + 1));
    }
    if (opt_torque->count()) reorient::apply_setting(base, "torque_mode", torque_mode);
    if (opt_umax->count()) base.u_max = umax;
    if (opt_umin->count()) base.u_min = umin;
    if (opt_intervals->count()) base.mesh_intervals = mesh_intervals;
    if (opt_points->count()) base.mesh_points = mesh_points;
    if (opt_eps_mesh->count()) base.eps_mesh = eps_mesh;
    if (opt_eps_nlp->count()) base.eps_nlp = eps_nlp;
    if (opt_verify->count()) base.verify = verify;
    if (opt_out->count()) base.out_dir = out_dir;
    base.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return reorient::kExitConfig;
  }

  std::vector<RunConfig> configs;
  if (opt_maneuver->count() == 0) maneuvers = {base.maneuver};
  for (const auto& name : maneuvers) {
    RunConfig c = base;
    c.maneuver = name;
    if (maneuvers.size() > 1) c.out_dir = (std::filesystem::path(base.out_dir) / name).string();
    configs.push_back(std::move(c));
  }

  std::vector<reorient::RunOutcome> outcomes(configs.size());
  std::vector<std::string> logs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      if (verbose && configs.size() == 1) {
        outcomes[i] = reorient::run(configs[i], &std::cerr);
        continue;
      }
      std::ostringstream log;
      outcomes[i] = reorient::run(configs[i], verbose ? &log : nullptr);
      logs[i] = log.str();
    }
  };
  const int threads = std::min<int>(jobs, static_cast<int>(configs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int exit_code = reorient::kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (verbose) std::cerr << logs[i];
    if (outcomes[i].exit_code == reorient::kExitConfig) {
      std::cerr << "config error: " << outcomes[i].error << "\n";
    }
    print_summary(configs[i], outcomes[i]);
    exit_code = std::max(exit_code, outcomes[i].exit_code);
  }
  return exit_code;
}
