#include "reorient/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "reorient/errors.hpp"
#include "reorient/mesh.hpp"

namespace reorient {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kConfig, fmt::format("bad value '{}' for key '{}'", value, key));
}

double to_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) bad_value(key, text);
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  text = trim(text);
  int v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) bad_value(key, text);
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  bad_value(key, text);
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> to_optional(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text.empty() || text == "default") return std::nullopt;
  return to_double(key, text);
}

std::string optional_text(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : "default";
}

}  // namespace

void RunConfig::validate() const {
  if (maneuver.empty()) throw Error(ErrorCode::kConfig, "maneuver name is empty");
  if (!(eps_mesh > 0.0) || !(eps_nlp > 0.0)) {
    throw Error(ErrorCode::kConfig, "tolerances must be positive");
  }
  if (!(reg_epsilon > 0.0) || !(reg_reduction > 1.0) || !(reg_delta > 0.0) ||
      reg_max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "regularization schedule is invalid");
  }
  if (mesh_points < kMinMeshPoints || mesh_points > kMaxMeshPoints) {
    throw Error(ErrorCode::kConfig,
                fmt::format("mesh_points must lie in [{}, {}]", kMinMeshPoints, kMaxMeshPoints));
  }
  if (mesh_intervals < 1 || max_refinements < 0 || nlp_max_iterations < 1) {
    throw Error(ErrorCode::kConfig, "mesh and iteration counts must be positive");
  }
  if (samples < 2) throw Error(ErrorCode::kConfig, "samples must be at least 2");
  if (u_min && u_max && !(*u_min < *u_max)) {
    throw Error(ErrorCode::kConfig, "umin must be below umax");
  }
  if (!(verify_residual > 0.0) || !(verify_final_time > 0.0) || !(verify_state > 0.0) ||
      !(verify_replay > 0.0)) {
    throw Error(ErrorCode::kConfig, "verification limits must be positive");
  }
  if (out_dir.empty()) throw Error(ErrorCode::kConfig, "output directory is empty");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "maneuver") {
    c.maneuver = std::string(value);
  } else if (key == "torque_mode") {
    if (value == "two") {
      c.torque_mode = TorqueMode::kTwoTorque;
    } else if (value == "three") {
      c.torque_mode = TorqueMode::kThreeTorque;
    } else if (value == "default" || value.empty()) {
      c.torque_mode.reset();
    } else {
      bad_value(key, value);
    }
  } else if (key == "umin") {
    c.u_min = to_optional(key, value);
  } else if (key == "umax") {
    c.u_max = to_optional(key, value);
  } else if (key == "a") {
    c.a = to_optional(key, value);
  } else if (key == "initial") {
    if (value == "default" || value.empty()) {
      c.initial.reset();
      return;
    }
    const auto parts = split_list(value);
    if (parts.size() != kNumStates) bad_value(key, value);
    Vec5 v;
    for (int i = 0; i < kNumStates; ++i) v[i] = to_double(key, parts[i]);
    c.initial = State::from(v);
  } else if (key == "terminal") {
    if (value == "default" || value.empty()) {
      c.terminal.reset();
      return;
    }
    const auto parts = split_list(value);
    if (parts.size() != kNumStates) bad_value(key, value);
    TerminalSpec spec;
    for (int i = 0; i < kNumStates; ++i) {
      if (parts[i] != "free") spec[i] = to_double(key, parts[i]);
    }
    c.terminal = spec;
  } else if (key == "mesh_intervals") {
    c.mesh_intervals = to_int(key, value);
  } else if (key == "mesh_points") {
    c.mesh_points = to_int(key, value);
  } else if (key == "eps_mesh") {
    c.eps_mesh = to_double(key, value);
  } else if (key == "eps_nlp") {
    c.eps_nlp = to_double(key, value);
  } else if (key == "max_refinements") {
    c.max_refinements = to_int(key, value);
  } else if (key == "nlp_max_iterations") {
    c.nlp_max_iterations = to_int(key, value);
  } else if (key == "reg_epsilon") {
    c.reg_epsilon = to_double(key, value);
  } else if (key == "reg_reduction") {
    c.reg_reduction = to_double(key, value);
  } else if (key == "reg_delta") {
    c.reg_delta = to_double(key, value);
  } else if (key == "reg_max_iterations") {
    c.reg_max_iterations = to_int(key, value);
  } else if (key == "samples") {
    c.samples = to_int(key, value);
  } else if (key == "verify") {
    c.verify = to_bool(key, value);
  } else if (key == "verify_residual") {
    c.verify_residual = to_double(key, value);
  } else if (key == "verify_final_time") {
    c.verify_final_time = to_double(key, value);
  } else if (key == "verify_state") {
    c.verify_state = to_double(key, value);
  } else if (key == "verify_replay") {
    c.verify_replay = to_double(key, value);
  } else if (key == "out") {
    c.out_dir = std::string(value);
  } else {
    throw Error(ErrorCode::kConfig, fmt::format("unknown key '{}'", key));
  }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    l = trim(l.substr(0, l.find('#')));
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') {
        throw Error(ErrorCode::kConfig, fmt::format("line {}: bad section header", line_no));
      }
      section = std::string(trim(l.substr(1, l.size() - 2)));
      continue;
    }
    if (!section.empty() && section != "config") continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: expected key = value", line_no));
    }
    apply_setting(base, l.substr(0, eq), l.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, fmt::format("cannot read config '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string config_text(const RunConfig& c) {
  std::string out;
  auto add = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  add("maneuver", c.maneuver);
  add("torque_mode", c.torque_mode ? std::string(to_string(*c.torque_mode)) : "default");
  add("umin", optional_text(c.u_min));
  add("umax", optional_text(c.u_max));
  add("a", optional_text(c.a));
  if (c.initial) {
    const Vec5 v = c.initial->vec();
    add("initial", fmt::format("{},{},{},{},{}", v[0], v[1], v[2], v[3], v[4]));
  } else {
    add("initial", "default");
  }
  if (c.terminal) {
    std::string t;
    for (int i = 0; i < kNumStates; ++i) {
      if (i) t += ',';
      t += (*c.terminal)[i] ? fmt::format("{}", *(*c.terminal)[i]) : "free";
    }
    add("terminal", t);
  } else {
    add("terminal", "default");
  }
  add("mesh_intervals", fmt::format("{}", c.mesh_intervals));
  add("mesh_points", fmt::format("{}", c.mesh_points));
  add("eps_mesh", fmt::format("{}", c.eps_mesh));
  add("eps_nlp", fmt::format("{}", c.eps_nlp));
  add("max_refinements", fmt::format("{}", c.max_refinements));
  add("nlp_max_iterations", fmt::format("{}", c.nlp_max_iterations));
  add("reg_epsilon", fmt::format("{}", c.reg_epsilon));
  add("reg_reduction", fmt::format("{}", c.reg_reduction));
  add("reg_delta", fmt::format("{}", c.reg_delta));
  add("reg_max_iterations", fmt::format("{}", c.reg_max_iterations));
  add("samples", fmt::format("{}", c.samples));
  add("verify", c.verify ? "true" : "false");
  add("verify_residual", fmt::format("{}", c.verify_residual));
  add("verify_final_time", fmt::format("{}", c.verify_final_time));
  add("verify_state", fmt::format("{}", c.verify_state));
  add("verify_replay", fmt::format("{}", c.verify_replay));
  add("out", c.out_dir);
  return out;
}

Maneuver resolve_maneuver(const RunConfig& c) {
  c.validate();
  Maneuver m{c.maneuver, SpacecraftModel{0.0}, {}};
  const auto names = builtin_maneuver_names();
  const bool builtin = std::find(names.begin(), names.end(), c.maneuver) != names.end();
  if (builtin) {
    m = builtin_maneuver(c.maneuver);
  } else if (!c.a || !c.initial || !c.terminal) {
    throw Error(ErrorCode::kConfig,
                fmt::format("maneuver '{}' is not built in and needs a, initial and terminal",
                            c.maneuver));
  }
  const double a = c.a.value_or(m.model.a());
  const TorqueMode mode = c.torque_mode.value_or(m.model.torque_mode());
  const double lo = c.u_min.value_or(m.model.u_min());
  const double hi = c.u_max.value_or(m.model.u_max());
  if (!(lo < hi)) throw Error(ErrorCode::kConfig, "umin must be below umax");
  try {
    m.model = SpacecraftModel{a, lo, hi, mode};
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (c.initial) m.bc.initial = *c.initial;
  if (c.terminal) m.bc.terminal = *c.terminal;
  try {
    m.bc.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return m;
}

BbsocOptions solver_options(const RunConfig& c) {
  BbsocOptions o;
  o.mesh_intervals = c.mesh_intervals;
  o.mesh_points = c.mesh_points;
  o.eps_mesh = c.eps_mesh;
  o.eps_nlp = c.eps_nlp;
  o.max_refinements = c.max_refinements;
  o.nlp_max_iterations = c.nlp_max_iterations;
  o.schedule.initial_epsilon = c.reg_epsilon;
  o.schedule.reduction = c.reg_reduction;
  o.schedule.delta_tolerance = c.reg_delta;
  o.schedule.max_iterations = c.reg_max_iterations;
  o.dense_samples = c.samples;
  return o;
}

}  // namespace reorient
