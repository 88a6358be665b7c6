// Copyright 2026 The Ballbot Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ballbot/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace ballbot::config {

namespace detail {
std::string_view preset_text(std::string_view name);
}  // namespace detail

namespace {

using Json = nlohmann::ordered_json;

constexpr double kDegToRad = M_PI / 180.0;

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path));
}

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
  require_object(j, path);
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("unknown key '{}'", child(path, key)));
    }
  }
}

const Json* find(const Json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& key, const std::string& path,
              std::optional<double> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v || v->is_null()) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("missing number '{}'", child(path, key)));
  }
  if (!v->is_number()) {
    throw ConfigError(fmt::format("'{}' must be a number", child(path, key)));
  }
  return v->get<double>();
}

std::optional<double> optional_number(const Json& j, const std::string& key,
                                      const std::string& path) {
  const Json* v = find(j, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number()) {
    throw ConfigError(fmt::format("'{}' must be a number or null", child(path, key)));
  }
  return v->get<double>();
}

int integer(const Json& j, const std::string& key, const std::string& path,
            std::optional<int> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v || v->is_null()) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("missing integer '{}'", child(path, key)));
  }
  if (!v->is_number_integer()) {
    throw ConfigError(fmt::format("'{}' must be an integer", child(path, key)));
  }
  return v->get<int>();
}

bool boolean(const Json& j, const std::string& key, const std::string& path,
             bool fallback) {
  const Json* v = find(j, key);
  if (!v || v->is_null()) return fallback;
  if (!v->is_boolean()) {
    throw ConfigError(fmt::format("'{}' must be true or false", child(path, key)));
  }
  return v->get<bool>();
}

std::string text(const Json& j, const std::string& key, const std::string& path,
                 std::optional<std::string> fallback = std::nullopt) {
  const Json* v = find(j, key);
  if (!v || v->is_null()) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("missing string '{}'", child(path, key)));
  }
  if (!v->is_string()) {
    throw ConfigError(fmt::format("'{}' must be a string", child(path, key)));
  }
  return v->get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& key,
                            const std::string& path) {
  const Json* v = find(j, key);
  if (!v || !v->is_array()) {
    throw ConfigError(fmt::format("'{}' must be an array of numbers", child(path, key)));
  }
  std::vector<double> out;
  for (const Json& e : *v) {
    if (!e.is_number()) {
      throw ConfigError(fmt::format("'{}' must be an array of numbers", child(path, key)));
    }
    out.push_back(e.get<double>());
  }
  return out;
}

const Json& object(const Json& j, const std::string& key, const std::string& path) {
  const Json* v = find(j, key);
  if (!v) throw ConfigError(fmt::format("missing section '{}'", child(path, key)));
  require_object(*v, child(path, key));
  return *v;
}

const Json& section_entry(const Document& doc, const std::string& section,
                          const std::string& name) {
  const Json* s = find(doc, section);
  if (!s || !s->is_object() || !s->contains(name)) {
    throw UnknownName(section, name, names(doc, section));
  }
  return (*s)[name];
}

std::optional<control::ControllerKind> controller_or_none(const std::string& name,
                                                          const std::string& path) {
  if (name == "none") return std::nullopt;
  try {
    return control::parse_controller_kind(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

control::ControllerKind controller(const std::string& name, const std::string& path) {
  const auto k = controller_or_none(name, path);
  if (!k) throw ConfigError(fmt::format("{}: a controller is required", path));
  return *k;
}

void merge_into(Json& base, const Json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

dynamics::PlanarState planar_state(const Json& j, const std::string& path) {
  check_keys(j, {"theta", "phi", "theta_dot", "phi_dot"}, path);
  return {number(j, "theta", path, 0.0), number(j, "phi", path, 0.0),
          number(j, "theta_dot", path, 0.0), number(j, "phi_dot", path, 0.0)};
}

std::shared_ptr<const trajopt::Trajectory> solve_task_trajectory(const Document& doc,
                                                                 const std::string& name) {
  const TaskConfig tc = task(doc, name);
  const trajopt::SolveResult sol =
      trajopt::optimize_braking(tc.wip, tc.task, tc.n_knots, tc.solver);
  return std::make_shared<const trajopt::Trajectory>(sol.trajectory);
}

}  // namespace

UnknownName::UnknownName(const std::string& section, const std::string& name,
                         std::vector<std::string> available)
    : ConfigError(fmt::format("unknown {} entry '{}' (available: {})", section, name,
                              join(available))),
      available_(std::move(available)) {}

std::vector<std::string> preset_names() { return {"miapure", "piptb", "lab"}; }

Document preset(std::string_view name) {
  const std::string_view text = detail::preset_text(name);
  if (text.empty()) throw UnknownName("preset", std::string(name), preset_names());
  return parse_document(text);
}

Document parse_document(std::string_view text) {
  try {
    return Document::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

Document resolve(Document doc) {
  require_object(doc, "document");
  Json* platforms = doc.contains("platforms") ? &doc["platforms"] : nullptr;
  if (!platforms) return doc;
  require_object(*platforms, "platforms");
  for (auto& [key, value] : platforms->items()) {
    const std::string path = "platforms." + key;
    if (value.is_string()) {
      value = preset(value.get<std::string>());
    } else if (value.is_object() && value.contains("preset")) {
      const Json& ref = value["preset"];
      if (!ref.is_string()) throw ConfigError(path + ".preset must be a string");
      Json base = preset(ref.get<std::string>());
      Json patch = value;
      patch.erase("preset");
      merge_into(base, patch);
      value = std::move(base);
    } else if (!value.is_object()) {
      throw ConfigError(path + " must be a preset name or an object");
    }
  }
  return doc;
}

void apply_override(Document& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  Json* node = &doc;
  std::string path;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const std::string seg =
        key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    path = child(path, seg);
    if (node->is_object()) {
      if (!node->contains(seg)) {
        throw ConfigError("override key '" + path + "' does not exist");
      }
      node = &(*node)[seg];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(seg, &used);
        if (used != seg.size()) throw std::invalid_argument(seg);
      } catch (const std::exception&) {
        throw ConfigError("override key '" + path + "' must index an array");
      }
      if (idx >= node->size()) {
        throw ConfigError("override key '" + path + "' is out of range");
      }
      node = &(*node)[idx];
    } else {
      throw ConfigError("override key '" + path + "' does not exist");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  *node = std::move(value);
}

std::vector<std::string> names(const Document& doc, std::string_view section) {
  std::vector<std::string> out;
  const Json* s = find(doc, std::string(section));
  if (!s || !s->is_object()) return out;
  for (const auto& [key, _] : s->items()) out.push_back(key);
  return out;
}

sim::PlatformConfig parse_platform(const Json& j) {
  const std::string p = "platform";
  check_keys(j,
             {"name", "mode", "wip", "friction", "spin", "geometry", "supported_mass", "mu",
              "check_slip", "slip_aborts", "tilt_bound", "dt", "log_decimation", "sensors",
              "control"},
             p);
  sim::PlatformConfig pc;
  pc.name = text(j, "name", p);
  const std::string mode = text(j, "mode", p);
  if (mode == "planar") {
    pc.mode = sim::PlantMode::kPlanar;
  } else if (mode == "ballbot") {
    pc.mode = sim::PlantMode::kBallbot;
  } else {
    throw ConfigError("platform.mode must be 'planar' or 'ballbot'");
  }

  {
    const std::string q = p + ".wip";
    const Json& w = object(j, "wip", p);
    check_keys(w, {"m_b", "m_w", "I_b", "I_w", "l", "r", "g"}, q);
    pc.wip.m_b = number(w, "m_b", q);
    pc.wip.m_w = number(w, "m_w", q);
    pc.wip.l = number(w, "l", q);
    pc.wip.r = number(w, "r", q);
    pc.wip.g = number(w, "g", q, 9.81);
    // Null inertias select the derived estimates.
    pc.wip.I_w = optional_number(w, "I_w", q)
                     .value_or(dynamics::thin_shell_inertia(pc.wip.m_w, pc.wip.r));
    pc.wip.I_b = optional_number(w, "I_b", q).value_or(pc.wip.m_b * pc.wip.l * pc.wip.l / 3.0);
  }
  if (const Json* f = find(j, "friction")) {
    const std::string q = p + ".friction";
    check_keys(*f, {"tau_stiction", "tau_coulomb", "b_v", "omega_stribeck", "omega_eps"}, q);
    pc.friction.tau_stiction = number(*f, "tau_stiction", q, 0.0);
    pc.friction.tau_coulomb = number(*f, "tau_coulomb", q, 0.0);
    pc.friction.b_v = number(*f, "b_v", q, 0.0);
    pc.friction.omega_stribeck = number(*f, "omega_stribeck", q, 0.1);
    pc.friction.omega_eps = number(*f, "omega_eps", q, 1e-3);
  }
  if (const Json* s = find(j, "spin")) {
    const std::string q = p + ".spin";
    check_keys(*s, {"I_z", "c_v", "c_c"}, q);
    pc.spin.I_z = number(*s, "I_z", q);
    pc.spin.c_v = number(*s, "c_v", q, 0.0);
    pc.spin.c_c = number(*s, "c_c", q, 0.0);
  }
  if (const Json* g = find(j, "geometry")) {
    const std::string q = p + ".geometry";
    check_keys(*g, {"r_s", "r_o", "alpha_deg", "gamma_deg", "gear_ratio"}, q);
    pc.geometry.r_s = number(*g, "r_s", q);
    pc.geometry.r_o = number(*g, "r_o", q);
    pc.geometry.alpha = number(*g, "alpha_deg", q) * kDegToRad;
    const std::vector<double> gamma = numbers(*g, "gamma_deg", q);
    if (gamma.size() != 3) throw ConfigError(q + ".gamma_deg must hold three azimuths");
    for (int i = 0; i < 3; ++i) pc.geometry.gamma[i] = gamma[i] * kDegToRad;
    pc.geometry.gear_ratio = number(*g, "gear_ratio", q);
  }
  pc.supported_mass = number(j, "supported_mass", p, pc.wip.m_b);
  pc.mu = number(j, "mu", p, 0.8);
  pc.check_slip = boolean(j, "check_slip", p, true);
  pc.slip_aborts = boolean(j, "slip_aborts", p, true);
  pc.tilt_bound = number(j, "tilt_bound", p, dynamics::kTiltFailureBound);
  pc.dt = number(j, "dt", p, 1.0 / 8000.0);
  pc.log_decimation = integer(j, "log_decimation", p, 1);
  if (const Json* s = find(j, "sensors")) {
    const std::string q = p + ".sensors";
    check_keys(*s, {"imu_tilt_sigma", "imu_rate_sigma", "encoder_cpr"}, q);
    pc.sensors.imu_tilt_sigma = number(*s, "imu_tilt_sigma", q, 0.0);
    pc.sensors.imu_rate_sigma = number(*s, "imu_rate_sigma", q, 0.0);
    pc.sensors.encoder_cpr = integer(*s, "encoder_cpr", q, 0);
  }
  if (const Json* c = find(j, "control")) {
    const std::string q = p + ".control";
    check_keys(*c,
               {"outer_hz", "inner_hz", "lqr", "spin_lqr", "pi", "pd", "torque_limit",
                "motor_torque_limit"},
               q);
    auto& ctl = pc.control;
    ctl.rates.outer_hz = number(*c, "outer_hz", q, 400.0);
    ctl.rates.inner_hz = number(*c, "inner_hz", q, 8000.0);
    if (const Json* l = find(*c, "lqr")) {
      const std::string r = q + ".lqr";
      check_keys(*l, {"q_diag", "r"}, r);
      const std::vector<double> qd = numbers(*l, "q_diag", r);
      if (qd.size() != 4) throw ConfigError(r + ".q_diag must hold four weights");
      ctl.lqr.q_diag = {qd[0], qd[1], qd[2], qd[3]};
      ctl.lqr.r = number(*l, "r", r, 1.0);
    }
    if (const Json* l = find(*c, "spin_lqr")) {
      const std::string r = q + ".spin_lqr";
      check_keys(*l, {"q_diag", "r"}, r);
      const std::vector<double> qd = numbers(*l, "q_diag", r);
      if (qd.size() != 2) throw ConfigError(r + ".q_diag must hold two weights");
      ctl.spin_lqr.q_diag = {qd[0], qd[1]};
      ctl.spin_lqr.r = number(*l, "r", r, 1.0);
    }
    if (const Json* g = find(*c, "pi")) {
      const std::string r = q + ".pi";
      check_keys(*g, {"k_p", "k_i", "integrator_limit"}, r);
      ctl.pi.k_p = number(*g, "k_p", r);
      ctl.pi.k_i = number(*g, "k_i", r);
      ctl.pi.integrator_limit = optional_number(*g, "integrator_limit", r).value_or(0.0);
    }
    if (const Json* g = find(*c, "pd")) {
      const std::string r = q + ".pd";
      check_keys(*g, {"k_p_outer", "k_i_outer", "k_p_tilt", "k_d_tilt", "tilt_limit"}, r);
      ctl.pd.k_p_outer = number(*g, "k_p_outer", r);
      ctl.pd.k_i_outer = number(*g, "k_i_outer", r);
      ctl.pd.k_p_tilt = number(*g, "k_p_tilt", r);
      ctl.pd.k_d_tilt = number(*g, "k_d_tilt", r);
      ctl.pd.tilt_limit = number(*g, "tilt_limit", r, 0.1);
    }
    ctl.torque_limit = number(*c, "torque_limit", q, 43.2);
    ctl.motor_torque_limit = number(*c, "motor_torque_limit", q, 43.2);
  }
  const auto gains_ok = [](double v) { return v >= 0.0; };
  const auto& ctl = pc.control;
  if (!gains_ok(ctl.pi.k_p) || !gains_ok(ctl.pi.k_i) || !gains_ok(ctl.pd.k_p_outer) ||
      !gains_ok(ctl.pd.k_i_outer) || !gains_ok(ctl.pd.k_p_tilt) ||
      !gains_ok(ctl.pd.k_d_tilt) || !(ctl.pd.tilt_limit > 0.0)) {
    throw ConfigError("controller gains must be non-negative and limits positive");
  }
  try {
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid platform '") + pc.name + "': " + e.what());
  }
  return pc;
}

sim::PlatformConfig platform(const Document& doc, const std::string& name) {
  const Json& j = section_entry(doc, "platforms", name);
  if (!j.is_object()) {
    throw ConfigError("platforms." + name + " is unresolved; call resolve() first");
  }
  return parse_platform(j);
}

TaskConfig task(const Document& doc, const std::string& name) {
  const Json& j = section_entry(doc, "tasks", name);
  const std::string p = "tasks." + name;
  check_keys(j,
             {"platform", "v0", "t_dur", "theta0", "theta_dot0", "theta_f", "theta_dot_f",
              "theta_max", "v_max", "tau_max", "n_knots", "solver"},
             p);
  TaskConfig tc;
  tc.name = name;
  tc.platform = text(j, "platform", p);
  tc.wip = platform(doc, tc.platform).wip;
  auto& t = tc.task;
  t.v0 = number(j, "v0", p);
  t.t_dur = number(j, "t_dur", p);
  t.theta0 = number(j, "theta0", p, 0.0);
  t.theta_dot0 = number(j, "theta_dot0", p, 0.0);
  t.theta_f = number(j, "theta_f", p, 0.0);
  t.theta_dot_f = number(j, "theta_dot_f", p, 0.0);
  t.theta_max = number(j, "theta_max", p, 0.35);
  t.v_max = number(j, "v_max", p, 3.0);
  t.tau_max = optional_number(j, "tau_max", p);
  tc.n_knots = integer(j, "n_knots", p, 50);
  if (const Json* s = find(j, "solver")) {
    const std::string q = p + ".solver";
    check_keys(*s, {"tol", "stationarity_tol", "max_iter", "max_inner_iter", "rho0"}, q);
    tc.solver.tol = number(*s, "tol", q, tc.solver.tol);
    tc.solver.stationarity_tol = number(*s, "stationarity_tol", q, tc.solver.stationarity_tol);
    tc.solver.max_iter = integer(*s, "max_iter", q, tc.solver.max_iter);
    tc.solver.max_inner_iter = integer(*s, "max_inner_iter", q, tc.solver.max_inner_iter);
    tc.solver.rho0 = number(*s, "rho0", q, tc.solver.rho0);
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(p + ": " + e.what());
  }
  if (tc.n_knots < 10) throw ConfigError(p + ".n_knots must be at least 10");
  if (!(tc.solver.tol > 0.0) || tc.solver.max_iter < 1 || tc.solver.max_inner_iter < 1) {
    throw ConfigError(p + ".solver settings must be positive");
  }
  return tc;
}

harness::ScenarioSpec scenario(const Document& doc, const std::string& name,
                               const std::filesystem::path& base_dir) {
  const Json& j = section_entry(doc, "scenarios", name);
  const std::string p = "scenarios." + name;
  check_keys(j, {"platform", "controller", "heading_deg", "phases", "initial_state"}, p);
  harness::ScenarioSpec s;
  s.name = name;
  s.platform = platform(doc, text(j, "platform", p));
  s.controller = controller_or_none(text(j, "controller", p, "lqr-pi"), p + ".controller");
  s.heading = number(j, "heading_deg", p, 0.0) * kDegToRad;
  if (const Json* init = find(j, "initial_state")) {
    const std::string q = p + ".initial_state";
    check_keys(*init, {"x", "y", "yaw", "yaw_rate"}, q);
    if (const Json* x = find(*init, "x")) s.initial_state.x = planar_state(*x, q + ".x");
    if (const Json* y = find(*init, "y")) s.initial_state.y = planar_state(*y, q + ".y");
    s.initial_state.yaw = number(*init, "yaw", q, 0.0);
    s.initial_state.yaw_rate = number(*init, "yaw_rate", q, 0.0);
  }
  const Json* phases = find(j, "phases");
  if (!phases || !phases->is_array() || phases->empty()) {
    throw ConfigError(p + ".phases must be a non-empty array");
  }
  for (std::size_t i = 0; i < phases->size(); ++i) {
    const Json& ph = (*phases)[i];
    const std::string q = fmt::format("{}.phases.{}", p, i);
    require_object(ph, q);
    harness::Phase phase;
    phase.name = text(ph, "name", q, fmt::format("phase{}", i));
    const std::string kind = text(ph, "kind", q);
    if (kind == "ramp") {
      check_keys(ph, {"name", "kind", "duration", "v_start", "v_end"}, q);
      phase.kind = harness::PhaseKind::kRamp;
      phase.duration = number(ph, "duration", q);
      phase.v_start = number(ph, "v_start", q);
      phase.v_end = number(ph, "v_end", q);
    } else if (kind == "hold") {
      check_keys(ph, {"name", "kind", "duration", "v"}, q);
      phase.kind = harness::PhaseKind::kHold;
      phase.duration = number(ph, "duration", q);
      phase.v_start = phase.v_end = number(ph, "v", q);
    } else if (kind == "trajectory") {
      check_keys(ph, {"name", "kind", "duration", "task", "file"}, q);
      phase.kind = harness::PhaseKind::kTrajectory;
      const bool has_task = ph.contains("task");
      const bool has_file = ph.contains("file");
      if (has_task == has_file) {
        throw ConfigError(q + " needs exactly one of 'task' or 'file'");
      }
      if (has_task) {
        phase.trajectory = solve_task_trajectory(doc, text(ph, "task", q));
      } else {
        std::filesystem::path file = text(ph, "file", q);
        if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
        phase.trajectory =
            std::make_shared<const trajopt::Trajectory>(trajopt::read_csv_file(file.string()));
      }
      phase.duration = number(ph, "duration", q, phase.trajectory->duration());
    } else {
      throw ConfigError(q + ".kind must be ramp, hold or trajectory");
    }
    s.phases.push_back(std::move(phase));
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(p + ": " + e.what());
  }
  return s;
}

BenchmarkKind benchmark_kind(const Document& doc, const std::string& name) {
  const Json& j = section_entry(doc, "benchmarks", name);
  const std::string kind = text(j, "kind", "benchmarks." + name, name);
  if (kind == "max-speed") return BenchmarkKind::kMaxSpeed;
  if (kind == "min-braking") return BenchmarkKind::kMinBraking;
  if (kind == "compare-controllers") return BenchmarkKind::kCompareControllers;
  throw ConfigError("benchmarks." + name +
                    ".kind must be max-speed, min-braking or compare-controllers");
}

bench::MaxSpeedSweep max_speed_benchmark(const Document& doc, const std::string& name) {
  const Json& j = section_entry(doc, "benchmarks", name);
  const std::string p = "benchmarks." + name;
  check_keys(j, {"kind", "platform", "controller", "ramp_rate", "ceiling", "headings_deg"}, p);
  bench::MaxSpeedSweep sw;
  sw.base.platform = platform(doc, text(j, "platform", p));
  sw.base.controller = controller(text(j, "controller", p, "lqr-pi"), p + ".controller");
  sw.base.ramp_rate = number(j, "ramp_rate", p, 0.1);
  sw.base.ceiling = number(j, "ceiling", p, 3.5);
  for (double h : numbers(j, "headings_deg", p)) sw.headings.push_back(h * kDegToRad);
  if (sw.headings.empty()) throw ConfigError(p + ".headings_deg must not be empty");
  if (!(sw.base.ramp_rate > 0.0) || !(sw.base.ceiling > 0.0)) {
    throw ConfigError(p + ": ramp_rate and ceiling must be positive");
  }
  return sw;
}

bench::MinBrakingSpec min_braking_benchmark(const Document& doc, const std::string& name) {
  const Json& j = section_entry(doc, "benchmarks", name);
  const std::string p = "benchmarks." + name;
  check_keys(j,
             {"kind", "platform", "controller", "heading_deg", "v0", "accel", "cruise",
              "settle", "start_duration", "step", "floor", "n_knots", "stop_speed",
              "stop_tilt_deg", "solver"},
             p);
  bench::MinBrakingSpec s;
  s.platform = platform(doc, text(j, "platform", p));
  s.controller = controller(text(j, "controller", p, "lqr-pi"), p + ".controller");
  s.heading = number(j, "heading_deg", p, 180.0) * kDegToRad;
  s.v0 = number(j, "v0", p, s.v0);
  s.accel = number(j, "accel", p, s.accel);
  s.cruise = number(j, "cruise", p, s.cruise);
  s.settle = number(j, "settle", p, s.settle);
  s.start_duration = number(j, "start_duration", p, s.start_duration);
  s.step = number(j, "step", p, s.step);
  s.floor = number(j, "floor", p, s.floor);
  s.n_knots = integer(j, "n_knots", p, s.n_knots);
  s.stop_speed = number(j, "stop_speed", p, s.stop_speed);
  s.stop_tilt = number(j, "stop_tilt_deg", p, 1.0) * kDegToRad;
  if (const Json* sv = find(j, "solver")) {
    const std::string q = p + ".solver";
    check_keys(*sv, {"tol", "stationarity_tol", "max_iter", "max_inner_iter", "rho0"}, q);
    s.solver.tol = number(*sv, "tol", q, s.solver.tol);
    s.solver.stationarity_tol = number(*sv, "stationarity_tol", q, s.solver.stationarity_tol);
    s.solver.max_iter = integer(*sv, "max_iter", q, s.solver.max_iter);
    s.solver.max_inner_iter = integer(*sv, "max_inner_iter", q, s.solver.max_inner_iter);
    s.solver.rho0 = number(*sv, "rho0", q, s.solver.rho0);
  }
  if (!(s.step > 0.0) || !(s.floor > 0.0) || s.start_duration < s.floor ||
      !(s.accel > 0.0) || s.v0 < 0.0 || s.n_knots < 10) {
    throw ConfigError(p + ": inconsistent search settings");
  }
  return s;
}

bench::CompareSpec compare_benchmark(const Document& doc, const std::string& name,
                                     const std::filesystem::path& base_dir) {
  const Json& j = section_entry(doc, "benchmarks", name);
  const std::string p = "benchmarks." + name;
  check_keys(j,
             {"kind", "scenario", "brake_phase", "hold_phase", "controllers", "trials",
              "stop_speed", "stop_tilt_deg"},
             p);
  bench::CompareSpec c;
  c.base = scenario(doc, text(j, "scenario", p), base_dir);
  c.brake_phase = text(j, "brake_phase", p, "brake");
  c.hold_phase = text(j, "hold_phase", p, "hold");
  const Json* list = find(j, "controllers");
  if (!list || !list->is_array() || list->empty()) {
    throw ConfigError(p + ".controllers must be a non-empty array");
  }
  for (const Json& k : *list) {
    if (!k.is_string()) throw ConfigError(p + ".controllers must hold names");
    c.controllers.push_back(controller(k.get<std::string>(), p + ".controllers"));
  }
  c.trials = integer(j, "trials", p, 3);
  if (c.trials < 1) throw ConfigError(p + ".trials must be at least 1");
  c.stop_speed = number(j, "stop_speed", p, c.stop_speed);
  c.stop_tilt = number(j, "stop_tilt_deg", p, 1.0) * kDegToRad;
  return c;
}

ServiceSettings service(const Document& doc) {
  ServiceSettings s;
  const Json* j = find(doc, "service");
  if (!j) return s;
  const std::string p = "service";
  check_keys(*j,
             {"host", "port", "platform", "controller", "speed_limit", "slew_rate",
              "yaw_rate_limit", "telemetry_hz", "realtime_factor", "queue_depth",
              "push_force_limit", "tunable"},
             p);
  s.host = text(*j, "host", p, s.host);
  const int port = integer(*j, "port", p, s.port);
  if (port < 0 || port > 65535) throw ConfigError("service.port out of range");
  s.port = static_cast<unsigned short>(port);
  s.platform = text(*j, "platform", p, s.platform);
  s.controller = text(*j, "controller", p, s.controller);
  s.speed_limit = number(*j, "speed_limit", p, s.speed_limit);
  s.slew_rate = number(*j, "slew_rate", p, s.slew_rate);
  s.yaw_rate_limit = number(*j, "yaw_rate_limit", p, s.yaw_rate_limit);
  s.telemetry_hz = number(*j, "telemetry_hz", p, s.telemetry_hz);
  s.realtime_factor = number(*j, "realtime_factor", p, s.realtime_factor);
  s.queue_depth = integer(*j, "queue_depth", p, s.queue_depth);
  s.push_force_limit = number(*j, "push_force_limit", p, s.push_force_limit);
  if (const Json* t = find(*j, "tunable")) {
    if (!t->is_array()) throw ConfigError("service.tunable must be an array");
    for (const Json& k : *t) {
      if (!k.is_string()) throw ConfigError("service.tunable must hold names");
      s.tunable.push_back(k.get<std::string>());
    }
  }
  if (!(s.speed_limit > 0.0) || !(s.slew_rate > 0.0) || !(s.yaw_rate_limit > 0.0) ||
      !(s.telemetry_hz > 0.0) || s.telemetry_hz > 200.0 || !(s.realtime_factor > 0.0) ||
      s.queue_depth < 1 || !(s.push_force_limit >= 0.0)) {
    throw ConfigError("service settings out of range (telemetry_hz must be in (0, 200])");
  }
  return s;
}

}  // namespace ballbot::config
