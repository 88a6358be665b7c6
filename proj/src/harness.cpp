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

#include "ballbot/harness.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ballbot::harness {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

double wheel_radius(const sim::PlatformConfig& pc) {
  return pc.mode == sim::PlantMode::kBallbot ? pc.geometry.r_s : pc.wip.r;
}

std::vector<std::string> planar_columns() {
  return {"t",     "theta",   "phi",         "theta_dot", "phi_dot",   "v",
          "tau",   "tau_ref", "phi_dot_ref", "tau_track", "theta_ref", "theta_c",
          "phi_dot_c"};
}

std::vector<std::string> ballbot_columns() {
  return {"t",         "theta_x",   "phi_x",     "theta_dot_x", "phi_dot_x",
          "theta_y",   "phi_y",     "theta_dot_y", "phi_dot_y", "yaw",
          "yaw_rate",  "v",         "theta_h",   "tau",         "tau_x",
          "tau_y",     "tau_z",     "u1",        "u2",          "u3",
          "psi_dot1",  "psi_dot2",  "psi_dot3",  "margin1",     "margin2",
          "margin3",   "tau_ref_x", "tau_ref_y", "phi_dot_ref_x", "phi_dot_ref_y",
          "theta_c",   "phi_dot_c_x", "phi_dot_c_y"};
}

// Quantities along the heading direction.
struct Along {
  double v = 0.0;
  double theta = 0.0;
  double phi_dot = 0.0;
  double tau = 0.0;
};

Along along_heading(const sim::Snapshot& s, const sim::BallbotState& st, double heading,
                    sim::PlantMode mode, double r) {
  Along a;
  if (mode == sim::PlantMode::kPlanar) {
    a.phi_dot = st.y.phi_dot;
    a.theta = st.y.theta;
    a.tau = s.planar_torque.tau_y;
  } else {
    const double c = std::cos(heading);
    const double sn = std::sin(heading);
    a.phi_dot = c * st.y.phi_dot + sn * st.x.phi_dot;
    a.theta = c * st.y.theta + sn * st.x.theta;
    a.tau = c * s.planar_torque.tau_y + sn * s.planar_torque.tau_x;
  }
  a.v = r * a.phi_dot;
  return a;
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

struct PhaseStats {
  double err_sum = 0.0;
  long err_count = 0;
  double max_abs_theta = 0.0;
};

}  // namespace

HeadingCommand phase_command(const Phase& phase, double t_local, double r) {
  HeadingCommand c;
  switch (phase.kind) {
    case PhaseKind::kRamp: {
      const double u = std::clamp(t_local / phase.duration, 0.0, 1.0);
      c.v = phase.v_start + (phase.v_end - phase.v_start) * u;
      c.phi_dot = c.v / r;
      break;
    }
    case PhaseKind::kHold:
      c.v = phase.v_end;
      c.phi_dot = c.v / r;
      break;
    case PhaseKind::kTrajectory: {
      const trajopt::Trajectory& traj = *phase.trajectory;
      const dynamics::PlanarState s = traj.state_at(traj.start() + t_local);
      c.theta = s.theta;
      c.theta_dot = s.theta_dot;
      c.phi_dot = s.phi_dot;
      c.v = r * s.phi_dot;
      break;
    }
  }
  return c;
}

control::BallbotCommand to_ballbot_command(const HeadingCommand& c, double heading,
                                           sim::PlantMode mode) {
  control::BallbotCommand cmd;
  if (mode == sim::PlantMode::kPlanar) {
    cmd.y = {c.theta, c.phi_dot, c.theta_dot};
    return cmd;
  }
  const double ch = std::cos(heading);
  const double sh = std::sin(heading);
  cmd.y = {c.theta * ch, c.phi_dot * ch, c.theta_dot * ch};
  cmd.x = {c.theta * sh, c.phi_dot * sh, c.theta_dot * sh};
  return cmd;
}

void ScenarioSpec::validate() const {
  platform.validate();
  if (phases.empty()) throw ScenarioError("scenario '" + name + "' has no phases");
  for (const Phase& p : phases) {
    if (!(p.duration > 0.0)) {
      throw ScenarioError("phase '" + p.name + "' must have a positive duration");
    }
    if (p.kind == PhaseKind::kTrajectory) {
      if (!p.trajectory) {
        throw ScenarioError("phase '" + p.name + "' has no trajectory");
      }
      p.trajectory->validate();
    }
  }
}

double ScenarioSpec::total_duration() const {
  double t = 0.0;
  for (const Phase& p : phases) t += p.duration;
  return t;
}

void Series::set_columns(std::vector<std::string> names) {
  columns = std::move(names);
  data.assign(columns.size(), {});
}

void Series::add_row(const std::vector<double>& row) {
  for (std::size_t i = 0; i < data.size(); ++i) data[i].push_back(row[i]);
}

bool Series::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

const std::vector<double>& Series::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
  return data[static_cast<std::size_t>(it - columns.begin())];
}

const PhaseWindow* RunResult::phase(const std::string& name) const {
  for (const PhaseWindow& w : phases) {
    if (w.name == name) return &w;
  }
  return nullptr;
}

RunResult run_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  const sim::PlatformConfig& pc = spec.platform;
  const sim::PlantMode mode = pc.mode;
  const double r = wheel_radius(pc);
  const double dt = pc.dt;

  RunResult result;
  result.scenario = spec.name;
  result.series.set_columns(mode == sim::PlantMode::kPlanar ? planar_columns()
                                                            : ballbot_columns());

  sim::Simulator simulator(pc, spec.controller, seed);
  simulator.reset(spec.initial_state);

  std::array<double, 3> margins{0.0, 0.0, 0.0};
  double max_abs_theta = 0.0;
  std::optional<double> failure_time;
  bool stop = false;
  std::vector<PhaseStats> stats(spec.phases.size());
  std::vector<double> row;
  row.reserve(result.series.columns.size());

  const auto log_row = [&](const sim::Snapshot& snap, const sim::BallbotState& st,
                           const control::BallbotCommand& cmd, const HeadingCommand& hc,
                           double t) {
    row.clear();
    const Along a = along_heading(snap, st, spec.heading, mode, r);
    if (mode == sim::PlantMode::kPlanar) {
      const auto& s = st.y;
      row = {t,
             s.theta,
             s.phi,
             s.theta_dot,
             s.phi_dot,
             r * s.phi_dot,
             snap.planar_torque.tau_y,
             snap.tau_ref_y,
             snap.phi_dot_ref_y,
             snap.tau_track,
             snap.theta_ref,
             cmd.y.theta_c,
             cmd.y.phi_dot_c};
    } else {
      row = {t,
             st.x.theta,
             st.x.phi,
             st.x.theta_dot,
             st.x.phi_dot,
             st.y.theta,
             st.y.phi,
             st.y.theta_dot,
             st.y.phi_dot,
             st.yaw,
             st.yaw_rate,
             a.v,
             a.theta,
             a.tau,
             snap.planar_torque.tau_x,
             snap.planar_torque.tau_y,
             snap.planar_torque.tau_z,
             snap.motor_torque[0],
             snap.motor_torque[1],
             snap.motor_torque[2],
             snap.motor_speed[0],
             snap.motor_speed[1],
             snap.motor_speed[2],
             margins[0],
             margins[1],
             margins[2],
             snap.tau_ref_x,
             snap.tau_ref_y,
             snap.phi_dot_ref_x,
             snap.phi_dot_ref_y,
             hc.theta,
             cmd.x.phi_dot_c,
             cmd.y.phi_dot_c};
    }
    result.series.add_row(row);
  };

  double t_phase = 0.0;
  sim::Snapshot last_snap;
  control::BallbotCommand last_cmd;
  HeadingCommand last_hc;
  for (std::size_t pi = 0; pi < spec.phases.size() && !stop; ++pi) {
    const Phase& phase = spec.phases[pi];
    const long n = std::lround(phase.duration / dt);
    result.events.push_back({t_phase, "phase", phase.name});
    PhaseWindow window{phase.name, t_phase, t_phase};
    for (long i = 0; i < n; ++i) {
      const double t_local = i * dt;
      const HeadingCommand hc = phase_command(phase, t_local, r);
      const control::BallbotCommand cmd = to_ballbot_command(hc, spec.heading, mode);
      const sim::Snapshot* snap = nullptr;
      try {
        snap = &simulator.tick(cmd);
      } catch (const dynamics::IntegrationError& e) {
        result.aborted = true;
        result.events.push_back({simulator.time(), "aborted", e.what()});
        stop = true;
        break;
      }
      if (snap->contact) {
        for (int k = 0; k < 3; ++k) margins[k] = snap->contact->margin[k];
      }
      if (snap->tick % pc.log_decimation == 0) {
        log_row(*snap, snap->state, cmd, hc, snap->t);
      }
      last_snap = *snap;
      last_cmd = cmd;
      last_hc = hc;

      const Along a = along_heading(*snap, snap->state, spec.heading, mode, r);
      max_abs_theta = std::max(
          {max_abs_theta, std::abs(snap->state.x.theta), std::abs(snap->state.y.theta)});
      PhaseStats& ps = stats[pi];
      ps.max_abs_theta = std::max(ps.max_abs_theta, std::abs(a.theta));
      if (t_local >= 0.5 * phase.duration) {
        ps.err_sum += std::abs(a.phi_dot - hc.phi_dot);
        ++ps.err_count;
      }

      if (snap->slip && !result.slip) {
        result.slip = true;
        result.first_slip_time = snap->t;
        result.first_slip_speed = a.v;
        std::string detail = "contact separation";
        if (snap->contact) {
          int worst = 0;
          for (int k = 1; k < 3; ++k) {
            if (snap->contact->margin[k] < snap->contact->margin[worst]) worst = k;
          }
          detail = fmt::format("omniwheel {}", worst + 1);
        }
        result.events.push_back({snap->t, "slip", detail});
        if (pc.slip_aborts) stop = true;
      }
      if (snap->balance_failure) {
        result.balance_failure = true;
        failure_time = snap->t + dt;
        result.events.push_back({*failure_time, "balance_failure", "tilt bound exceeded"});
        stop = true;
      }
      if (stop) break;
    }
    window.end = simulator.time();
    result.phases.push_back(window);
    t_phase = simulator.time();
  }

  // Closing row with the state at the end of the run.
  const sim::BallbotState final_state = simulator.state();
  log_row(last_snap, final_state, last_cmd, last_hc, simulator.time());
  result.events.push_back({simulator.time(), "end", ""});
  result.completed = !stop;

  const Along fin = along_heading(last_snap, final_state, spec.heading, mode, r);
  auto& m = result.metrics;
  m["scenario"] = spec.name;
  m["platform"] = pc.name;
  m["controller"] = spec.controller ? std::string(control::to_string(*spec.controller))
                                    : std::string("none");
  m["seed"] = seed;
  m["heading_deg"] = spec.heading * kRadToDeg;
  m["completed"] = result.completed;
  m["balance_failure"] = result.balance_failure;
  m["slip"] = result.slip;
  m["aborted"] = result.aborted;
  m["end_time"] = simulator.time();
  m["first_slip_time"] = optional_json(result.first_slip_time);
  m["first_slip_speed"] = optional_json(result.first_slip_speed);
  m["failure_time"] = optional_json(failure_time);
  m["max_abs_theta"] = max_abs_theta;
  m["final_speed"] = fin.v;
  m["final_theta"] = fin.theta;

  nlohmann::ordered_json phases = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.phases.size(); ++i) {
    const PhaseWindow& w = result.phases[i];
    nlohmann::ordered_json pj;
    pj["name"] = w.name;
    pj["start"] = w.start;
    pj["end"] = w.end;
    pj["braking_effort"] = w.end > w.start ? braking_effort(result, w.start, w.end) : 0.0;
    pj["steady_speed_error"] =
        stats[i].err_count > 0 ? stats[i].err_sum / stats[i].err_count : 0.0;
    pj["max_abs_theta"] = stats[i].max_abs_theta;
    phases.push_back(pj);
  }
  m["phases"] = phases;
  return result;
}

double braking_effort(const RunResult& result, double t2, double t3) {
  const auto& t = result.series.column("t");
  const auto& tau = result.series.column("tau");
  if (t.empty() || t2 < t.front() - 1e-9 || t3 > t.back() + 1e-9 || t3 < t2) {
    throw std::out_of_range("braking window outside the run span");
  }
  // Piecewise-linear torque between samples, clipped to the window.
  const auto tau_at = [&](std::size_t k, double time) {
    if (k + 1 >= t.size()) return tau.back();
    const double u = (time - t[k]) / (t[k + 1] - t[k]);
    return tau[k] + u * (tau[k + 1] - tau[k]);
  };
  double j = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double a = std::max(t[k], t2);
    const double b = std::min(t[k + 1], t3);
    if (b <= a) continue;
    const double ta = tau_at(k, a);
    const double tb = tau_at(k, b);
    j += 0.5 * (b - a) * (ta * ta + tb * tb);
  }
  return j;
}

}  // namespace ballbot::harness
