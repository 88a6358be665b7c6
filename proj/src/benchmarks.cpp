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

#include "ballbot/benchmarks.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace ballbot::bench {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

std::string event_detail(const harness::RunResult& r, const std::string& type) {
  for (const harness::Event& e : r.events) {
    if (e.type == type) return e.detail;
  }
  return {};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

MaxSpeedResult max_speed_ramp(const MaxSpeedSpec& spec, std::uint64_t seed) {
  if (!(spec.ramp_rate > 0.0) || !(spec.ceiling > 0.0)) {
    throw std::invalid_argument("ramp rate and ceiling must be positive");
  }
  if (spec.platform.mode != sim::PlantMode::kBallbot) {
    throw std::invalid_argument("max-speed ramp needs a ballbot platform");
  }
  harness::ScenarioSpec s;
  s.name = fmt::format("max-speed-{:g}", spec.heading * kRadToDeg);
  s.platform = spec.platform;
  s.platform.check_slip = true;
  s.platform.slip_aborts = true;
  s.controller = spec.controller;
  s.heading = spec.heading;
  s.phases = {{"ramp", harness::PhaseKind::kRamp, spec.ceiling / spec.ramp_rate, 0.0,
               spec.ceiling, nullptr}};
  const harness::RunResult r = harness::run_scenario(s, seed);

  MaxSpeedResult out;
  out.heading = spec.heading;
  out.failure_time = r.metrics["end_time"].get<double>();
  if (r.slip) {
    out.failed = true;
    out.cause = "slip";
    out.failure_speed = *r.first_slip_speed;
    out.failure_time = *r.first_slip_time;
    out.detail = event_detail(r, "slip");
  } else if (r.balance_failure || r.aborted) {
    out.failed = true;
    out.cause = r.balance_failure ? "balance_failure" : "aborted";
    out.failure_speed = r.metrics["final_speed"].get<double>();
  } else {
    out.failure_speed = spec.ceiling;
  }
  return out;
}

std::vector<MaxSpeedResult> max_speed_sweep(const MaxSpeedSweep& sweep,
                                            std::uint64_t seed) {
  if (sweep.headings.empty()) throw std::invalid_argument("heading list is empty");
  std::vector<MaxSpeedResult> out;
  out.reserve(sweep.headings.size());
  for (double h : sweep.headings) {
    MaxSpeedSpec s = sweep.base;
    s.heading = h;
    out.push_back(max_speed_ramp(s, seed));
  }
  return out;
}

harness::ScenarioSpec braking_scenario(const MinBrakingSpec& spec,
                                       std::shared_ptr<const trajopt::Trajectory> brake) {
  harness::ScenarioSpec s;
  s.name = fmt::format("braking-{:g}s", brake->duration());
  s.platform = spec.platform;
  s.controller = spec.controller;
  s.heading = spec.heading;
  if (spec.v0 > 0.0) {
    s.phases.push_back(
        {"accelerate", harness::PhaseKind::kRamp, spec.v0 / spec.accel, 0.0, spec.v0, nullptr});
  }
  if (spec.cruise > 0.0) {
    s.phases.push_back(
        {"cruise", harness::PhaseKind::kHold, spec.cruise, spec.v0, spec.v0, nullptr});
  }
  s.phases.push_back(
      {"brake", harness::PhaseKind::kTrajectory, brake->duration(), 0.0, 0.0, brake});
  if (spec.settle > 0.0) {
    s.phases.push_back({"settle", harness::PhaseKind::kHold, spec.settle, 0.0, 0.0, nullptr});
  }
  return s;
}

BrakingProbe probe_braking(const MinBrakingSpec& spec, double duration,
                           std::uint64_t seed) {
  BrakingProbe p;
  p.duration = duration;
  trajopt::BrakingTask task;
  task.v0 = spec.v0;
  task.t_dur = duration;

  trajopt::SolveResult sol;
  try {
    sol = trajopt::optimize_braking(spec.platform.wip, task, spec.n_knots, spec.solver);
  } catch (const trajopt::SolveError& e) {
    p.reason = "optimizer did not converge";
    p.objective = e.best().report.objective;
    return p;
  }
  p.solver_converged = true;
  p.objective = sol.report.objective;

  const auto brake = std::make_shared<const trajopt::Trajectory>(sol.trajectory);
  const harness::RunResult r = harness::run_scenario(braking_scenario(spec, brake), seed);
  p.slip = r.slip;
  p.balance_failure = r.balance_failure;
  p.final_speed = r.metrics["final_speed"].get<double>();
  p.final_theta = r.metrics["final_theta"].get<double>();
  p.max_abs_theta = r.metrics["max_abs_theta"].get<double>();
  if (r.slip) {
    p.reason = "slip";
  } else if (r.balance_failure) {
    p.reason = "balance failure";
  } else if (r.aborted) {
    p.reason = "aborted";
  } else if (std::abs(p.final_speed) > spec.stop_speed) {
    p.reason = "not stopped";
  } else if (std::abs(p.final_theta) > spec.stop_tilt) {
    p.reason = "not upright";
  } else {
    p.success = true;
  }
  return p;
}

MinBrakingResult min_braking_search(const MinBrakingSpec& spec, std::uint64_t seed) {
  if (!(spec.step > 0.0) || !(spec.floor > 0.0) || spec.start_duration < spec.floor) {
    throw std::invalid_argument("braking search needs step > 0 and start >= floor > 0");
  }
  if (!(spec.accel > 0.0) || spec.v0 < 0.0) {
    throw std::invalid_argument("braking search needs accel > 0 and v0 >= 0");
  }
  MinBrakingResult out;
  for (int k = 0;; ++k) {
    const double d = spec.start_duration - k * spec.step;
    if (d < spec.floor - 1e-9) {
      out.reached_floor = true;
      break;
    }
    BrakingProbe p = probe_braking(spec, d, seed);
    out.probes.push_back(p);
    if (!p.success) {
      if (k == 0) {
        throw NoFeasibleBraking(
            fmt::format("no feasible braking time in range: {:g} s failed ({})", d,
                        p.reason),
            p);
      }
      break;
    }
    out.min_duration = d;
  }
  return out;
}

std::vector<CompareRow> compare_controllers(const CompareSpec& spec, std::uint64_t seed) {
  if (spec.controllers.empty()) throw std::invalid_argument("controller list is empty");
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<CompareRow> rows;
  for (control::ControllerKind kind : spec.controllers) {
    CompareRow row;
    row.controller = kind;
    row.completed = true;
    row.stopped = true;
    std::vector<double> effort, hold, fv, ft;
    for (int i = 0; i < spec.trials; ++i) {
      harness::ScenarioSpec s = spec.base;
      s.controller = kind;
      try {
        const harness::RunResult r = harness::run_scenario(s, seed + i);
        const harness::PhaseWindow* b = r.phase(spec.brake_phase);
        if (!b) throw std::runtime_error("run ended before phase '" + spec.brake_phase + "'");
        effort.push_back(harness::braking_effort(r, b->start, b->end));
        const auto& phases = r.metrics["phases"];
        for (const auto& pj : phases) {
          if (pj["name"] == spec.hold_phase) hold.push_back(pj["steady_speed_error"].get<double>());
        }
        const double v = r.metrics["final_speed"].get<double>();
        const double th = r.metrics["final_theta"].get<double>();
        fv.push_back(v);
        ft.push_back(th);
        row.completed = row.completed && r.completed;
        row.stopped = row.stopped && r.completed && std::abs(v) <= spec.stop_speed &&
                      std::abs(th) <= spec.stop_tilt;
      } catch (const std::exception& e) {
        row.errors.push_back(fmt::format("trial {}: {}", i, e.what()));
        row.completed = false;
        row.stopped = false;
      }
    }
    row.trials = static_cast<int>(effort.size());
    row.effort_mean = mean(effort);
    row.effort_sd = sample_sd(effort);
    row.hold_error_mean = mean(hold);
    row.final_speed_mean = mean(fv);
    row.final_theta_mean = mean(ft);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json to_json(const MaxSpeedResult& r) {
  nlohmann::ordered_json j;
  j["heading_deg"] = r.heading * kRadToDeg;
  j["failed"] = r.failed;
  j["cause"] = r.cause;
  j["failure_speed"] = r.failure_speed;
  j["failure_time"] = r.failure_time;
  j["detail"] = r.detail;
  return j;
}

nlohmann::ordered_json to_json(const BrakingProbe& p) {
  nlohmann::ordered_json j;
  j["duration"] = p.duration;
  j["success"] = p.success;
  j["reason"] = p.reason;
  j["solver_converged"] = p.solver_converged;
  j["objective"] = p.objective;
  j["final_speed"] = p.final_speed;
  j["final_theta"] = p.final_theta;
  j["max_abs_theta"] = p.max_abs_theta;
  j["slip"] = p.slip;
  j["balance_failure"] = p.balance_failure;
  return j;
}

nlohmann::ordered_json to_json(const MinBrakingResult& r) {
  nlohmann::ordered_json j;
  j["min_duration"] = r.min_duration;
  j["reached_floor"] = r.reached_floor;
  nlohmann::ordered_json probes = nlohmann::ordered_json::array();
  for (const BrakingProbe& p : r.probes) probes.push_back(to_json(p));
  j["probes"] = probes;
  return j;
}

nlohmann::ordered_json to_json(const CompareRow& r) {
  nlohmann::ordered_json j;
  j["controller"] = std::string(control::to_string(r.controller));
  j["trials"] = r.trials;
  j["effort_mean"] = r.effort_mean;
  j["effort_sd"] = r.effort_sd;
  j["hold_error_mean"] = r.hold_error_mean;
  j["final_speed_mean"] = r.final_speed_mean;
  j["final_theta_mean"] = r.final_theta_mean;
  j["completed"] = r.completed;
  j["stopped"] = r.stopped;
  j["errors"] = r.errors;
  return j;
}

}  // namespace ballbot::bench
