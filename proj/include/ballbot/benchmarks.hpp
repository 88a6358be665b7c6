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

// Benchmarks built on the harness: top speed under a slow ramp, shortest
// successful braking duration, and the controller braking comparison.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/harness.hpp"
#include "ballbot/trajopt.hpp"

namespace ballbot::bench {

struct MaxSpeedSpec {
  sim::PlatformConfig platform;
  control::ControllerKind controller = control::ControllerKind::kLqrPi;
  double heading = 0.0;    // rad
  double ramp_rate = 0.1;  // m/s^2
  double ceiling = 3.5;    // m/s
};

struct MaxSpeedResult {
  double heading = 0.0;        // rad
  bool failed = false;         // slip or balance failure before the ceiling
  std::string cause = "none";  // slip, balance_failure, aborted or none
  double failure_speed = 0.0;  // m/s along the heading; the ceiling when not failed
  double failure_time = 0.0;   // s
  std::string detail;          // offending omniwheel for slip
};

/// Slow speed ramp until the first slip or balance failure. Slip detection
/// is forced on and always ends the run.
MaxSpeedResult max_speed_ramp(const MaxSpeedSpec& spec, std::uint64_t seed);

struct MaxSpeedSweep {
  MaxSpeedSpec base;
  std::vector<double> headings;  // rad
};

/// One result per heading, in order. Throws std::invalid_argument when empty.
std::vector<MaxSpeedResult> max_speed_sweep(const MaxSpeedSweep& sweep,
                                            std::uint64_t seed);

struct MinBrakingSpec {
  sim::PlatformConfig platform;
  control::ControllerKind controller = control::ControllerKind::kLqrPi;
  double heading = M_PI;        // rad
  double v0 = 1.4;              // m/s
  double accel = 0.1;           // m/s^2 up to v0
  double cruise = 2.0;          // s at v0 before braking
  double settle = 1.0;          // s at rest after braking
  double start_duration = 5.0;  // s
  double step = 0.5;            // s
  double floor = 0.5;           // s, shortest duration probed
  int n_knots = 50;
  trajopt::SolveOptions solver;
  double stop_speed = 0.05;           // m/s
  double stop_tilt = M_PI / 180.0;    // rad
};

struct BrakingProbe {
  double duration = 0.0;
  bool success = false;
  std::string reason;  // empty on success
  bool solver_converged = false;
  double objective = 0.0;  // optimal cost of the commanded trajectory
  double final_speed = 0.0;
  double final_theta = 0.0;
  double max_abs_theta = 0.0;
  bool slip = false;
  bool balance_failure = false;
};

struct MinBrakingResult {
  double min_duration = 0.0;  // shortest successful duration
  bool reached_floor = false;
  std::vector<BrakingProbe> probes;
};

class NoFeasibleBraking : public std::runtime_error {
 public:
  NoFeasibleBraking(const std::string& what, BrakingProbe probe)
      : std::runtime_error(what), probe_(std::move(probe)) {}
  const BrakingProbe& probe() const { return probe_; }

 private:
  BrakingProbe probe_;
};

/// Scenario used to probe one braking duration: ramp to v0, cruise, follow
/// the optimal braking trajectory, then hold zero speed.
harness::ScenarioSpec braking_scenario(const MinBrakingSpec& spec,
                                       std::shared_ptr<const trajopt::Trajectory> brake);

/// One probe at `duration`.
BrakingProbe probe_braking(const MinBrakingSpec& spec, double duration,
                           std::uint64_t seed);

/// Decrements the braking duration from `start_duration` by `step` until a
/// probe fails or the floor is reached; returns the last success. Throws
/// NoFeasibleBraking when the first probe fails.
MinBrakingResult min_braking_search(const MinBrakingSpec& spec, std::uint64_t seed);

struct CompareSpec {
  harness::ScenarioSpec base;
  std::string brake_phase = "brake";
  std::string hold_phase = "hold";
  std::vector<control::ControllerKind> controllers;
  int trials = 3;
  double stop_speed = 0.05;
  double stop_tilt = M_PI / 180.0;
};

struct CompareRow {
  control::ControllerKind controller = control::ControllerKind::kLqrPi;
  int trials = 0;             // successful runs
  double effort_mean = 0.0;   // braking effort over the brake phase
  double effort_sd = 0.0;     // sample deviation, 0 for one trial
  double hold_error_mean = 0.0;  // mean |wheel speed error| in the hold phase, rad/s
  double final_speed_mean = 0.0;
  double final_theta_mean = 0.0;
  bool completed = false;     // every trial ran to the end of the protocol
  bool stopped = false;       // every trial ended within the stop tolerances
  std::vector<std::string> errors;
};

/// Runs every controller for `trials` seeds (seed, seed + 1, ...). A failing
/// cell is reported in its row without stopping the table.
std::vector<CompareRow> compare_controllers(const CompareSpec& spec, std::uint64_t seed);

nlohmann::ordered_json to_json(const MaxSpeedResult& r);
nlohmann::ordered_json to_json(const BrakingProbe& p);
nlohmann::ordered_json to_json(const MinBrakingResult& r);
nlohmann::ordered_json to_json(const CompareRow& r);

}  // namespace ballbot::bench
