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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/simulator.hpp"
#include "ballbot/trajectory.hpp"

namespace ballbot::harness {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PhaseKind {
  kRamp,        // speed linear from v_start to v_end
  kHold,        // constant speed v_end
  kTrajectory,  // command states from a trajectory, time relative to phase start
};

struct Phase {
  std::string name;
  PhaseKind kind = PhaseKind::kHold;
  double duration = 0.0;  // s
  double v_start = 0.0;   // m/s
  double v_end = 0.0;     // m/s
  std::shared_ptr<const trajopt::Trajectory> trajectory;
};

/// Command along the heading for one instant.
struct HeadingCommand {
  double v = 0.0;          // m/s, informational
  double theta = 0.0;      // rad
  double theta_dot = 0.0;  // rad/s
  double phi_dot = 0.0;    // rad/s
};

HeadingCommand phase_command(const Phase& phase, double t_local, double wheel_radius);

/// Splits a heading command into the two translation planes.
control::BallbotCommand to_ballbot_command(const HeadingCommand& c, double heading,
                                           sim::PlantMode mode);

struct ScenarioSpec {
  std::string name;
  sim::PlatformConfig platform;
  std::optional<control::ControllerKind> controller = control::ControllerKind::kLqrPi;
  std::vector<Phase> phases;
  double heading = 0.0;  // rad, 0 along omniwheel 1
  sim::BallbotState initial_state;

  void validate() const;
  double total_duration() const;
};

/// Column-oriented time series on one time base.
struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  void set_columns(std::vector<std::string> names);
  void add_row(const std::vector<double>& row);
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  /// Throws std::out_of_range for an unknown column.
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};

struct Event {
  double t = 0.0;
  std::string type;  // phase, slip, balance_failure, aborted, end
  std::string detail;
};

struct PhaseWindow {
  std::string name;
  double start = 0.0;
  double end = 0.0;
};

struct RunResult {
  std::string scenario;
  Series series;
  std::vector<Event> events;
  std::vector<PhaseWindow> phases;
  nlohmann::ordered_json metrics;
  bool completed = false;
  bool balance_failure = false;
  bool slip = false;
  bool aborted = false;
  std::optional<double> first_slip_time;
  std::optional<double> first_slip_speed;

  const PhaseWindow* phase(const std::string& name) const;
};

/// Fixed-step closed-loop run. Deterministic for a given spec and seed.
RunResult run_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// Trapezoidal quadrature of tau^2 over [t2, t3] from the logged torque
/// along the heading. Throws std::out_of_range when the window leaves the run.
double braking_effort(const RunResult& result, double t2, double t3);

}  // namespace ballbot::harness
