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

// Interactive simulation session: one plant and controller advanced tick by
// tick under teleoperation commands. Deterministic and single-threaded; the
// server adds pacing, threads and sockets around it.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/config.hpp"
#include "ballbot/simulator.hpp"
#include "ballbot/trajectory.hpp"

namespace ballbot::service {

enum class Status { kPaused, kRunning, kFailed, kReset };
std::string to_string(Status s);

class IllegalTransition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParamRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TeleopCommand {
  double v = 0.0;         // m/s along the heading
  double heading = 0.0;   // rad, 0 along omniwheel 1
  double yaw_rate = 0.0;  // rad/s
};

struct CommandAck {
  TeleopCommand applied;  // after clamping
  bool clamped = false;
  std::string note;
};

struct SessionSettings {
  sim::PlatformConfig platform;
  std::optional<control::ControllerKind> controller = control::ControllerKind::kLqrPi;
  std::uint64_t seed = 1;
  double speed_limit = 2.0;
  double slew_rate = 1.5;
  double yaw_rate_limit = 1.0;
  double telemetry_hz = 50.0;
  double push_force_limit = 200.0;
  std::vector<std::string> tunable;
  /// Builds settings from a resolved document and its service section.
  static SessionSettings from_document(const config::Document& doc,
                                       const config::ServiceSettings& svc,
                                       const std::string& platform_name,
                                       std::optional<control::ControllerKind> controller,
                                       std::uint64_t seed);
};

struct PlaneFrame {
  double theta = 0.0;
  double phi = 0.0;
  double theta_dot = 0.0;
  double phi_dot = 0.0;
};

struct TelemetryFrame {
  std::uint64_t seq = 0;
  long tick = 0;
  double t = 0.0;
  Status status = Status::kPaused;
  bool planar = false;
  PlaneFrame x;
  PlaneFrame y;
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double pos_x = 0.0;  // world frame, m
  double pos_y = 0.0;
  std::array<double, 3> motor_torque{};
  std::array<double, 3> motor_speed{};
  std::array<double, 3> tau_ref{};      // controller planar references x, y, z
  std::array<double, 3> tau_applied{};  // planar torques applied at the ball
  std::array<double, 2> phi_dot_ref{};
  std::optional<std::array<double, 3>> margins;
  TeleopCommand command;  // requested, after clamping
  double v_shaped = 0.0;  // command speed after slew limiting
  std::string source;     // teleop or a trigger name
  bool balance_failure = false;
  bool slip = false;
  std::uint64_t dropped = 0;  // frames dropped before this one
  double lag = 0.0;           // s behind wall clock, pacing only
};

/// Logged inbound message with the tick it took effect on.
struct LoggedInput {
  long tick = 0;
  nlohmann::ordered_json message;
};

class SimSession {
 public:
  SimSession(std::string id, SessionSettings settings);

  const std::string& id() const { return id_; }
  Status status() const { return status_; }
  const SessionSettings& settings() const { return settings_; }
  double time() const { return sim_.time(); }
  long ticks() const { return sim_.ticks(); }
  double dt() const { return settings_.platform.dt; }
  int telemetry_decimation() const { return decimation_; }

  CommandAck command(const TeleopCommand& c);
  void start();
  void pause();
  void reset();
  /// Hot-swaps a whitelisted gain; plant physics is never tunable.
  void set_param(const std::string& key, double value);
  /// Body-frame horizontal force held for `duration` seconds.
  void push(double fx, double fy, double duration);
  /// Switches the command source to a named maneuver: "brake" follows a 2 s
  /// optimal braking profile solved for the current speed, "ramp" accelerates
  /// at 0.1 m/s^2 to the speed limit. Returns false for a no-op. A teleop
  /// command cancels an active maneuver.
  bool trigger(const std::string& name);

  /// Dispatches a parsed client message (see protocol.hpp) and records it.
  nlohmann::ordered_json handle(const nlohmann::ordered_json& message);

  /// Advances up to `n` ticks while running; appends telemetry frames at the
  /// configured decimation. Returns the ticks actually taken.
  long advance(long n, std::vector<TelemetryFrame>* frames);

  TelemetryFrame frame() const;
  /// FNV-1a hash of the plant state and controller-visible inputs.
  std::uint64_t state_hash() const;
  const std::vector<LoggedInput>& input_log() const { return log_; }

 private:
  void shape_command();
  control::BallbotCommand controller_command() const;
  void cancel_trigger();

  std::string id_;
  SessionSettings settings_;
  sim::Simulator sim_;
  Status status_ = Status::kPaused;
  int decimation_ = 160;
  mutable std::uint64_t seq_ = 0;

  TeleopCommand target_;
  double vx_ = 0.0;  // shaped body-frame velocity command, m/s
  double vy_ = 0.0;
  double yaw_c_ = 0.0;
  double pos_x_ = 0.0;
  double pos_y_ = 0.0;
  sim::Push push_;
  long push_ticks_ = 0;
  bool slip_seen_ = false;
  std::optional<std::array<double, 3>> margins_;  // latest outer-tick contact check

  // Trigger state.
  std::string source_ = "teleop";
  std::shared_ptr<const trajopt::Trajectory> active_traj_;
  double traj_heading_ = 0.0;
  long traj_start_tick_ = 0;
  double ramp_v_ = 0.0;

  std::vector<LoggedInput> log_;
};

/// Bounded frame buffer between the session and one subscriber. When full the
/// oldest frame is dropped; the next delivered frame reports the drop count.
class TelemetryQueue {
 public:
  explicit TelemetryQueue(std::size_t capacity);
  void push(TelemetryFrame f);
  std::optional<TelemetryFrame> pop();
  std::size_t size() const;
  std::uint64_t total_dropped() const;

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::deque<TelemetryFrame> frames_;
  std::uint64_t pending_drops_ = 0;
  std::uint64_t total_drops_ = 0;
};

/// Wall-clock pacing: reports how many ticks are due so sim time tracks
/// factor * elapsed wall time, in bounded catch-up batches.
class Pacer {
 public:
  using Clock = std::chrono::steady_clock;
  Pacer(double dt, double factor, double max_batch_seconds = 0.1);
  void restart(Clock::time_point now, long tick_offset);
  long due(Clock::time_point now, long ticks_done) const;
  /// Seconds of sim time the session is behind the wall clock.
  double lag(Clock::time_point now, long ticks_done) const;

 private:
  double dt_;
  double factor_;
  long max_batch_;
  Clock::time_point start_;
  long offset_ = 0;
};

/// Replays a recorded input log on a fresh session with the same settings
/// and returns every telemetry frame, running until `end_tick`.
std::vector<TelemetryFrame> replay(const std::string& id, const SessionSettings& settings,
                                   const std::vector<LoggedInput>& log, long end_tick);

}  // namespace ballbot::service
