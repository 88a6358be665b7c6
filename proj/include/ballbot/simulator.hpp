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

// Closed-loop simulator: plant, sensors and controller on one inner-tick
// timeline. Shared by the batch harness and the interactive service.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "ballbot/ballbot_controller.hpp"
#include "ballbot/controllers.hpp"
#include "ballbot/dynamics.hpp"
#include "ballbot/kinematics.hpp"
#include "ballbot/lqr.hpp"
#include "ballbot/plant.hpp"

namespace ballbot::sim {

enum class PlantMode {
  kPlanar,   // single WIP plane driven directly by the planar torque
  kBallbot,  // three planes driven through the omniwheel drivetrain
};

struct ControlSettings {
  control::LqrWeights lqr;
  control::SpinWeights spin_lqr;
  control::PiGains pi;  // planar (ball side); integrator_limit <= 0 selects the default
  control::PdGains pd;
  control::RateConfig rates;
  double torque_limit = 43.2;        // planar mode actuator limit, N m
  double motor_torque_limit = 43.2;  // ballbot mode, per actuator output shaft, N m
};

struct PlatformConfig {
  std::string name;
  PlantMode mode = PlantMode::kPlanar;
  dynamics::WipParams wip;
  dynamics::FrictionParams friction;
  dynamics::SpinParams spin;
  kinematics::DrivetrainGeometry geometry;
  double supported_mass = 0.0;  // mass carried by the omniwheels, kg
  ControlSettings control;
  double mu = 0.8;
  bool check_slip = true;
  bool slip_aborts = true;
  SensorModel sensors;
  double dt = 1.0 / 8000.0;
  double tilt_bound = dynamics::kTiltFailureBound;
  int log_decimation = 1;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

control::PlanarGains design_planar_gains(const PlatformConfig& pc);
control::BallbotGains design_ballbot_gains(const PlatformConfig& pc);

/// Horizontal force at the body COM, body frame (N).
struct Push {
  double fx = 0.0;
  double fy = 0.0;
};

struct Snapshot {
  double t = 0.0;
  long tick = 0;
  BallbotState state;  // planar mode uses the y plane only
  kinematics::MotorVector motor_torque;
  kinematics::MotorVector motor_speed;
  kinematics::PlanarTorques planar_torque;  // applied, ball side
  double tau_ref_x = 0.0;
  double tau_ref_y = 0.0;
  double phi_dot_ref_x = 0.0;
  double phi_dot_ref_y = 0.0;
  double tau_track = 0.0;  // planar mode
  double theta_ref = 0.0;  // planar PI-PD
  std::optional<kinematics::ContactReport> contact;
  bool balance_failure = false;
  bool slip = false;
  bool contact_separation = false;
};

/// Deterministic closed loop. Each `tick` advances one inner period.
class Simulator {
 public:
  /// `kind` empty selects a passive (zero torque) controller.
  Simulator(const PlatformConfig& pc, std::optional<control::ControllerKind> kind,
            std::uint64_t seed);
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  /// Returns to upright rest (or `initial`), clears controller and sensor state.
  void reset(const BallbotState& initial = {});

  /// One inner tick. Returns the snapshot describing the tick just taken:
  /// the state at its start, the torques applied during it and any event
  /// detected on it. After a balance failure torques are zero.
  const Snapshot& tick(const control::BallbotCommand& cmd, const Push& push = {});

  const BallbotState& state() const;
  double time() const { return ticks_ * pc_.dt; }
  long ticks() const { return ticks_; }
  bool failed() const { return failed_; }
  const Snapshot& last() const { return last_; }
  const PlatformConfig& platform() const { return pc_; }
  std::optional<control::ControllerKind> kind() const { return kind_; }
  double energy() const;
  bool is_outer_tick() const;

  /// Live gain access for whitelisted tuning.
  control::PlanarGains& planar_gains();
  control::BallbotGains& ballbot_gains();

 private:
  control::BallbotMeasurement measure_ballbot();
  dynamics::PlanarState measure_planar();

  PlatformConfig pc_;
  std::optional<control::ControllerKind> kind_;
  std::uint64_t seed_;
  int ratio_;
  long ticks_ = 0;
  bool failed_ = false;

  std::unique_ptr<PlanarPlant> planar_plant_;
  std::unique_ptr<BallbotPlant> ballbot_plant_;
  std::unique_ptr<control::PlanarController> planar_ctrl_;
  std::unique_ptr<control::BallbotController> ballbot_ctrl_;
  control::PlanarGains planar_gains_;
  control::BallbotGains ballbot_gains_;

  ImuNoise imu_;
  Encoder wheel_encoder_;
  std::array<Encoder, 3> motor_encoders_;
  // IMU samples are taken at outer ticks and held in between.
  control::ImuSample held_imu_;
  Snapshot last_;
  mutable BallbotState planar_view_;
};

}  // namespace ballbot::sim
