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

#include <array>

#include "ballbot/controllers.hpp"
#include "ballbot/kinematics.hpp"

namespace ballbot::control {

/// Body attitude from the IMU: tilt angles and rates for the frontal (x) and
/// sagittal (y) planes plus yaw.
struct ImuSample {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double theta_z = 0.0;
  double theta_dot_x = 0.0;
  double theta_dot_y = 0.0;
  double theta_dot_z = 0.0;
};

struct BallbotMeasurement {
  ImuSample imu;
  kinematics::MotorVector motor_speeds;
};

struct BallbotCommand {
  CommandState x;
  CommandState y;
  double yaw_c = 0.0;
  double yaw_rate_c = 0.0;
};

struct BallbotGains {
  PlanarGains x;
  PlanarGains y;
  SpinGains yaw;
  /// Per-motor inner PI, in motor torque per motor speed.
  PiGains motor_pi;
};

/// Logged internals of one pipeline evaluation.
struct BallbotInternals {
  kinematics::PlanarTorques tau_ref;  // u_r in planar coordinates
  double phi_dot_ref_x = 0.0;
  double phi_dot_ref_y = 0.0;
  double yaw_rate_ref = 0.0;
  kinematics::MotorVector motor_tau_ref;
  kinematics::MotorVector motor_speed_ref;
  kinematics::MotorVector motor_tau_track;
  dynamics::PlanarState s_x;
  dynamics::PlanarState s_y;
  double speed_residual = 0.0;
};

/// Converts the planar inner-PI gains into per-motor gains, using the mean
/// translational eigenvalue of J'J so the planar loop gain is preserved.
PiGains motor_pi_from_planar(const PiGains& planar, const kinematics::Drivetrain& dt,
                             double motor_torque_limit);

/// Full three-plane pipeline:
///   motor speeds + IMU -> planar states -> per-plane LQR (x, y) and yaw LQR
///   -> reference models -> motor feedforward torques and speed references
///   -> per-motor PI on speed error plus feedforward.
/// LQR and PI-PD variants map their planar torques straight to the motors and
/// hold them between outer ticks.
class BallbotController {
 public:
  BallbotController(ControllerKind kind, const dynamics::WipParams& reference_model,
                    const dynamics::SpinParams& spin_model,
                    const kinematics::DrivetrainGeometry& geometry,
                    const BallbotGains& gains, const RateConfig& rates,
                    double motor_torque_limit);

  /// One inner tick; returns motor-side torques saturated so the actuator
  /// output torque (gear_ratio * u) stays within `motor_torque_limit`.
  kinematics::MotorVector step(const BallbotMeasurement& m, const BallbotCommand& cmd);
  void reset();

  bool next_tick_is_outer() const { return tick_count_ % ratio_ == 0; }
  const BallbotInternals& internals() const { return internals_; }
  const kinematics::Drivetrain& drivetrain() const { return drivetrain_; }
  BallbotGains& gains() { return gains_; }
  ControllerKind kind() const { return kind_; }

 private:
  void outer_update(const BallbotMeasurement& m, const BallbotCommand& cmd);

  ControllerKind kind_;
  dynamics::WipParams model_;
  dynamics::SpinParams spin_model_;
  kinematics::Drivetrain drivetrain_;
  BallbotGains gains_;
  RateConfig rates_;
  int ratio_;
  double torque_limit_;
  long tick_count_ = 0;

  ControllerState cs_x_;
  ControllerState cs_y_;
  double yaw_rate_ref_ = 0.0;
  bool yaw_ref_initialized_ = false;
  std::array<ControllerState, 3> motor_cs_{};
  kinematics::MotorVector held_tau_;
  BallbotInternals internals_;
};

}  // namespace ballbot::control
