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

// Simulated plants and sensors.

#pragma once

#include <cstdint>
#include <deque>
#include <random>

#include <Eigen/Dense>

#include "ballbot/dynamics.hpp"
#include "ballbot/kinematics.hpp"

namespace ballbot::sim {

/// One frictional WIP plane integrated with RK4.
class PlanarPlant {
 public:
  PlanarPlant(const dynamics::WipParams& p, const dynamics::FrictionParams& f);

  void step(double tau, double dt, const dynamics::GeneralizedForce& push = {});
  const dynamics::PlanarState& state() const { return state_; }
  void set_state(const dynamics::PlanarState& s) { state_ = s; }
  double energy() const { return dynamics::total_energy(p_, state_); }
  const dynamics::WipParams& params() const { return p_; }

 private:
  dynamics::WipParams p_;
  dynamics::FrictionParams f_;
  dynamics::PlanarState state_;
};

/// Decoupled three-plane ballbot: the frontal (x) and sagittal (y) WIP planes
/// plus the spin plane, driven by three omniwheel motors.
///
/// State layout: [x plane (4), y plane (4), yaw, yaw_rate].
struct BallbotState {
  dynamics::PlanarState x;
  dynamics::PlanarState y;
  double yaw = 0.0;
  double yaw_rate = 0.0;

  using Vector = Eigen::Matrix<double, 10, 1>;
  Vector vec() const;
  static BallbotState from_vec(const Vector& v);
};

class BallbotPlant {
 public:
  BallbotPlant(const dynamics::WipParams& p, const dynamics::FrictionParams& f,
               const dynamics::SpinParams& spin,
               const kinematics::DrivetrainGeometry& geometry);

  /// Advances one step under constant motor torques.
  void step(const kinematics::MotorVector& u, double dt,
            const dynamics::GeneralizedForce& push_x = {},
            const dynamics::GeneralizedForce& push_y = {});

  const BallbotState& state() const { return state_; }
  void set_state(const BallbotState& s) { state_ = s; }

  kinematics::MotorVector motor_speeds() const;
  /// Motor shaft angles; the speed map is linear so angles follow from the
  /// integrated planar coordinates.
  kinematics::MotorVector motor_angles() const;
  const kinematics::Drivetrain& drivetrain() const { return drivetrain_; }
  const dynamics::WipParams& params() const { return p_; }
  double energy() const;

 private:
  dynamics::WipParams p_;
  dynamics::FrictionParams f_;
  dynamics::SpinParams spin_;
  kinematics::Drivetrain drivetrain_;
  BallbotState state_;
};

/// Sensor imperfections. All off by default.
struct SensorModel {
  double imu_tilt_sigma = 0.0;  // rad
  double imu_rate_sigma = 0.0;  // rad/s
  int encoder_cpr = 0;          // counts per revolution, 0 = ideal

  bool ideal() const {
    return imu_tilt_sigma == 0.0 && imu_rate_sigma == 0.0 && encoder_cpr == 0;
  }
};

/// Encoder with angle quantization and a moving-window speed estimate.
class Encoder {
 public:
  Encoder(int counts_per_rev, int window_ticks, double dt);

  /// Feeds the true angle and speed for the current tick, returns the
  /// measured speed.
  double update(double angle, double speed);
  void reset();

 private:
  int cpr_;
  int window_;
  double dt_;
  std::deque<double> history_;
};

/// Additive Gaussian noise from a seeded generator.
class ImuNoise {
 public:
  ImuNoise(const SensorModel& model, std::uint64_t seed);
  double tilt(double value);
  double rate(double value);

 private:
  SensorModel model_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ballbot::sim
