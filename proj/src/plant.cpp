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

#include "ballbot/plant.hpp"

#include <cmath>

namespace ballbot::sim {

PlanarPlant::PlanarPlant(const dynamics::WipParams& p, const dynamics::FrictionParams& f)
    : p_(p), f_(f) {
  p_.validate();
  f_.validate();
}

void PlanarPlant::step(double tau, double dt, const dynamics::GeneralizedForce& push) {
  const auto deriv = [&](const Eigen::Vector4d& s) -> Eigen::Vector4d {
    return dynamics::wip_derivative(p_, f_, s, tau, push);
  };
  state_ = dynamics::PlanarState::from_vec(dynamics::step_rk4(deriv, state_.vec(), dt));
}

BallbotState::Vector BallbotState::vec() const {
  Vector v;
  v << x.vec(), y.vec(), yaw, yaw_rate;
  return v;
}

BallbotState BallbotState::from_vec(const Vector& v) {
  BallbotState s;
  s.x = dynamics::PlanarState::from_vec(v.segment<4>(0));
  s.y = dynamics::PlanarState::from_vec(v.segment<4>(4));
  s.yaw = v[8];
  s.yaw_rate = v[9];
  return s;
}

BallbotPlant::BallbotPlant(const dynamics::WipParams& p,
                           const dynamics::FrictionParams& f,
                           const dynamics::SpinParams& spin,
                           const kinematics::DrivetrainGeometry& geometry)
    : p_(p), f_(f), spin_(spin), drivetrain_(geometry) {
  p_.validate();
  f_.validate();
  spin_.validate();
}

void BallbotPlant::step(const kinematics::MotorVector& u, double dt,
                        const dynamics::GeneralizedForce& push_x,
                        const dynamics::GeneralizedForce& push_y) {
  const kinematics::PlanarTorques t = drivetrain_.planar_torques(u);
  const auto deriv = [&](const BallbotState::Vector& v) -> BallbotState::Vector {
    BallbotState::Vector d;
    d.segment<4>(0) = dynamics::wip_derivative(p_, f_, v.segment<4>(0), t.tau_x, push_x);
    d.segment<4>(4) = dynamics::wip_derivative(p_, f_, v.segment<4>(4), t.tau_y, push_y);
    d[8] = v[9];
    d[9] = dynamics::spin_accel(spin_, v[9], t.tau_z);
    return d;
  };
  state_ = BallbotState::from_vec(dynamics::step_rk4(deriv, state_.vec(), dt));
}

kinematics::MotorVector BallbotPlant::motor_speeds() const {
  return drivetrain_.motor_speeds({state_.x.phi_dot, state_.y.phi_dot,
                                   state_.x.theta_dot, state_.y.theta_dot,
                                   state_.yaw_rate});
}

kinematics::MotorVector BallbotPlant::motor_angles() const {
  return drivetrain_.motor_speeds(
      {state_.x.phi, state_.y.phi, state_.x.theta, state_.y.theta, state_.yaw});
}

double BallbotPlant::energy() const {
  return dynamics::total_energy(p_, state_.x) + dynamics::total_energy(p_, state_.y) +
         0.5 * spin_.I_z * state_.yaw_rate * state_.yaw_rate;
}

Encoder::Encoder(int counts_per_rev, int window_ticks, double dt)
    : cpr_(counts_per_rev), window_(window_ticks), dt_(dt) {}

void Encoder::reset() { history_.clear(); }

double Encoder::update(double angle, double speed) {
  if (cpr_ <= 0) return speed;
  const double quantum = 2.0 * M_PI / cpr_;
  const double q = std::floor(angle / quantum) * quantum;
  history_.push_back(q);
  if (static_cast<int>(history_.size()) > window_ + 1) history_.pop_front();
  const int span = static_cast<int>(history_.size()) - 1;
  if (span == 0) return 0.0;
  return (history_.back() - history_.front()) / (span * dt_);
}

ImuNoise::ImuNoise(const SensorModel& model, std::uint64_t seed)
    : model_(model), rng_(seed) {}

double ImuNoise::tilt(double value) {
  if (model_.imu_tilt_sigma == 0.0) return value;
  return value + model_.imu_tilt_sigma * normal_(rng_);
}

double ImuNoise::rate(double value) {
  if (model_.imu_rate_sigma == 0.0) return value;
  return value + model_.imu_rate_sigma * normal_(rng_);
}

}  // namespace ballbot::sim
