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

#include "ballbot/ballbot_controller.hpp"

#include <algorithm>

namespace ballbot::control {

PiGains motor_pi_from_planar(const PiGains& planar, const kinematics::Drivetrain& dt,
                             double motor_torque_limit) {
  const Eigen::Matrix3d jtj = dt.jacobian().transpose() * dt.jacobian();
  const double lambda = 0.5 * (jtj(0, 0) + jtj(1, 1));
  PiGains g;
  g.k_p = planar.k_p / lambda;
  g.k_i = planar.k_i / lambda;
  g.integrator_limit =
      default_integrator_limit(g.k_i, motor_torque_limit / dt.geometry().gear_ratio);
  return g;
}

BallbotController::BallbotController(ControllerKind kind,
                                     const dynamics::WipParams& reference_model,
                                     const dynamics::SpinParams& spin_model,
                                     const kinematics::DrivetrainGeometry& geometry,
                                     const BallbotGains& gains, const RateConfig& rates,
                                     double motor_torque_limit)
    : kind_(kind),
      model_(reference_model),
      spin_model_(spin_model),
      drivetrain_(geometry),
      gains_(gains),
      rates_(rates),
      ratio_(rates.ratio()),
      // The limit is rated at the actuator output, after the gear reduction.
      torque_limit_(motor_torque_limit / geometry.gear_ratio) {
  model_.validate();
  spin_model_.validate();
  // The reference spin model keeps inertia and viscous damping only.
  spin_model_.c_c = 0.0;
}

void BallbotController::reset() {
  tick_count_ = 0;
  cs_x_ = {};
  cs_y_ = {};
  yaw_rate_ref_ = 0.0;
  yaw_ref_initialized_ = false;
  motor_cs_ = {};
  held_tau_ = {};
  internals_ = {};
}

void BallbotController::outer_update(const BallbotMeasurement& m,
                                     const BallbotCommand& cmd) {
  const auto& imu = m.imu;
  const kinematics::RatesEstimate est = drivetrain_.planar_rates(
      m.motor_speeds, {imu.theta_dot_x, imu.theta_dot_y}, imu.theta_dot_z);
  internals_.speed_residual = est.residual;

  // Wheel positions are not fed back; they stay at zero in the planar states.
  const dynamics::PlanarState s_x{imu.theta_x, 0.0, imu.theta_dot_x,
                                  est.rates.phi_dot_x};
  const dynamics::PlanarState s_y{imu.theta_y, 0.0, imu.theta_dot_y,
                                  est.rates.phi_dot_y};
  internals_.s_x = s_x;
  internals_.s_y = s_y;

  const double outer_dt = rates_.outer_dt();
  kinematics::PlanarTorques u_r;
  u_r.tau_z = gains_.yaw.k_angle * (cmd.yaw_c - imu.theta_z) +
              gains_.yaw.k_rate * (cmd.yaw_rate_c - imu.theta_dot_z);

  switch (kind_) {
    case ControllerKind::kLqr:
      u_r.tau_x = lqr_torque(gains_.x.lqr, cmd.x, s_x);
      u_r.tau_y = lqr_torque(gains_.y.lqr, cmd.y, s_y);
      break;
    case ControllerKind::kPiPd:
      u_r.tau_x = pi_pd_step(cs_x_, gains_.x.pd, cmd.x.phi_dot_c, s_x, outer_dt);
      u_r.tau_y = pi_pd_step(cs_y_, gains_.y.pd, cmd.y.phi_dot_c, s_y, outer_dt);
      break;
    case ControllerKind::kLqrPi: {
      u_r.tau_x = lqr_torque(gains_.x.lqr, cmd.x, s_x);
      u_r.tau_y = lqr_torque(gains_.y.lqr, cmd.y, s_y);
      internals_.phi_dot_ref_x =
          reference_model_step(model_, s_x, u_r.tau_x, outer_dt, cs_x_);
      internals_.phi_dot_ref_y =
          reference_model_step(model_, s_y, u_r.tau_y, outer_dt, cs_y_);
      if (!yaw_ref_initialized_) {
        yaw_rate_ref_ = imu.theta_dot_z;
        yaw_ref_initialized_ = true;
      }
      yaw_rate_ref_ +=
          dynamics::spin_accel(spin_model_, imu.theta_dot_z, u_r.tau_z) * outer_dt;
      internals_.yaw_rate_ref = yaw_rate_ref_;
      internals_.motor_speed_ref = drivetrain_.motor_speeds(
          {internals_.phi_dot_ref_x, internals_.phi_dot_ref_y, imu.theta_dot_x,
           imu.theta_dot_y, yaw_rate_ref_});
      break;
    }
  }
  internals_.tau_ref = u_r;
  internals_.motor_tau_ref = drivetrain_.motor_torques(u_r);
  held_tau_ = internals_.motor_tau_ref;
}

kinematics::MotorVector BallbotController::step(const BallbotMeasurement& m,
                                                const BallbotCommand& cmd) {
  if (next_tick_is_outer()) outer_update(m, cmd);
  ++tick_count_;

  kinematics::MotorVector u = held_tau_;
  if (kind_ == ControllerKind::kLqrPi) {
    for (int i = 0; i < 3; ++i) {
      internals_.motor_tau_track[i] =
          pi_step(motor_cs_[i], gains_.motor_pi, internals_.motor_speed_ref[i],
                  m.motor_speeds[i], rates_.inner_dt());
      u[i] += internals_.motor_tau_track[i];
    }
  }
  for (int i = 0; i < 3; ++i) u[i] = std::clamp(u[i], -torque_limit_, torque_limit_);
  return u;
}

}  // namespace ballbot::control
