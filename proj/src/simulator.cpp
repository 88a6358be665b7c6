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

#include "ballbot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ballbot::sim {

void PlatformConfig::validate() const {
  wip.validate();
  friction.validate();
  spin.validate();
  control.lqr.validate();
  if (mode == PlantMode::kBallbot) {
    geometry.validate();
    if (!(supported_mass > 0.0)) {
      throw std::invalid_argument("supported_mass must be positive");
    }
  }
  if (!(dt > 0.0)) throw std::invalid_argument("integration step must be positive");
  control.rates.ratio();
  const double ticks = control.rates.inner_dt() / dt;
  if (std::abs(ticks - std::round(ticks)) > 1e-9 || std::round(ticks) != 1.0) {
    throw std::invalid_argument(
        "integration step must equal the inner control period");
  }
  if (!(control.torque_limit > 0.0) || !(control.motor_torque_limit > 0.0)) {
    throw std::invalid_argument("torque limits must be positive");
  }
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(tilt_bound > 0.0)) throw std::invalid_argument("tilt_bound must be positive");
  if (log_decimation < 1) throw std::invalid_argument("log_decimation must be >= 1");
  if (sensors.imu_tilt_sigma < 0.0 || sensors.imu_rate_sigma < 0.0 ||
      sensors.encoder_cpr < 0) {
    throw std::invalid_argument("sensor settings must be non-negative");
  }
}

control::PlanarGains design_planar_gains(const PlatformConfig& pc) {
  control::PlanarGains g;
  g.lqr = control::solve_lqr(dynamics::linearize(pc.wip), pc.control.lqr);
  g.pi = pc.control.pi;
  const double limit = pc.mode == PlantMode::kBallbot ? pc.control.motor_torque_limit
                                                      : pc.control.torque_limit;
  if (!(g.pi.integrator_limit > 0.0)) {
    g.pi.integrator_limit = control::default_integrator_limit(g.pi.k_i, limit);
  }
  g.pd = pc.control.pd;
  return g;
}

control::BallbotGains design_ballbot_gains(const PlatformConfig& pc) {
  control::BallbotGains g;
  g.x = design_planar_gains(pc);
  g.y = g.x;
  g.yaw = control::solve_spin_lqr(pc.spin, pc.control.spin_lqr);
  const kinematics::Drivetrain dt(pc.geometry);
  g.motor_pi = control::motor_pi_from_planar(pc.control.pi, dt,
                                             pc.control.motor_torque_limit);
  if (pc.control.pi.integrator_limit > 0.0) {
    g.motor_pi.integrator_limit = pc.control.pi.integrator_limit;
  }
  return g;
}

Simulator::Simulator(const PlatformConfig& pc,
                     std::optional<control::ControllerKind> kind, std::uint64_t seed)
    : pc_(pc),
      kind_(kind),
      seed_(seed),
      ratio_(pc.control.rates.ratio()),
      imu_(pc.sensors, seed),
      wheel_encoder_(pc.sensors.encoder_cpr, pc.control.rates.ratio(), pc.dt),
      motor_encoders_{Encoder(pc.sensors.encoder_cpr, pc.control.rates.ratio(), pc.dt),
                      Encoder(pc.sensors.encoder_cpr, pc.control.rates.ratio(), pc.dt),
                      Encoder(pc.sensors.encoder_cpr, pc.control.rates.ratio(), pc.dt)} {
  pc_.validate();
  if (pc_.mode == PlantMode::kPlanar) {
    planar_gains_ = design_planar_gains(pc_);
  } else {
    ballbot_gains_ = design_ballbot_gains(pc_);
  }
  reset();
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

void Simulator::reset(const BallbotState& initial) {
  ticks_ = 0;
  failed_ = false;
  last_ = {};
  held_imu_ = {};
  imu_ = ImuNoise(pc_.sensors, seed_);
  wheel_encoder_.reset();
  for (auto& e : motor_encoders_) e.reset();
  // Live gain edits survive a reset.
  if (planar_ctrl_) planar_gains_ = planar_ctrl_->gains();
  if (ballbot_ctrl_) ballbot_gains_ = ballbot_ctrl_->gains();

  if (pc_.mode == PlantMode::kPlanar) {
    planar_plant_ = std::make_unique<PlanarPlant>(pc_.wip, pc_.friction);
    planar_plant_->set_state(initial.y);
    if (kind_) {
      planar_ctrl_ = std::make_unique<control::PlanarController>(
          *kind_, pc_.wip, planar_gains_, pc_.control.rates, pc_.control.torque_limit);
    }
  } else {
    ballbot_plant_ =
        std::make_unique<BallbotPlant>(pc_.wip, pc_.friction, pc_.spin, pc_.geometry);
    ballbot_plant_->set_state(initial);
    if (kind_) {
      ballbot_ctrl_ = std::make_unique<control::BallbotController>(
          *kind_, pc_.wip, pc_.spin, pc_.geometry, ballbot_gains_, pc_.control.rates,
          pc_.control.motor_torque_limit);
    }
  }
}

const BallbotState& Simulator::state() const {
  if (pc_.mode == PlantMode::kPlanar) {
    planar_view_ = {};
    planar_view_.y = planar_plant_->state();
    return planar_view_;
  }
  return ballbot_plant_->state();
}

double Simulator::energy() const {
  return pc_.mode == PlantMode::kPlanar ? planar_plant_->energy()
                                        : ballbot_plant_->energy();
}

bool Simulator::is_outer_tick() const { return ticks_ % ratio_ == 0; }

control::PlanarGains& Simulator::planar_gains() {
  return planar_ctrl_ ? planar_ctrl_->gains() : planar_gains_;
}

control::BallbotGains& Simulator::ballbot_gains() {
  return ballbot_ctrl_ ? ballbot_ctrl_->gains() : ballbot_gains_;
}

dynamics::PlanarState Simulator::measure_planar() {
  const dynamics::PlanarState& s = planar_plant_->state();
  if (is_outer_tick()) {
    held_imu_.theta_y = imu_.tilt(s.theta);
    held_imu_.theta_dot_y = imu_.rate(s.theta_dot);
  }
  dynamics::PlanarState m;
  m.theta = held_imu_.theta_y;
  m.theta_dot = held_imu_.theta_dot_y;
  m.phi = s.phi;
  m.phi_dot = wheel_encoder_.update(s.phi, s.phi_dot);
  return m;
}

control::BallbotMeasurement Simulator::measure_ballbot() {
  const BallbotState& s = ballbot_plant_->state();
  if (is_outer_tick()) {
    held_imu_.theta_x = imu_.tilt(s.x.theta);
    held_imu_.theta_y = imu_.tilt(s.y.theta);
    held_imu_.theta_z = imu_.tilt(s.yaw);
    held_imu_.theta_dot_x = imu_.rate(s.x.theta_dot);
    held_imu_.theta_dot_y = imu_.rate(s.y.theta_dot);
    held_imu_.theta_dot_z = imu_.rate(s.yaw_rate);
  }
  control::BallbotMeasurement m;
  m.imu = held_imu_;
  const kinematics::MotorVector angles = ballbot_plant_->motor_angles();
  const kinematics::MotorVector speeds = ballbot_plant_->motor_speeds();
  for (int i = 0; i < 3; ++i) {
    m.motor_speeds[i] = motor_encoders_[i].update(angles[i], speeds[i]);
  }
  return m;
}

const Snapshot& Simulator::tick(const control::BallbotCommand& cmd, const Push& push) {
  Snapshot snap;
  snap.t = time();
  snap.tick = ticks_;
  const bool outer = is_outer_tick();

  if (pc_.mode == PlantMode::kPlanar) {
    PlanarPlant& plant = *planar_plant_;
    snap.state.y = plant.state();
    const dynamics::PlanarState meas = measure_planar();
    double tau = 0.0;
    if (planar_ctrl_) {
      const double command_tau = planar_ctrl_->tick(meas, cmd.y);
      if (!failed_) tau = command_tau;
      const control::PlanarInternals in = planar_ctrl_->internals();
      snap.tau_ref_y = in.tau_ref;
      snap.phi_dot_ref_y = in.phi_dot_ref;
      snap.tau_track = in.tau_track;
      snap.theta_ref = in.theta_ref;
    }
    snap.planar_torque.tau_y = tau;
    snap.motor_torque[0] = tau;
    snap.motor_speed[0] = plant.state().phi_dot;
    const auto gf = dynamics::GeneralizedForce::horizontal_push(
        plant.params(), plant.state().theta, push.fx);
    plant.step(tau, pc_.dt, gf);
    if (std::abs(plant.state().theta) > pc_.tilt_bound) failed_ = true;
  } else {
    BallbotPlant& plant = *ballbot_plant_;
    snap.state = plant.state();
    const control::BallbotMeasurement meas = measure_ballbot();
    kinematics::MotorVector u;
    if (ballbot_ctrl_) {
      const kinematics::MotorVector command_u = ballbot_ctrl_->step(meas, cmd);
      if (!failed_) u = command_u;
      const control::BallbotInternals& in = ballbot_ctrl_->internals();
      snap.tau_ref_x = in.tau_ref.tau_x;
      snap.tau_ref_y = in.tau_ref.tau_y;
      snap.phi_dot_ref_x = in.phi_dot_ref_x;
      snap.phi_dot_ref_y = in.phi_dot_ref_y;
    }
    snap.motor_torque = u;
    snap.motor_speed = plant.motor_speeds();
    snap.planar_torque = plant.drivetrain().planar_torques(u);

    if (outer && pc_.check_slip && !failed_) {
      try {
        snap.contact = kinematics::contact_forces(
            pc_.geometry, pc_.supported_mass,
            {snap.state.x.theta, snap.state.y.theta}, u, pc_.mu, pc_.wip.g);
        snap.slip = snap.contact->any_slip();
      } catch (const kinematics::ContactSeparation&) {
        snap.contact_separation = true;
        snap.slip = true;
      }
    }

    // A push along body X acts in the sagittal (y) plane and vice versa.
    const auto gy = dynamics::GeneralizedForce::horizontal_push(
        plant.params(), plant.state().y.theta, push.fx);
    const auto gx = dynamics::GeneralizedForce::horizontal_push(
        plant.params(), plant.state().x.theta, push.fy);
    plant.step(u, pc_.dt, gx, gy);
    const BallbotState& s = plant.state();
    if (std::max(std::abs(s.x.theta), std::abs(s.y.theta)) > pc_.tilt_bound) {
      failed_ = true;
    }
  }
  snap.balance_failure = failed_;
  ++ticks_;
  last_ = snap;
  return last_;
}

}  // namespace ballbot::sim
