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

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ballbot::dynamics {

/// Balance is declared lost when the body tilt leaves this envelope (rad).
inline constexpr double kTiltFailureBound = 0.5;

class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical parameters of a planar wheeled inverted pendulum.
///
/// The body pivots about the wheel center. `phi` is the absolute wheel
/// rotation and the wheel rolls without slip, so the wheel center moves
/// x = r * phi. The actuator applies +tau to the wheel and -tau to the body.
struct WipParams {
  double m_b = 0.0;  // body mass, kg
  double m_w = 0.0;  // wheel mass, kg
  double I_b = 0.0;  // body inertia about its COM, kg m^2
  double I_w = 0.0;  // wheel inertia about its center, kg m^2
  double l = 0.0;    // wheel center to body COM, m
  double r = 0.0;    // wheel radius, m
  double g = 9.81;   // m/s^2

  /// Throws InvalidParams unless every quantity is strictly positive.
  void validate() const;

  /// Full-scale drivetrain carrying a 60 kg payload.
  static WipParams miapure();
  /// Half-size, one-fifth-weight planar testbed.
  static WipParams piptb();
};

/// Thin spherical shell inertia, 2/3 m r^2.
inline double thin_shell_inertia(double mass, double radius) {
  return 2.0 / 3.0 * mass * radius * radius;
}

/// s = [theta, phi, theta_dot, phi_dot].
struct PlanarState {
  double theta = 0.0;
  double phi = 0.0;
  double theta_dot = 0.0;
  double phi_dot = 0.0;

  Eigen::Vector4d vec() const { return {theta, phi, theta_dot, phi_dot}; }
  static PlanarState from_vec(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }
  PlanarState operator-() const { return {-theta, -phi, -theta_dot, -phi_dot}; }

  /// Translation speed of the wheel center.
  double speed(const WipParams& p) const { return p.r * phi_dot; }
  bool operator==(const PlanarState&) const = default;
};

struct WipAccel {
  double theta_ddot = 0.0;
  double phi_ddot = 0.0;
};

/// Generalized forces from an external push: Q_theta on the body coordinate,
/// Q_phi on the wheel coordinate.
struct GeneralizedForce {
  double q_theta = 0.0;
  double q_phi = 0.0;

  /// A horizontal force applied at the body COM.
  static GeneralizedForce horizontal_push(const WipParams& p, double theta,
                                          double force) {
    return {force * p.l * std::cos(theta), force * p.r};
  }
};

/// Frictionless equations of motion.
WipAccel wip_accel(const WipParams& p, const PlanarState& s, double tau);
WipAccel wip_accel(const WipParams& p, const PlanarState& s, double tau,
                   const GeneralizedForce& external);

/// Transmission friction between motor and wheel.
///
/// Static regime: |omega| < omega_eps and the applied torque is within
/// tau_stiction, friction cancels the applied torque. Sliding regime:
/// sgn(omega) (tau_coulomb + (tau_stiction - tau_coulomb) e^{-|omega|/omega_stribeck})
/// + b_v omega.
struct FrictionParams {
  double tau_stiction = 0.0;
  double tau_coulomb = 0.0;
  double b_v = 0.0;
  double omega_stribeck = 0.1;
  double omega_eps = 1e-3;

  void validate() const;
  static FrictionParams none() { return {}; }
};

/// Friction torque opposing the applied torque `tau_applied` at wheel speed
/// `omega`.
double friction_torque(const FrictionParams& f, double omega, double tau_applied);

WipAccel wip_accel_frictional(const WipParams& p, const FrictionParams& f,
                              const PlanarState& s, double tau);
WipAccel wip_accel_frictional(const WipParams& p, const FrictionParams& f,
                              const PlanarState& s, double tau,
                              const GeneralizedForce& external);

/// Yaw model: I_z q_z'' + c_v q_z' + c_c sgn(q_z') = tau_z.
struct SpinParams {
  double I_z = 1.0;
  double c_v = 0.0;
  double c_c = 0.0;

  void validate() const;
};

/// Sign with a dead band of width `eps` around zero.
inline double sgn_band(double x, double eps = 1e-3) {
  if (std::abs(x) < eps) return 0.0;
  return x > 0.0 ? 1.0 : -1.0;
}

double spin_accel(const SpinParams& sp, double omega_z, double tau_z);

/// Jacobians of the frictionless dynamics at the upright fixed point.
struct LinearModel {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d B = Eigen::Vector4d::Zero();
};

LinearModel linearize(const WipParams& p);

/// Kinetic plus potential energy; zero at upright rest.
double total_energy(const WipParams& p, const PlanarState& s);

/// Classical fourth order Runge-Kutta step. `deriv(s)` returns ds/dt.
template <typename State, typename Deriv>
State step_rk4(Deriv&& deriv, const State& s, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
  const State k1 = deriv(s);
  const State k2 = deriv(State(s + 0.5 * dt * k1));
  const State k3 = deriv(State(s + 0.5 * dt * k2));
  const State k4 = deriv(State(s + dt * k3));
  State next = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw IntegrationError("step_rk4: non-finite state");
  }
  return next;
}

/// ds/dt of one WIP plane under a constant torque over the step.
Eigen::Vector4d wip_derivative(const WipParams& p, const FrictionParams& f,
                               const Eigen::Vector4d& s, double tau,
                               const GeneralizedForce& external = {});

}  // namespace ballbot::dynamics
