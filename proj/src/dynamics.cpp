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

#include "ballbot/dynamics.hpp"

#include <cassert>
#include <cmath>

namespace ballbot::dynamics {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidParams(std::string(name) + " must be positive and finite");
  }
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidParams(std::string(name) + " must be non-negative and finite");
  }
}

}  // namespace

void WipParams::validate() const {
  require_positive(m_b, "m_b");
  require_positive(m_w, "m_w");
  require_positive(I_b, "I_b");
  require_positive(I_w, "I_w");
  require_positive(l, "l");
  require_positive(r, "r");
  require_positive(g, "g");
}

WipParams WipParams::miapure() {
  WipParams p;
  p.m_w = 3.6;
  p.r = 0.1145;
  p.I_w = thin_shell_inertia(p.m_w, p.r);
  // 60 kg payload plus the 17.9 kg drivetrain, less the wheel itself.
  p.m_b = 60.0 + 17.9 - 3.6;
  p.l = 0.5;
  p.I_b = p.m_b * p.l * p.l / 3.0;
  p.g = 9.81;
  return p;
}

WipParams WipParams::piptb() {
  WipParams p;
  p.m_w = 1.0;
  p.r = 0.0573;
  p.I_w = thin_shell_inertia(p.m_w, p.r);
  p.m_b = 14.6;
  p.l = 0.25;
  p.I_b = p.m_b * p.l * p.l / 3.0;
  p.g = 9.81;
  return p;
}

WipAccel wip_accel(const WipParams& p, const PlanarState& s, double tau) {
  return wip_accel(p, s, tau, GeneralizedForce{});
}

WipAccel wip_accel(const WipParams& p, const PlanarState& s, double tau,
                   const GeneralizedForce& external) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double coupling = p.m_b * p.r * p.l * c;
  const double m_theta = p.I_b + p.m_b * p.l * p.l;
  const double m_phi = (p.m_b + p.m_w) * p.r * p.r + p.I_w;

  const double rhs_theta = -tau + p.m_b * p.g * p.l * sn + external.q_theta;
  const double rhs_phi =
      tau + p.m_b * p.r * p.l * sn * s.theta_dot * s.theta_dot + external.q_phi;

  const double det = m_theta * m_phi - coupling * coupling;
  assert(det > 0.0);
  return {(m_phi * rhs_theta - coupling * rhs_phi) / det,
          (m_theta * rhs_phi - coupling * rhs_theta) / det};
}

void FrictionParams::validate() const {
  require_nonnegative(tau_coulomb, "tau_coulomb");
  require_nonnegative(tau_stiction, "tau_stiction");
  if (tau_coulomb > tau_stiction) {
    throw InvalidParams("tau_coulomb must not exceed tau_stiction");
  }
  require_nonnegative(b_v, "b_v");
  require_positive(omega_stribeck, "omega_stribeck");
  require_positive(omega_eps, "omega_eps");
}

double friction_torque(const FrictionParams& f, double omega, double tau_applied) {
  if (std::abs(omega) < f.omega_eps) {
    if (std::abs(tau_applied) <= f.tau_stiction) return tau_applied;
    // Breakaway: the sliding law at zero speed, pointing against the push.
    const double sign = tau_applied > 0.0 ? 1.0 : -1.0;
    return sign * f.tau_stiction + f.b_v * omega;
  }
  const double sign = omega > 0.0 ? 1.0 : -1.0;
  const double stribeck = (f.tau_stiction - f.tau_coulomb) *
                          std::exp(-std::abs(omega) / f.omega_stribeck);
  return sign * (f.tau_coulomb + stribeck) + f.b_v * omega;
}

WipAccel wip_accel_frictional(const WipParams& p, const FrictionParams& f,
                              const PlanarState& s, double tau) {
  return wip_accel_frictional(p, f, s, tau, GeneralizedForce{});
}

WipAccel wip_accel_frictional(const WipParams& p, const FrictionParams& f,
                              const PlanarState& s, double tau,
                              const GeneralizedForce& external) {
  const double tau_eff = tau - friction_torque(f, s.phi_dot, tau);
  return wip_accel(p, s, tau_eff, external);
}

void SpinParams::validate() const {
  require_positive(I_z, "I_z");
  require_nonnegative(c_v, "c_v");
  require_nonnegative(c_c, "c_c");
}

double spin_accel(const SpinParams& sp, double omega_z, double tau_z) {
  return (tau_z - sp.c_v * omega_z - sp.c_c * sgn_band(omega_z)) / sp.I_z;
}

LinearModel linearize(const WipParams& p) {
  const double m_theta = p.I_b + p.m_b * p.l * p.l;
  const double m_phi = (p.m_b + p.m_w) * p.r * p.r + p.I_w;
  const double coupling = p.m_b * p.r * p.l;
  const double det = m_theta * m_phi - coupling * coupling;
  const double gravity = p.m_b * p.g * p.l;

  // Inverse mass matrix at theta = 0.
  const double inv_tt = m_phi / det;
  const double inv_tp = -coupling / det;
  const double inv_pp = m_theta / det;

  LinearModel lm;
  lm.A(0, 2) = 1.0;
  lm.A(1, 3) = 1.0;
  lm.A(2, 0) = inv_tt * gravity;
  lm.A(3, 0) = inv_tp * gravity;
  // Generalized input direction is [-1, +1] on [theta, phi].
  lm.B(2) = -inv_tt + inv_tp;
  lm.B(3) = -inv_tp + inv_pp;
  return lm;
}

double total_energy(const WipParams& p, const PlanarState& s) {
  const double m_theta = p.I_b + p.m_b * p.l * p.l;
  const double m_phi = (p.m_b + p.m_w) * p.r * p.r + p.I_w;
  const double coupling = p.m_b * p.r * p.l * std::cos(s.theta);
  const double kinetic = 0.5 * m_phi * s.phi_dot * s.phi_dot +
                         coupling * s.phi_dot * s.theta_dot +
                         0.5 * m_theta * s.theta_dot * s.theta_dot;
  const double potential = p.m_b * p.g * p.l * (std::cos(s.theta) - 1.0);
  return kinetic + potential;
}

Eigen::Vector4d wip_derivative(const WipParams& p, const FrictionParams& f,
                               const Eigen::Vector4d& s, double tau,
                               const GeneralizedForce& external) {
  const PlanarState ps = PlanarState::from_vec(s);
  const WipAccel a = wip_accel_frictional(p, f, ps, tau, external);
  return {ps.theta_dot, ps.phi_dot, a.theta_ddot, a.phi_ddot};
}

}  // namespace ballbot::dynamics
