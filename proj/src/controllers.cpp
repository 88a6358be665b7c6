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

#include "ballbot/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ballbot::control {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kLqr:
      return "lqr";
    case ControllerKind::kPiPd:
      return "pi-pd";
    case ControllerKind::kLqrPi:
      return "lqr-pi";
  }
  return "unknown";
}

ControllerKind parse_controller_kind(std::string_view name) {
  if (name == "lqr") return ControllerKind::kLqr;
  if (name == "pi-pd") return ControllerKind::kPiPd;
  if (name == "lqr-pi") return ControllerKind::kLqrPi;
  throw std::invalid_argument("unknown controller '" + std::string(name) +
                              "' (expected lqr, pi-pd or lqr-pi)");
}

double lqr_torque(const LqrGains& k, const CommandState& cmd,
                  const dynamics::PlanarState& s) {
  return k.k1 * (cmd.theta_c - s.theta) + k.k2 * (cmd.theta_dot_c - s.theta_dot) +
         k.k3 * (cmd.phi_dot_c - s.phi_dot);
}

double reference_model_step(const dynamics::WipParams& p,
                            const dynamics::PlanarState& s, double tau_r,
                            double dt, ControllerState& cs) {
  if (!cs.reference_initialized) {
    cs.phi_dot_ref = s.phi_dot;
    cs.reference_initialized = true;
  }
  cs.phi_dot_ref += dynamics::wip_accel(p, s, tau_r).phi_ddot * dt;
  return cs.phi_dot_ref;
}

double pi_step(ControllerState& cs, const PiGains& g, double phi_dot_ref,
               double phi_dot_meas, double dt) {
  const double e = phi_dot_ref - phi_dot_meas;
  cs.integrator = std::clamp(cs.integrator + e * dt, -g.integrator_limit,
                             g.integrator_limit);
  return g.k_p * e + g.k_i * cs.integrator;
}

double pi_pd_step(ControllerState& cs, const PdGains& g, double phi_dot_c,
                  const dynamics::PlanarState& s, double dt) {
  const double e_v = phi_dot_c - s.phi_dot;
  if (g.k_i_outer > 0.0) {
    const double limit = g.tilt_limit / g.k_i_outer;
    cs.outer_integrator = std::clamp(cs.outer_integrator + e_v * dt, -limit, limit);
  }
  cs.theta_ref = std::clamp(g.k_p_outer * e_v + g.k_i_outer * cs.outer_integrator,
                            -g.tilt_limit, g.tilt_limit);
  return g.k_p_tilt * (s.theta - cs.theta_ref) + g.k_d_tilt * s.theta_dot;
}

int RateConfig::ratio() const {
  if (!(outer_hz > 0.0) || !(inner_hz >= outer_hz)) {
    throw std::invalid_argument("control rates must satisfy 0 < outer <= inner");
  }
  const double r = inner_hz / outer_hz;
  const double rounded = std::round(r);
  if (std::abs(r - rounded) > 1e-9) {
    throw std::invalid_argument("inner/outer rate ratio must be an integer");
  }
  return static_cast<int>(rounded);
}

PlanarController::PlanarController(ControllerKind kind,
                                   const dynamics::WipParams& reference_model,
                                   const PlanarGains& gains, const RateConfig& rates,
                                   double torque_limit)
    : kind_(kind),
      model_(reference_model),
      gains_(gains),
      rates_(rates),
      ratio_(rates.ratio()),
      torque_limit_(torque_limit) {
  model_.validate();
}

void PlanarController::reset() {
  tick_count_ = 0;
  state_ = {};
  internals_ = {};
}

double PlanarController::tick(const dynamics::PlanarState& measured,
                              const CommandState& cmd) {
  const bool outer = next_tick_is_outer();
  ++tick_count_;
  double tau = 0.0;
  switch (kind_) {
    case ControllerKind::kLqr:
      if (outer) {
        state_.held_torque = lqr_torque(gains_.lqr, cmd, measured);
        internals_.tau_ref = state_.held_torque;
      }
      tau = state_.held_torque;
      break;
    case ControllerKind::kPiPd:
      if (outer) {
        state_.held_torque =
            pi_pd_step(state_, gains_.pd, cmd.phi_dot_c, measured, rates_.outer_dt());
        internals_.theta_ref = state_.theta_ref;
      }
      tau = state_.held_torque;
      break;
    case ControllerKind::kLqrPi:
      if (outer) {
        state_.tau_ref = lqr_torque(gains_.lqr, cmd, measured);
        reference_model_step(model_, measured, state_.tau_ref, rates_.outer_dt(),
                             state_);
        internals_.tau_ref = state_.tau_ref;
        internals_.phi_dot_ref = state_.phi_dot_ref;
      }
      internals_.tau_track = pi_step(state_, gains_.pi, state_.phi_dot_ref,
                                     measured.phi_dot, rates_.inner_dt());
      tau = state_.tau_ref + internals_.tau_track;
      break;
  }
  return std::clamp(tau, -torque_limit_, torque_limit_);
}

}  // namespace ballbot::control
