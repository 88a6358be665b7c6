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

// Planar balancing controllers: LQR torque control, cascaded PI-PD and
// cascaded LQR-PI, with the 400 Hz / 8 kHz multi-rate schedule.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ballbot/dynamics.hpp"
#include "ballbot/lqr.hpp"

namespace ballbot::control {

enum class ControllerKind { kLqr, kPiPd, kLqrPi };

std::string_view to_string(ControllerKind kind);
/// Accepts "lqr", "pi-pd" and "lqr-pi".
ControllerKind parse_controller_kind(std::string_view name);

/// Commanded tilt, tilt rate and wheel speed. The wheel position command is
/// unused because its gain is structurally zero.
struct CommandState {
  double theta_c = 0.0;
  double phi_dot_c = 0.0;
  double theta_dot_c = 0.0;
};

struct PiGains {
  double k_p = 0.0;
  double k_i = 0.0;
  double integrator_limit = 1.0;
};

/// Outer PI on wheel speed producing a reference tilt, inner PD on tilt.
struct PdGains {
  double k_p_outer = 0.0;
  double k_i_outer = 0.0;
  double k_p_tilt = 0.0;
  double k_d_tilt = 0.0;
  double tilt_limit = 0.1;
};

struct ControllerState {
  double integrator = 0.0;        // inner PI accumulator
  double outer_integrator = 0.0;  // PI-PD speed-error accumulator
  double phi_dot_ref = 0.0;       // reference wheel speed
  double tau_ref = 0.0;           // held feedforward torque
  double held_torque = 0.0;       // held output for single-rate controllers
  double theta_ref = 0.0;         // PI-PD reference tilt
  bool reference_initialized = false;
};

/// tau_r = k1 (theta_c - theta) + k2 (theta_dot_c - theta_dot) + k3 (phi_dot_c - phi_dot).
double lqr_torque(const LqrGains& k, const CommandState& cmd,
                  const dynamics::PlanarState& s);

/// Advances the reference wheel speed by one outer period using the
/// frictionless model driven by tau_r from the measured state. On first use
/// the reference is seeded with the measured wheel speed.
double reference_model_step(const dynamics::WipParams& p,
                            const dynamics::PlanarState& s, double tau_r,
                            double dt, ControllerState& cs);

/// Speed PI with clamped integrator.
double pi_step(ControllerState& cs, const PiGains& g, double phi_dot_ref,
               double phi_dot_meas, double dt);

/// Cascaded PI-PD. The outer PI turns speed error into a reference tilt
/// (positive error leans the body forward); the inner PD drives the wheel
/// under the body: tau = k_p_tilt (theta - theta_r) + k_d_tilt theta_dot.
double pi_pd_step(ControllerState& cs, const PdGains& g, double phi_dot_c,
                  const dynamics::PlanarState& s, double dt);

struct RateConfig {
  double outer_hz = 400.0;
  double inner_hz = 8000.0;

  /// Inner ticks per outer tick; throws unless the ratio is a positive integer.
  int ratio() const;
  double outer_dt() const { return 1.0 / outer_hz; }
  double inner_dt() const { return 1.0 / inner_hz; }
};

struct PlanarGains {
  LqrGains lqr;
  PiGains pi;
  PdGains pd;
};

/// Values exposed for logging.
struct PlanarInternals {
  double tau_ref = 0.0;
  double phi_dot_ref = 0.0;
  double tau_track = 0.0;
  double theta_ref = 0.0;
};

/// One plane's controller executed on the inner-loop timeline.
///
/// `tick` is called once per inner period. Every `ratio()` ticks (starting
/// with the first) is an outer tick at which tilt measurements are consumed.
/// LQR and PI-PD hold their torque between outer ticks; LQR-PI adds the inner
/// PI tracking torque at every tick.
class PlanarController {
 public:
  PlanarController(ControllerKind kind, const dynamics::WipParams& reference_model,
                   const PlanarGains& gains, const RateConfig& rates,
                   double torque_limit);

  double tick(const dynamics::PlanarState& measured, const CommandState& cmd);
  void reset();

  bool next_tick_is_outer() const { return tick_count_ % ratio_ == 0; }
  ControllerKind kind() const { return kind_; }
  const ControllerState& state() const { return state_; }
  PlanarInternals internals() const { return internals_; }
  PlanarGains& gains() { return gains_; }
  const PlanarGains& gains() const { return gains_; }

 private:
  ControllerKind kind_;
  dynamics::WipParams model_;
  PlanarGains gains_;
  RateConfig rates_;
  int ratio_;
  double torque_limit_;
  long tick_count_ = 0;
  ControllerState state_;
  PlanarInternals internals_;
};

/// Default anti-windup limit: k_i * limit equals the torque ceiling.
inline double default_integrator_limit(double k_i, double torque_limit) {
  return k_i > 0.0 ? torque_limit / k_i : 1.0;
}

}  // namespace ballbot::control
