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

// Three-omniwheel drivetrain kinematics.
//
// Body frame: X points from the ball center toward omniwheel 1 (azimuth 0),
// Z points up. Translation along X lives in the sagittal ("y") plane and is
// described by phi_y / theta_y; translation along Y lives in the frontal
// ("x") plane and is described by phi_x / theta_x. Positive tilt leans the
// body toward the positive translation direction of its plane.
//
// A heading h translates along (cos h, sin h), so
//   phi_dot_y = v cos(h) / r_s,  phi_dot_x = v sin(h) / r_s.

#pragma once

#include <array>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

namespace ballbot::kinematics {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a required normal force turns negative.
class ContactSeparation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DrivetrainGeometry {
  double r_s = 0.1145;       // spherical wheel radius, m
  double r_o = 0.0625;       // omniwheel radius, m
  double alpha = M_PI / 4;   // contact angle from vertical, rad
  std::array<double, 3> gamma{0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  double gear_ratio = 7.5;   // motor turns per omniwheel turn

  void validate() const;
  static DrivetrainGeometry miapure() { return {}; }
};

struct PlanarRates {
  double phi_dot_x = 0.0;
  double phi_dot_y = 0.0;
  double theta_dot_x = 0.0;
  double theta_dot_y = 0.0;
  double theta_dot_z = 0.0;
};

struct PlanarTorques {
  double tau_x = 0.0;
  double tau_y = 0.0;
  double tau_z = 0.0;

  Eigen::Vector3d vec() const { return {tau_x, tau_y, tau_z}; }
};

/// One value per omniwheel motor, OW1 at azimuth 0.
struct MotorVector {
  Eigen::Vector3d values = Eigen::Vector3d::Zero();

  double& operator[](int i) { return values[i]; }
  double operator[](int i) const { return values[i]; }
};

struct TiltRates {
  double theta_dot_x = 0.0;
  double theta_dot_y = 0.0;
};

struct RatesEstimate {
  PlanarRates rates;
  /// Norm of the speed mismatch left after projection, rad/s (motor side).
  double residual = 0.0;
};

/// Cached speed Jacobian for one geometry.
///
/// The Jacobian maps relative ball coordinates
/// (phi_dot_x - theta_dot_x, phi_dot_y - theta_dot_y, theta_dot_z) to motor
/// speeds. Row i is built from the contact point c_i on the upper hemisphere
/// at colatitude alpha and azimuth gamma_i and the omniwheel drive direction
/// d_i = (sin gamma_i, -cos gamma_i, 0): psi_dot_i = (N / r_o) d_i . (w x c_i).
class Drivetrain {
 public:
  explicit Drivetrain(const DrivetrainGeometry& g);

  const DrivetrainGeometry& geometry() const { return geometry_; }
  const Eigen::Matrix3d& jacobian() const { return jacobian_; }

  Eigen::Vector3d contact_point(int i) const;
  Eigen::Vector3d drive_direction(int i) const;

  MotorVector motor_speeds(const PlanarRates& pr) const;
  MotorVector motor_torques(const PlanarTorques& t) const;

  /// Inverts the speed map. With no yaw measurement the 3x3 system is solved
  /// exactly; with one, (phi_dot_x, phi_dot_y) is the least-squares fit and
  /// the residual reports the inconsistency.
  RatesEstimate planar_rates(const MotorVector& speeds, const TiltRates& tilt,
                             std::optional<double> measured_yaw_rate = {}) const;
  PlanarTorques planar_torques(const MotorVector& torques) const;

 private:
  DrivetrainGeometry geometry_;
  Eigen::Matrix3d jacobian_;
  Eigen::Matrix3d jacobian_inv_;
};

MotorVector motor_speeds_from_planar(const DrivetrainGeometry& g,
                                     const PlanarRates& pr);
MotorVector motor_torques_from_planar(const DrivetrainGeometry& g, double tau_x,
                                      double tau_y, double tau_z);
RatesEstimate planar_rates_from_motor(const DrivetrainGeometry& g,
                                      const MotorVector& speeds,
                                      const TiltRates& tilt = {},
                                      std::optional<double> measured_yaw_rate = {});
PlanarTorques planar_torques_from_motor(const DrivetrainGeometry& g,
                                        const MotorVector& torques);

/// Planar wheel rates for translation at `speed` (m/s) along `heading` (rad).
inline std::pair<double, double> heading_to_phi_dot(double speed, double heading,
                                                    double r_s) {
  return {speed * std::sin(heading) / r_s, speed * std::cos(heading) / r_s};
}

struct ContactReport {
  std::array<double, 3> normal{};      // N
  std::array<double, 3> tangential{};  // N, signed along the drive direction
  std::array<double, 3> margin{};      // mu N - |F_t|, N
  std::array<bool, 3> slip{};

  double min_margin() const;
  bool any_slip() const { return slip[0] || slip[1] || slip[2]; }
};

struct Tilt {
  double theta_x = 0.0;
  double theta_y = 0.0;
};

/// Quasi-static three-contact force balance.
///
/// The leaning body loads the ball with m g vertically plus m g tan(theta)
/// horizontally in the lean direction; that load is resolved along the three
/// contact normals (all through the ball center). Drive reactions are purely
/// tangential: F_t,i = N u_i / r_o.
ContactReport contact_forces(const DrivetrainGeometry& g, double supported_mass,
                             const Tilt& tilt, const MotorVector& motor_torques,
                             double mu, double gravity = 9.81);

}  // namespace ballbot::kinematics
