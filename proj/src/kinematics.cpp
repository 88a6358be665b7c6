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

#include "ballbot/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ballbot::kinematics {

namespace {

constexpr double kMaxCondition = 1e6;

// Relative ball angular velocity produced by a unit rate of each ball
// coordinate. The ball does not spin about the vertical, so body yaw shows up
// as a negative relative spin.
const std::array<Eigen::Vector3d, 3> kCoordinateAxes = {
    Eigen::Vector3d(-1.0, 0.0, 0.0),  // phi_dot_x: translation along +Y
    Eigen::Vector3d(0.0, 1.0, 0.0),   // phi_dot_y: translation along +X
    Eigen::Vector3d(0.0, 0.0, -1.0),  // theta_dot_z: body yaw
};

double wrap_two_pi(double a) {
  double w = std::fmod(a, 2.0 * M_PI);
  if (w < 0.0) w += 2.0 * M_PI;
  return w;
}

}  // namespace

void DrivetrainGeometry::validate() const {
  if (!(r_s > 0.0) || !(r_o > 0.0) || !(gear_ratio > 0.0)) {
    throw GeometryError("radii and gear ratio must be positive");
  }
  if (!(alpha > 0.0 && alpha < M_PI / 2.0)) {
    throw GeometryError("contact angle must lie in (0, pi/2)");
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double d = std::abs(wrap_two_pi(gamma[i]) - wrap_two_pi(gamma[j]));
      d = std::min(d, 2.0 * M_PI - d);
      if (d < 1e-9) throw GeometryError("omniwheel azimuths must be distinct");
    }
  }
}

Drivetrain::Drivetrain(const DrivetrainGeometry& g) : geometry_(g) {
  geometry_.validate();
  const double scale = g.gear_ratio / g.r_o;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d c = contact_point(i);
    const Eigen::Vector3d d = drive_direction(i);
    for (int j = 0; j < 3; ++j) {
      jacobian_(i, j) = scale * d.dot(kCoordinateAxes[j].cross(c));
    }
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(jacobian_);
  const auto& sv = svd.singularValues();
  if (!(sv[2] > 0.0) || sv[0] / sv[2] > kMaxCondition) {
    throw GeometryError("drivetrain Jacobian is singular or ill-conditioned");
  }
  jacobian_inv_ = jacobian_.inverse();
}

Eigen::Vector3d Drivetrain::contact_point(int i) const {
  const double sa = std::sin(geometry_.alpha);
  const double ca = std::cos(geometry_.alpha);
  const double az = geometry_.gamma[i];
  return geometry_.r_s * Eigen::Vector3d(sa * std::cos(az), sa * std::sin(az), ca);
}

Eigen::Vector3d Drivetrain::drive_direction(int i) const {
  const double az = geometry_.gamma[i];
  return {std::sin(az), -std::cos(az), 0.0};
}

MotorVector Drivetrain::motor_speeds(const PlanarRates& pr) const {
  const Eigen::Vector3d q(pr.phi_dot_x - pr.theta_dot_x,
                          pr.phi_dot_y - pr.theta_dot_y, pr.theta_dot_z);
  return {jacobian_ * q};
}

MotorVector Drivetrain::motor_torques(const PlanarTorques& t) const {
  // Power conjugate of the speed map: tau = J^T u.
  return {jacobian_inv_.transpose() * t.vec()};
}

RatesEstimate Drivetrain::planar_rates(const MotorVector& speeds,
                                       const TiltRates& tilt,
                                       std::optional<double> measured_yaw_rate) const {
  RatesEstimate out;
  Eigen::Vector3d q;
  if (!measured_yaw_rate) {
    q = jacobian_inv_ * speeds.values;
  } else {
    const Eigen::Vector3d rhs =
        speeds.values - jacobian_.col(2) * (*measured_yaw_rate);
    const Eigen::Matrix<double, 3, 2> j_xy = jacobian_.leftCols<2>();
    const Eigen::Vector2d xy = j_xy.colPivHouseholderQr().solve(rhs);
    q = {xy[0], xy[1], *measured_yaw_rate};
    out.residual = (jacobian_ * q - speeds.values).norm();
  }
  out.rates.phi_dot_x = q[0] + tilt.theta_dot_x;
  out.rates.phi_dot_y = q[1] + tilt.theta_dot_y;
  out.rates.theta_dot_x = tilt.theta_dot_x;
  out.rates.theta_dot_y = tilt.theta_dot_y;
  out.rates.theta_dot_z = q[2];
  return out;
}

PlanarTorques Drivetrain::planar_torques(const MotorVector& torques) const {
  const Eigen::Vector3d t = jacobian_.transpose() * torques.values;
  return {t[0], t[1], t[2]};
}

MotorVector motor_speeds_from_planar(const DrivetrainGeometry& g,
                                     const PlanarRates& pr) {
  return Drivetrain(g).motor_speeds(pr);
}

MotorVector motor_torques_from_planar(const DrivetrainGeometry& g, double tau_x,
                                      double tau_y, double tau_z) {
  return Drivetrain(g).motor_torques({tau_x, tau_y, tau_z});
}

RatesEstimate planar_rates_from_motor(const DrivetrainGeometry& g,
                                      const MotorVector& speeds,
                                      const TiltRates& tilt,
                                      std::optional<double> measured_yaw_rate) {
  return Drivetrain(g).planar_rates(speeds, tilt, measured_yaw_rate);
}

PlanarTorques planar_torques_from_motor(const DrivetrainGeometry& g,
                                        const MotorVector& torques) {
  return Drivetrain(g).planar_torques(torques);
}

double ContactReport::min_margin() const {
  return std::min({margin[0], margin[1], margin[2]});
}

ContactReport contact_forces(const DrivetrainGeometry& g, double supported_mass,
                             const Tilt& tilt, const MotorVector& motor_torques,
                             double mu, double gravity) {
  if (!(supported_mass > 0.0)) {
    throw std::invalid_argument("supported mass must be positive");
  }
  const Drivetrain dt(g);
  Eigen::Matrix3d normals;
  for (int i = 0; i < 3; ++i) normals.col(i) = dt.contact_point(i) / g.r_s;

  const double weight = supported_mass * gravity;
  const Eigen::Vector3d load(weight * std::tan(tilt.theta_y),
                             weight * std::tan(tilt.theta_x), weight);
  const Eigen::Vector3d n = normals.partialPivLu().solve(load);

  ContactReport report;
  for (int i = 0; i < 3; ++i) {
    if (n[i] < 0.0) {
      throw ContactSeparation("omniwheel " + std::to_string(i + 1) +
                              " would lose contact");
    }
    report.normal[i] = n[i];
    report.tangential[i] = g.gear_ratio * motor_torques[i] / g.r_o;
    report.margin[i] = mu * n[i] - std::abs(report.tangential[i]);
    report.slip[i] = report.margin[i] < 0.0;
  }
  return report;
}

}  // namespace ballbot::kinematics
