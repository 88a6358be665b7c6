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

#include <gtest/gtest.h>

#include <random>

#include "ballbot/kinematics.hpp"

namespace ballbot {
namespace {

using namespace kinematics;

/// Motor speed of omniwheel i from the contact-point velocity written out in
/// closed form. Ball angular velocity is (-q_x, q_y, -q_z) for relative ball
/// rates q; the drive direction is tangent to the wheel circle.
double oracle_motor_speed(const DrivetrainGeometry& g, int i, double qx, double qy,
                          double qz) {
  const double sg = std::sin(g.gamma[i]);
  const double cg = std::cos(g.gamma[i]);
  const double sa = std::sin(g.alpha);
  const double ca = std::cos(g.alpha);
  return g.gear_ratio * g.r_s / g.r_o * (ca * (qy * sg - qx * cg) + qz * sa);
}

TEST(Drivetrain, JacobianMatchesPointVelocityOracle) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  const Drivetrain dt(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const PlanarRates pr{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const MotorVector m = dt.motor_speeds(pr);
    for (int i = 0; i < 3; ++i) {
      const double o = oracle_motor_speed(g, i, pr.phi_dot_x - pr.theta_dot_x,
                                          pr.phi_dot_y - pr.theta_dot_y, pr.theta_dot_z);
      ASSERT_NEAR(m[i], o, 1e-12 * std::max(1.0, std::abs(o)));
    }
  }
}

TEST(Drivetrain, TranslationTowardAWheelLeavesItIdle) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  const Drivetrain dt(g);
  for (int i = 0; i < 3; ++i) {
    const auto [px, py] = heading_to_phi_dot(1.0, g.gamma[i], g.r_s);
    const MotorVector m = dt.motor_speeds({px, py, 0.0, 0.0, 0.0});
    EXPECT_NEAR(m[i], 0.0, 1e-12);
    EXPECT_GT(std::abs(m[(i + 1) % 3]), 1.0);
  }
}

TEST(Drivetrain, RoundTripIdentity) {
  const Drivetrain dt(DrivetrainGeometry::miapure());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const PlanarRates pr{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const MotorVector m = dt.motor_speeds(pr);
    const RatesEstimate back = dt.planar_rates(m, {pr.theta_dot_x, pr.theta_dot_y});
    const double scale = std::max(1.0, std::abs(u.b()));
    ASSERT_LE(std::abs(back.rates.phi_dot_x - pr.phi_dot_x) / scale, 1e-12);
    ASSERT_LE(std::abs(back.rates.phi_dot_y - pr.phi_dot_y) / scale, 1e-12);
    ASSERT_LE(std::abs(back.rates.theta_dot_z - pr.theta_dot_z) / scale, 1e-12);

    const PlanarTorques t{u(rng), u(rng), u(rng)};
    const PlanarTorques t2 = dt.planar_torques(dt.motor_torques(t));
    ASSERT_LE((t2.vec() - t.vec()).norm() / scale, 1e-12);
  }
}

TEST(Drivetrain, PowerConservation) {
  const Drivetrain dt(DrivetrainGeometry::miapure());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const PlanarRates pr{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const PlanarTorques t{u(rng), u(rng), u(rng)};
    const MotorVector w = dt.motor_speeds(pr);
    const MotorVector m = dt.motor_torques(t);
    const double p_motor = m.values.dot(w.values);
    const double p_planar = t.tau_x * (pr.phi_dot_x - pr.theta_dot_x) +
                            t.tau_y * (pr.phi_dot_y - pr.theta_dot_y) +
                            t.tau_z * pr.theta_dot_z;
    const double scale = (m.values.array() * w.values.array()).abs().sum();
    ASSERT_LE(std::abs(p_motor - p_planar) / std::max(scale, 1e-12), 1e-9);
  }
}

TEST(Drivetrain, CyclicSymmetryUnderHeadingRotation) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  const Drivetrain dt(g);
  for (double h : {0.0, 0.3, 1.0, 2.5, -1.2}) {
    const auto [ax, ay] = heading_to_phi_dot(1.3, h, g.r_s);
    const auto [bx, by] = heading_to_phi_dot(1.3, h + 2.0 * M_PI / 3.0, g.r_s);
    const MotorVector a = dt.motor_speeds({ax, ay, 0.0, 0.0, 0.0});
    const MotorVector b = dt.motor_speeds({bx, by, 0.0, 0.0, 0.0});
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(b[(i + 1) % 3], a[i], 1e-12);
  }
}

TEST(Drivetrain, YawOnlySpinsAllMotorsEqually) {
  const Drivetrain dt(DrivetrainGeometry::miapure());
  const MotorVector m = dt.motor_speeds({0.0, 0.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(m[0], m[1], 1e-12);
  EXPECT_NEAR(m[1], m[2], 1e-12);
  EXPECT_NE(m[0], 0.0);
}

TEST(Drivetrain, YawMeasuredLeastSquaresReportsResidual) {
  const Drivetrain dt(DrivetrainGeometry::miapure());
  const PlanarRates pr{1.0, 2.0, 0.0, 0.0, 0.5};
  const MotorVector m = dt.motor_speeds(pr);
  const RatesEstimate exact = dt.planar_rates(m, {}, 0.5);
  EXPECT_NEAR(exact.residual, 0.0, 1e-10);
  EXPECT_NEAR(exact.rates.phi_dot_x, 1.0, 1e-10);
  const RatesEstimate off = dt.planar_rates(m, {}, 0.6);
  EXPECT_GT(off.residual, 1e-3);
}

TEST(Geometry, RejectsDegenerateLayouts) {
  DrivetrainGeometry g;
  g.gamma = {0.0, 0.0, 1.0};
  EXPECT_THROW(g.validate(), GeometryError);
  g = DrivetrainGeometry{};
  g.alpha = M_PI / 2;
  EXPECT_THROW(g.validate(), GeometryError);
  g = DrivetrainGeometry{};
  g.r_o = 0.0;
  EXPECT_THROW(Drivetrain{g}, GeometryError);
}

TEST(Heading, DecompositionConvention) {
  const auto [px, py] = heading_to_phi_dot(1.0, M_PI, 0.1145);
  EXPECT_NEAR(py, -1.0 / 0.1145, 1e-12);
  EXPECT_NEAR(py, -8.73, 5e-3);
  EXPECT_NEAR(px, 0.0, 1e-12);
  const auto [qx, qy] = heading_to_phi_dot(2.0, M_PI / 2, 0.1145);
  EXPECT_NEAR(qx, 2.0 / 0.1145, 1e-12);
  EXPECT_NEAR(qy, 0.0, 1e-12);
}

TEST(Contact, UprightUnloadedSharesWeightEqually) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  const ContactReport r = contact_forces(g, 74.3, {}, {}, 0.8);
  double sum_vertical = 0.0;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.normal[i], r.normal[0], 1e-9);
    sum_vertical += r.normal[i] * std::cos(g.alpha);
    EXPECT_FALSE(r.slip[i]);
  }
  EXPECT_NEAR(sum_vertical, 74.3 * 9.81, 1e-9);
}

TEST(Contact, ForceBalanceOracle) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  const Drivetrain dt(g);
  const Tilt tilt{0.05, -0.08};
  const ContactReport r = contact_forces(g, 50.0, tilt, {}, 0.8);
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (int i = 0; i < 3; ++i) total += r.normal[i] * dt.contact_point(i) / g.r_s;
  const double w = 50.0 * 9.81;
  EXPECT_NEAR(total[0], w * std::tan(tilt.theta_y), 1e-9);
  EXPECT_NEAR(total[1], w * std::tan(tilt.theta_x), 1e-9);
  EXPECT_NEAR(total[2], w, 1e-9);
}

TEST(Contact, MarginDecreasesWithForwardLeanTowardWheelOne) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  double prev = INFINITY;
  for (int k = 0; k <= 30; ++k) {
    const double lean = 0.01 * k;
    const ContactReport r = contact_forces(g, 74.3, {0.0, lean}, {}, 0.8);
    ASSERT_LT(r.min_margin(), prev) << "lean " << lean;
    prev = r.min_margin();
  }
}

TEST(Contact, TorqueBeyondFrictionConeSlips) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  MotorVector u;
  u[0] = 10.0;
  const ContactReport r = contact_forces(g, 74.3, {}, u, 0.8);
  EXPECT_NEAR(r.tangential[0], g.gear_ratio * 10.0 / g.r_o, 1e-9);
  EXPECT_TRUE(r.slip[0]);
  EXPECT_TRUE(r.any_slip());
  EXPECT_FALSE(r.slip[1]);
}

TEST(Contact, ExtremeLeanSeparatesAWheel) {
  const DrivetrainGeometry g = DrivetrainGeometry::miapure();
  EXPECT_THROW(contact_forces(g, 74.3, {0.0, 1.4}, {}, 0.8), ContactSeparation);
  EXPECT_THROW(contact_forces(g, 0.0, {}, {}, 0.8), std::invalid_argument);
}

}  // namespace
}  // namespace ballbot
