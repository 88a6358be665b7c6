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

#include "ballbot/dynamics.hpp"
#include "ballbot/plant.hpp"
#include "test_support.hpp"

namespace ballbot {
namespace {

using dynamics::FrictionParams;
using dynamics::PlanarState;
using dynamics::WipParams;
using testing::rel_err;

TEST(WipParams, RejectsNonPositiveQuantities) {
  WipParams p = WipParams::miapure();
  EXPECT_NO_THROW(p.validate());
  p.l = 0.0;
  EXPECT_THROW(p.validate(), dynamics::InvalidParams);
  p = WipParams::piptb();
  p.m_w = -1.0;
  EXPECT_THROW(p.validate(), dynamics::InvalidParams);
}

TEST(WipAccel, MatchesNumericLagrangianOnRandomStates) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(-0.5, 0.5), rate(-5.0, 5.0), tq(-40.0, 40.0);
  for (const WipParams& p : {WipParams::miapure(), WipParams::piptb(), testing::miapure().wip}) {
    for (int i = 0; i < 1000; ++i) {
      const PlanarState s{th(rng), rate(rng), rate(rng), 3.0 * rate(rng)};
      const double tau = tq(rng);
      const auto a = dynamics::wip_accel(p, s, tau);
      const Eigen::Vector2d o = testing::lagrangian_accel(p, s, tau);
      const double scale = std::max({std::abs(o[0]), std::abs(o[1]), 1e-6});
      ASSERT_LE(std::abs(a.theta_ddot - o[0]) / scale, 1e-8) << "state " << i;
      ASSERT_LE(std::abs(a.phi_ddot - o[1]) / scale, 1e-8) << "state " << i;
    }
  }
}

TEST(WipAccel, UprightRestIsEquilibrium) {
  const auto a = dynamics::wip_accel(WipParams::miapure(), {}, 0.0);
  EXPECT_EQ(a.theta_ddot, 0.0);
  EXPECT_EQ(a.phi_ddot, 0.0);
}

TEST(WipAccel, StateReflectionSymmetry) {
  const WipParams p = WipParams::piptb();
  const PlanarState s{0.2, 1.0, -0.4, 3.0};
  const auto a = dynamics::wip_accel(p, s, 1.5);
  const auto b = dynamics::wip_accel(p, -s, -1.5);
  EXPECT_NEAR(a.theta_ddot, -b.theta_ddot, 1e-12);
  EXPECT_NEAR(a.phi_ddot, -b.phi_ddot, 1e-12);
}

TEST(WipAccel, PositiveTorqueSpinsWheelForwardAndBodyBack) {
  const auto a = dynamics::wip_accel(WipParams::miapure(), {}, 5.0);
  EXPECT_GT(a.phi_ddot, 0.0);
  EXPECT_LT(a.theta_ddot, 0.0);
}

TEST(Energy, FreeSwingDriftBelowTolerance) {
  const WipParams p = WipParams::miapure();
  Eigen::Vector4d s(0.1, 0.0, 0.0, 0.0);
  const double e0 = dynamics::total_energy(p, PlanarState::from_vec(s));
  const auto deriv = [&](const Eigen::Vector4d& x) {
    return dynamics::wip_derivative(p, FrictionParams::none(), x, 0.0);
  };
  for (int k = 0; k < 10000; ++k) s = dynamics::step_rk4(deriv, s, 1e-4);
  const double e1 = dynamics::total_energy(p, PlanarState::from_vec(s));
  EXPECT_LE(std::abs(e1 - e0) / std::abs(e0), 1e-6);
  EXPECT_GT(std::abs(s[0]), 0.1);  // the body actually fell
}

TEST(Energy, TorquePowerBalance) {
  // dE/dt equals the actuator power tau (phi_dot - theta_dot).
  const WipParams p = WipParams::piptb();
  const PlanarState s{0.1, 0.0, 0.3, 2.0};
  const double tau = 2.0;
  const Eigen::Vector4d d = dynamics::wip_derivative(p, FrictionParams::none(), s.vec(), tau);
  const double h = 1e-6;
  const double de = (dynamics::total_energy(p, PlanarState::from_vec(s.vec() + h * d)) -
                     dynamics::total_energy(p, PlanarState::from_vec(s.vec() - h * d))) /
                    (2 * h);
  EXPECT_LE(rel_err(de, tau * (s.phi_dot - s.theta_dot)), 1e-6);
}

TEST(Rk4, RejectsNonPositiveStep) {
  const auto deriv = [](const Eigen::Vector4d& x) { return x; };
  EXPECT_THROW(dynamics::step_rk4(deriv, Eigen::Vector4d::Zero().eval(), 0.0),
               std::invalid_argument);
}

TEST(Rk4, FourthOrderConvergence) {
  const auto deriv = [](const Eigen::Vector4d& x) { return (-x).eval(); };
  const auto err = [&](int n) {
    Eigen::Vector4d s = Eigen::Vector4d::Ones();
    for (int k = 0; k < n; ++k) s = dynamics::step_rk4(deriv, s, 1.0 / n);
    return std::abs(s[0] - std::exp(-1.0));
  };
  EXPECT_NEAR(err(10) / err(20), 16.0, 1.0);
}

TEST(Rk4, NonFiniteStateThrows) {
  const auto deriv = [](const Eigen::Vector4d& x) { return (x * 1e300).eval(); };
  EXPECT_THROW(dynamics::step_rk4(deriv, Eigen::Vector4d::Ones().eval(), 1.0),
               dynamics::IntegrationError);
}

class FrictionLaw : public ::testing::Test {
 protected:
  FrictionParams f{5.0, 4.0, 1.7, 0.5, 1e-3};
};

TEST_F(FrictionLaw, StictionCancelsSmallTorqueAtRest) {
  EXPECT_DOUBLE_EQ(dynamics::friction_torque(f, 0.0, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(dynamics::friction_torque(f, 0.0, -4.9), -4.9);
}

TEST_F(FrictionLaw, BreakawayCapsAtStiction) {
  EXPECT_DOUBLE_EQ(dynamics::friction_torque(f, 0.0, 8.0), 5.0);
  EXPECT_DOUBLE_EQ(dynamics::friction_torque(f, 0.0, -8.0), -5.0);
}

TEST_F(FrictionLaw, SlidingStribeckCurve) {
  for (double w : {0.01, 0.5, 2.0, 10.0}) {
    const double expect =
        4.0 + (5.0 - 4.0) * std::exp(-w / 0.5) + 1.7 * w;
    EXPECT_NEAR(dynamics::friction_torque(f, w, 0.0), expect, 1e-12);
    EXPECT_NEAR(dynamics::friction_torque(f, -w, 0.0), -expect, 1e-12);
  }
}

TEST_F(FrictionLaw, ZeroFrictionIsInert) {
  const FrictionParams none = FrictionParams::none();
  const WipParams p = WipParams::piptb();
  const PlanarState s{0.05, 0.0, 0.1, 2.0};
  const auto a = dynamics::wip_accel(p, s, 1.0);
  const auto b = dynamics::wip_accel_frictional(p, none, s, 1.0);
  EXPECT_DOUBLE_EQ(a.theta_ddot, b.theta_ddot);
  EXPECT_DOUBLE_EQ(a.phi_ddot, b.phi_ddot);
}

TEST_F(FrictionLaw, CoastingPowerBalance) {
  // The friction torque rides on the actuator channel, so energy changes at
  // the rate tau_eff (phi_dot - theta_dot) and falls while the wheel outruns
  // the body.
  const WipParams p = WipParams::piptb();
  sim::PlanarPlant plant(p, f);
  plant.set_state({0.0, 0.0, 0.0, 10.0});
  const auto power = [&](const PlanarState& s) {
    const double tau_eff = -dynamics::friction_torque(f, s.phi_dot, 0.0);
    return tau_eff * (s.phi_dot - s.theta_dot);
  };
  const double dt = 1e-5;
  double e_prev = plant.energy();
  double work = 0.0;
  // Stop before the wheel reaches the stiction band, where the law switches.
  for (int k = 0; k < 20000 && plant.state().phi_dot > 0.5; ++k) {
    const PlanarState before = plant.state();
    plant.step(0.0, dt);
    const PlanarState after = plant.state();
    work += 0.5 * dt * (power(before) + power(after));
    if (before.phi_dot - before.theta_dot > 0.0 && after.phi_dot - after.theta_dot > 0.0) {
      ASSERT_LT(plant.energy(), e_prev) << "step " << k;
    }
    e_prev = plant.energy();
  }
  const double e0 = [&] {
    sim::PlanarPlant fresh(p, f);
    fresh.set_state({0.0, 0.0, 0.0, 10.0});
    return fresh.energy();
  }();
  // Trapezoid quadrature of the power is second order in dt.
  EXPECT_NEAR(plant.energy() - e0, work, 2e-6 * std::abs(work));
}

TEST(Linearize, MatchesFiniteDifferences) {
  for (const WipParams& p : {WipParams::miapure(), WipParams::piptb()}) {
    const dynamics::LinearModel m = dynamics::linearize(p);
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      e[j] = h;
      const Eigen::Vector4d col =
          (dynamics::wip_derivative(p, FrictionParams::none(), e, 0.0) -
           dynamics::wip_derivative(p, FrictionParams::none(), -e, 0.0)) /
          (2 * h);
      for (int i = 0; i < 4; ++i) {
        EXPECT_LE(std::abs(m.A(i, j) - col[i]), 1e-6 * std::max(1.0, std::abs(col[i])))
            << "A(" << i << "," << j << ")";
      }
    }
    const Eigen::Vector4d bcol =
        (dynamics::wip_derivative(p, FrictionParams::none(), Eigen::Vector4d::Zero(), h) -
         dynamics::wip_derivative(p, FrictionParams::none(), Eigen::Vector4d::Zero(), -h)) /
        (2 * h);
    for (int i = 0; i < 4; ++i) {
      EXPECT_LE(std::abs(m.B[i] - bcol[i]), 1e-6 * std::max(1.0, std::abs(bcol[i])));
    }
  }
}

TEST(Spin, ViscousAndCoulombOpposeMotion) {
  const dynamics::SpinParams sp{2.0, 0.5, 0.2};
  EXPECT_NEAR(dynamics::spin_accel(sp, 1.0, 0.0), (-0.5 - 0.2) / 2.0, 1e-12);
  EXPECT_NEAR(dynamics::spin_accel(sp, 0.0, 1.0), 0.5, 1e-12);
}

TEST(HorizontalPush, MapsToGeneralizedForces) {
  const WipParams p = WipParams::piptb();
  const auto q = dynamics::GeneralizedForce::horizontal_push(p, 0.0, 10.0);
  EXPECT_DOUBLE_EQ(q.q_theta, 10.0 * p.l);
  EXPECT_DOUBLE_EQ(q.q_phi, 10.0 * p.r);
}

}  // namespace
}  // namespace ballbot
