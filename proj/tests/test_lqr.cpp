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

#include <Eigen/Eigenvalues>

#include "ballbot/lqr.hpp"
#include "test_support.hpp"

namespace ballbot {
namespace {

using control::LqrWeights;

/// CARE solution from the stable invariant subspace of the Hamiltonian.
Eigen::MatrixXd hamiltonian_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  Eigen::MatrixXcd V(2 * n, n);
  int k = 0;
  for (int i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()[i].real() < 0.0) V.col(k++) = es.eigenvectors().col(i);
  }
  EXPECT_EQ(k, n);
  const Eigen::MatrixXcd X = V.topRows(n);
  const Eigen::MatrixXcd Y = V.bottomRows(n);
  return (Y * X.inverse()).real();
}

struct Reduced {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::Matrix3d Q;
};

Reduced reduced(const sim::PlatformConfig& pc) {
  Reduced r;
  testing::reduce(dynamics::linearize(pc.wip), r.A, r.B);
  const auto& q = pc.control.lqr.q_diag;
  r.Q = Eigen::Vector3d(q[0], q[2], q[3]).asDiagonal();
  return r;
}

class LqrOnPresets : public ::testing::TestWithParam<const char*> {
 protected:
  sim::PlatformConfig pc() const {
    return std::string(GetParam()) == "miapure" ? testing::miapure() : testing::piptb();
  }
};

TEST_P(LqrOnPresets, CareResidualAndHamiltonianOracle) {
  const sim::PlatformConfig p = pc();
  const Reduced r = reduced(p);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, p.control.lqr.r);
  const control::CareSolution sol = control::solve_care(r.A, r.B, r.Q, R);
  EXPECT_LE(sol.residual, 1e-8);
  EXPECT_LE(control::care_residual(r.A, r.B, r.Q, R, sol.P), 1e-8);
  const Eigen::MatrixXd P_h = hamiltonian_care(r.A, r.B, r.Q, R);
  EXPECT_LE((sol.P - P_h).norm() / P_h.norm(), 1e-8);
  // P is symmetric positive definite.
  EXPECT_LE((sol.P - sol.P.transpose()).norm(), 1e-9 * sol.P.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(sol.P);
  EXPECT_GT(se.eigenvalues().minCoeff(), 0.0);
}

TEST_P(LqrOnPresets, ReducedClosedLoopIsStable) {
  const sim::PlatformConfig p = pc();
  const Reduced r = reduced(p);
  control::CareSolution detail;
  const control::LqrGains k = control::solve_lqr(dynamics::linearize(p.wip), p.control.lqr,
                                                 &detail);
  // u = k . (command - state), so the closed loop is A - B k.
  const Eigen::RowVector3d kv(k.k1, k.k2, k.k3);
  const Eigen::Matrix3d Acl = r.A - r.B * kv;
  Eigen::EigenSolver<Eigen::Matrix3d> es(Acl);
  for (int i = 0; i < 3; ++i) EXPECT_LT(es.eigenvalues()[i].real(), 0.0);
  // u = -K x with a zero command, so k equals the Riccati feedback K.
  EXPECT_NEAR(k.k1, detail.K(0, 0), 1e-9 * std::abs(k.k1));
}

TEST_P(LqrOnPresets, FullLoopHasOnlyTheWheelPositionPoleAtZero) {
  const sim::PlatformConfig p = pc();
  const dynamics::LinearModel m = dynamics::linearize(p.wip);
  const control::LqrGains k = control::solve_lqr(m, p.control.lqr);
  const Eigen::Matrix4d Acl = m.A - m.B * k.full();
  Eigen::EigenSolver<Eigen::Matrix4d> es(Acl);
  int zeros = 0;
  for (int i = 0; i < 4; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev) < 1e-9) {
      ++zeros;
    } else {
      EXPECT_LT(ev.real(), 0.0);
    }
  }
  EXPECT_EQ(zeros, 1);
}

INSTANTIATE_TEST_SUITE_P(Presets, LqrOnPresets, ::testing::Values("miapure", "piptb"));

TEST(Lqr, PiptbGainsWithTunedWeights) {
  const control::LqrGains k =
      control::solve_lqr(dynamics::linearize(testing::piptb().wip), testing::piptb().control.lqr);
  // Negative signs follow u = k (command - state) with the wheel torque acting
  // backward on the body.
  EXPECT_LT(k.k1, 0.0);
  EXPECT_LT(k.k2, 0.0);
  EXPECT_NEAR(k.k3, -10.0, 1e-6);  // sqrt(q_phi_dot / r)
}

TEST(Lyapunov, SolvesStableEquation) {
  Eigen::Matrix2d A;
  A << -1.0, 2.0, 0.0, -3.0;
  const Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  const Eigen::MatrixXd P = control::solve_lyapunov(A, Q);
  EXPECT_LE((A.transpose() * P + P * A + Q).norm(), 1e-12);
}

TEST(PolePlacement, PlacesRequestedPoles) {
  const Reduced r = reduced(testing::miapure());
  const Eigen::RowVectorXd K = control::place_poles(r.A, r.B, {-1.0, -2.0, -3.0});
  Eigen::EigenSolver<Eigen::Matrix3d> es(r.A - r.B * K);
  std::vector<double> re;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(es.eigenvalues()[i].imag(), 0.0, 1e-9);
    re.push_back(es.eigenvalues()[i].real());
  }
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -3.0, 1e-8);
  EXPECT_NEAR(re[1], -2.0, 1e-8);
  EXPECT_NEAR(re[2], -1.0, 1e-8);
}

TEST(PolePlacement, UncontrollablePairThrows) {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b(1.0, 0.0);
  EXPECT_THROW(control::place_poles(A, b, {-1.0, -2.0}), control::LqrError);
}

TEST(LqrWeights, RejectsNegativeWeights) {
  LqrWeights w;
  w.q_diag[0] = -1.0;
  EXPECT_THROW(w.validate(), std::invalid_argument);
  w = LqrWeights{};
  w.r = 0.0;
  EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(SpinLqr, StabilizesYawAndSatisfiesCare) {
  const dynamics::SpinParams sp{2.0, 0.5, 0.2};
  control::CareSolution detail;
  const control::SpinGains g = control::solve_spin_lqr(sp, {}, &detail);
  EXPECT_GT(g.k_angle, 0.0);
  EXPECT_GT(g.k_rate, 0.0);
  EXPECT_LE(detail.residual, 1e-8);
  // Closed loop: I psi'' + (c_v + k_rate) psi' + k_angle psi = 0.
  EXPECT_GT(sp.c_v + g.k_rate, 0.0);
}

}  // namespace
}  // namespace ballbot
