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

#include "ballbot/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace ballbot::control {

namespace {

bool is_hurwitz(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i].real() >= 0.0) return false;
  }
  return true;
}

double spectral_abscissa_magnitude(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  double m = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    m = std::max(m, std::abs(es.eigenvalues()[i]));
  }
  return m;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  // (I kron A' + A' kron I) vec(P) = -vec(Q), column-major vec.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      L.block(i * n, j * n, n, n) += I(i, j) * At;
      L.block(i * n, j * n, n, n) += At(i, j) * I;
    }
  }
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd p = L.fullPivLu().solve(-q);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const std::vector<double>& poles) {
  const Eigen::Index n = A.rows();
  if (static_cast<Eigen::Index>(poles.size()) != n) {
    throw std::invalid_argument("place_poles: need one pole per state");
  }
  Eigen::MatrixXd ctrb(n, n);
  Eigen::VectorXd col = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ctrb);
  lu.setThreshold(1e-12);
  if (lu.rank() < n) throw LqrError("pair (A, B) is not controllable", 0.0);

  // Desired characteristic polynomial evaluated at A.
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  for (double p : poles) {
    phi = phi * (A - p * Eigen::MatrixXd::Identity(n, n));
  }
  Eigen::RowVectorXd last = Eigen::RowVectorXd::Zero(n);
  last[n - 1] = 1.0;
  return last * lu.inverse() * phi;
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd res = A.transpose() * P + P * A -
                              P * B * R.ldlt().solve(B.transpose()) * P + Q;
  return res.norm() / std::max(Q.norm(), 1.0);
}

CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        double tol, int max_iter) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd K;
  if (is_hurwitz(A)) {
    K = Eigen::MatrixXd::Zero(B.cols(), n);
  } else if (B.cols() == 1) {
    const double rho = 1.0 + spectral_abscissa_magnitude(A);
    std::vector<double> poles;
    for (Eigen::Index i = 0; i < n; ++i) poles.push_back(-rho * (1.0 + 0.25 * i));
    K = place_poles(A, B.col(0), poles);
  } else {
    throw LqrError("no stabilizing seed available for multi-input plant", 0.0);
  }

  const Eigen::LDLT<Eigen::MatrixXd> r_ldlt(R);
  CareSolution sol;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd a_cl = A - B * K;
    const Eigen::MatrixXd q_cl = Q + K.transpose() * R * K;
    const Eigen::MatrixXd P = solve_lyapunov(a_cl, q_cl);
    K = r_ldlt.solve(B.transpose() * P);
    const double res = care_residual(A, B, Q, R, P);
    sol.P = P;
    sol.K = K;
    sol.residual = res;
    sol.iterations = it;
    if (!std::isfinite(res)) break;
    if (res < tol) return sol;
    // Quadratic convergence stalls at rounding level; accept a plateau there.
    if (it > 5 && res >= 0.5 * best && res < 1e3 * tol) return sol;
    best = std::min(best, res);
  }
  throw LqrError("Newton-Kleinman iteration did not converge", sol.residual);
}

void LqrWeights::validate() const {
  if ((q_diag.array() < 0.0).any()) {
    throw std::invalid_argument("LQR state weights must be non-negative");
  }
  if (!(r > 0.0)) throw std::invalid_argument("LQR input weight must be positive");
}

LqrGains solve_lqr(const dynamics::LinearModel& model, const LqrWeights& w,
                   CareSolution* detail) {
  w.validate();
  // Reduced state [theta, theta_dot, phi_dot].
  static constexpr int kKeep[3] = {0, 2, 3};
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) {
    B[i] = model.B[kKeep[i]];
    Q(i, i) = w.q_diag[kKeep[i]];
    for (int j = 0; j < 3; ++j) A(i, j) = model.A(kKeep[i], kKeep[j]);
  }
  Eigen::MatrixXd R(1, 1);
  R(0, 0) = w.r;
  CareSolution sol = solve_care(A, B, Q, R);
  if (detail) *detail = sol;
  return {sol.K(0, 0), sol.K(0, 1), sol.K(0, 2)};
}

SpinGains solve_spin_lqr(const dynamics::SpinParams& sp, const SpinWeights& w,
                         CareSolution* detail) {
  sp.validate();
  Eigen::Matrix2d A;
  A << 0.0, 1.0, 0.0, -sp.c_v / sp.I_z;
  Eigen::Vector2d B(0.0, 1.0 / sp.I_z);
  Eigen::Matrix2d Q = w.q_diag.asDiagonal();
  Eigen::MatrixXd R(1, 1);
  R(0, 0) = w.r;
  CareSolution sol = solve_care(A, B, Q, R);
  if (detail) *detail = sol;
  return {sol.K(0, 0), sol.K(0, 1)};
}

}  // namespace ballbot::control
