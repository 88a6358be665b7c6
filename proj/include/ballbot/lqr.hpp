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

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ballbot/dynamics.hpp"

namespace ballbot::control {

class LqrError : public std::runtime_error {
 public:
  LqrError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct CareSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;  // u = -K x
  double residual = 0.0;  // ||A'P + PA - PBR^-1B'P + Q||_F / max(||Q||_F, 1)
  int iterations = 0;
};

/// Solves A'P + PA + Q = 0 for P (A must be Hurwitz).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Single-input pole placement (Ackermann). Throws LqrError if (A, b) is not
/// controllable.
Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const std::vector<double>& poles);

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P);

/// Continuous-time algebraic Riccati equation by Newton-Kleinman iteration.
/// The iteration is seeded with a pole-placement gain for single-input plants
/// and with K = 0 when A is already Hurwitz.
CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        double tol = 1e-10, int max_iter = 100);

struct LqrWeights {
  Eigen::Vector4d q_diag{100.0, 0.0, 10.0, 1.0};  // [theta, phi, theta_dot, phi_dot]
  double r = 1.0;

  void validate() const;
};

/// k = [k1, k2, k3] on tilt, tilt rate and wheel speed errors. The wheel
/// position gain is structurally zero.
struct LqrGains {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  Eigen::RowVector4d full() const { return {k1, 0.0, k2, k3}; }
};

/// LQR on the three-state model obtained by deleting the wheel position.
LqrGains solve_lqr(const dynamics::LinearModel& model, const LqrWeights& w,
                   CareSolution* detail = nullptr);

/// [k_theta_z, k_omega_z] for the spin model with viscous damping.
struct SpinGains {
  double k_angle = 0.0;
  double k_rate = 0.0;
};

struct SpinWeights {
  Eigen::Vector2d q_diag{10.0, 1.0};
  double r = 1.0;
};

SpinGains solve_spin_lqr(const dynamics::SpinParams& sp, const SpinWeights& w,
                         CareSolution* detail = nullptr);

}  // namespace ballbot::control
