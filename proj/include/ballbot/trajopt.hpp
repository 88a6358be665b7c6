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

// Minimum-torque braking by trapezoidal direct collocation.
//
// Decision vector layout, knot-major: z[5k .. 5k+3] = state at knot k
// (theta, phi, theta_dot, phi_dot), z[5k+4] = torque at knot k.
// Equalities: 4 (N-1) collocation defects, then 4 initial-state pins
// (theta, phi, theta_dot, phi_dot), then 3 final-state pins
// (theta, theta_dot, phi_dot).
// Inequalities (g <= 0): per knot theta - theta_max, -theta - theta_max,
// r phi_dot - v_max, -r phi_dot - v_max, and optionally the same pair for tau.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ballbot/dynamics.hpp"
#include "ballbot/trajectory.hpp"

namespace ballbot::trajopt {

class InfeasibleTask : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BrakingTask {
  double v0 = 1.4;      // initial translation speed, m/s
  double t_dur = 2.0;   // braking duration, s
  double theta0 = 0.0;
  double theta_dot0 = 0.0;
  double theta_f = 0.0;
  double theta_dot_f = 0.0;
  double theta_max = 0.35;  // rad
  double v_max = 3.0;       // m/s
  std::optional<double> tau_max;  // unbounded by default

  void validate() const;
};

class NlpProblem {
 public:
  NlpProblem(const dynamics::WipParams& p, const BrakingTask& task, int n_knots);

  const dynamics::WipParams& params() const { return p_; }
  const BrakingTask& task() const { return task_; }
  int n_knots() const { return n_; }
  double step() const { return h_; }
  int n_vars() const { return 5 * n_; }
  int n_defects() const { return 4 * (n_ - 1); }
  int n_equalities() const { return n_defects() + 7; }
  int n_inequalities() const { return (task_.tau_max ? 6 : 4) * n_; }

  double objective(const Eigen::VectorXd& z) const;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const;
  /// Diagonal of the (constant) objective Hessian.
  Eigen::VectorXd objective_hessian_diag() const;

  Eigen::VectorXd defects(const Eigen::VectorXd& z) const;
  Eigen::VectorXd equalities(const Eigen::VectorXd& z) const;
  Eigen::SparseMatrix<double> equality_jacobian(const Eigen::VectorXd& z) const;
  Eigen::VectorXd inequalities(const Eigen::VectorXd& z) const;
  Eigen::SparseMatrix<double> inequality_jacobian() const;

  /// Sum over knots of the second derivative of sum_i w_i * defect_i, where w
  /// holds one weight per equality row. Only the dynamics are nonlinear.
  Eigen::SparseMatrix<double> weighted_equality_hessian(const Eigen::VectorXd& z,
                                                        const Eigen::VectorXd& w) const;

  double knot_time(int k) const { return k * h_; }
  /// Knot values of a trajectory sampled onto this grid.
  Eigen::VectorXd pack(const Trajectory& traj) const;
  Trajectory unpack(const Eigen::VectorXd& z) const;

 private:
  Eigen::Vector4d f(const Eigen::VectorXd& z, int k) const;
  /// 4x5 Jacobian of the dynamics at knot k with respect to (state, tau).
  Eigen::Matrix<double, 4, 5> f_jacobian(const Eigen::VectorXd& z, int k) const;

  dynamics::WipParams p_;
  BrakingTask task_;
  int n_;
  double h_;
};

/// Builds the collocation problem. Throws InfeasibleTask when the initial
/// state violates the path bounds or n_knots < 10.
NlpProblem transcribe(const dynamics::WipParams& p, const BrakingTask& task, int n_knots);

/// Linear interpolation between the boundary states with zero torque.
Trajectory initial_guess(const NlpProblem& nlp);

struct SolveOptions {
  double tol = 1e-6;               // max constraint violation
  double stationarity_tol = 1e-4;  // relative KKT gradient norm
  int max_iter = 50;               // outer (multiplier) iterations
  int max_inner_iter = 100;
  double rho0 = 10.0;
};

struct SolveReport {
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  double max_defect = 0.0;
  double max_boundary_error = 0.0;
  double stationarity = 0.0;
  double penalty = 0.0;
};

struct SolveResult {
  Trajectory trajectory;
  Eigen::VectorXd z;
  SolveReport report;
};

/// Raised when the solver stops without meeting both tolerances. Carries the
/// iterate with the smallest constraint violation.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

/// Augmented Lagrangian outer loop with a damped Newton inner minimizer
/// (Gauss-Newton curvature of the penalty plus the multiplier-weighted
/// dynamics Hessian, falling back to Gauss-Newton when indefinite).
SolveResult solve(const NlpProblem& nlp, const Trajectory& guess,
                  const SolveOptions& opts = {});

/// Minimum-norm Gauss-Newton projection of z onto the equality manifold.
Eigen::VectorXd project_onto_constraints(const NlpProblem& nlp, Eigen::VectorXd z,
                                         double tol = 1e-10, int max_iter = 50);

/// Convenience: transcribe, solve from the default guess.
SolveResult optimize_braking(const dynamics::WipParams& p, const BrakingTask& task,
                             int n_knots = 50, const SolveOptions& opts = {});

}  // namespace ballbot::trajopt
