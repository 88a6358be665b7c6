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

#include "ballbot/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCholesky>

namespace ballbot::trajopt {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using SpMat = Eigen::SparseMatrix<double>;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double positive_part_max(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : std::max(0.0, v.maxCoeff());
}

SpMat sparse_identity(int n, double scale) {
  SpMat I(n, n);
  I.setIdentity();
  return I * scale;
}

}  // namespace

void BrakingTask::validate() const {
  if (!(t_dur > 0.0)) throw InfeasibleTask("braking duration must be positive");
  if (!(v0 >= 0.0)) throw InfeasibleTask("initial speed must be non-negative");
  if (!(theta_max > 0.0) || !(v_max > 0.0)) {
    throw InfeasibleTask("path bounds must be positive");
  }
  if (tau_max && !(*tau_max > 0.0)) throw InfeasibleTask("torque bound must be positive");
  if (std::abs(theta0) > theta_max || std::abs(theta_f) > theta_max) {
    throw InfeasibleTask("boundary tilt violates the tilt bound");
  }
  if (v0 > v_max) throw InfeasibleTask("initial speed violates the speed bound");
}

NlpProblem::NlpProblem(const dynamics::WipParams& p, const BrakingTask& task,
                       int n_knots)
    : p_(p), task_(task), n_(n_knots), h_(task.t_dur / (n_knots - 1)) {}

NlpProblem transcribe(const dynamics::WipParams& p, const BrakingTask& task,
                      int n_knots) {
  p.validate();
  if (n_knots < 10) throw InfeasibleTask("collocation needs at least 10 knots");
  task.validate();
  return NlpProblem(p, task, n_knots);
}

Eigen::Vector4d NlpProblem::f(const Eigen::VectorXd& z, int k) const {
  return dynamics::wip_derivative(p_, dynamics::FrictionParams::none(),
                                  z.segment<4>(5 * k), z[5 * k + 4]);
}

Eigen::Matrix<double, 4, 5> NlpProblem::f_jacobian(const Eigen::VectorXd& z,
                                                   int k) const {
  Eigen::Matrix<double, 4, 5> jac;
  Eigen::Matrix<double, 5, 1> x = z.segment<5>(5 * k);
  const auto eval = [&](const Eigen::Matrix<double, 5, 1>& v) {
    return dynamics::wip_derivative(p_, dynamics::FrictionParams::none(), v.head<4>(),
                                    v[4]);
  };
  for (int j = 0; j < 5; ++j) {
    const double e = 1e-6 * std::max(1.0, std::abs(x[j]));
    Eigen::Matrix<double, 5, 1> xp = x;
    Eigen::Matrix<double, 5, 1> xm = x;
    xp[j] += e;
    xm[j] -= e;
    jac.col(j) = (eval(xp) - eval(xm)) / (2.0 * e);
  }
  return jac;
}

double NlpProblem::objective(const Eigen::VectorXd& z) const {
  double j = 0.0;
  for (int k = 0; k + 1 < n_; ++k) {
    const double a = z[5 * k + 4];
    const double b = z[5 * (k + 1) + 4];
    j += 0.5 * h_ * (a * a + b * b);
  }
  return j;
}

Eigen::VectorXd NlpProblem::objective_hessian_diag() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_vars());
  for (int k = 0; k < n_; ++k) {
    const double w = (k == 0 || k == n_ - 1) ? 0.5 * h_ : h_;
    d[5 * k + 4] = 2.0 * w;
  }
  return d;
}

Eigen::VectorXd NlpProblem::objective_gradient(const Eigen::VectorXd& z) const {
  return objective_hessian_diag().cwiseProduct(z);
}

Eigen::VectorXd NlpProblem::defects(const Eigen::VectorXd& z) const {
  Eigen::VectorXd d(n_defects());
  Eigen::Vector4d f_prev = f(z, 0);
  for (int k = 0; k + 1 < n_; ++k) {
    const Eigen::Vector4d f_next = f(z, k + 1);
    d.segment<4>(4 * k) = z.segment<4>(5 * (k + 1)) - z.segment<4>(5 * k) -
                          0.5 * h_ * (f_prev + f_next);
    f_prev = f_next;
  }
  return d;
}

Eigen::VectorXd NlpProblem::equalities(const Eigen::VectorXd& z) const {
  Eigen::VectorXd c(n_equalities());
  c.head(n_defects()) = defects(z);
  const int b = n_defects();
  const int last = 5 * (n_ - 1);
  c[b + 0] = z[0] - task_.theta0;
  c[b + 1] = z[1];
  c[b + 2] = z[2] - task_.theta_dot0;
  c[b + 3] = z[3] - task_.v0 / p_.r;
  c[b + 4] = z[last + 0] - task_.theta_f;
  c[b + 5] = z[last + 2] - task_.theta_dot_f;
  c[b + 6] = z[last + 3];
  return c;
}

SpMat NlpProblem::equality_jacobian(const Eigen::VectorXd& z) const {
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(n_) * 48);
  std::vector<Eigen::Matrix<double, 4, 5>> jacs(n_);
  for (int k = 0; k < n_; ++k) jacs[k] = f_jacobian(z, k);
  for (int k = 0; k + 1 < n_; ++k) {
    const int row = 4 * k;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 5; ++j) {
        double left = -0.5 * h_ * jacs[k](i, j);
        double right = -0.5 * h_ * jacs[k + 1](i, j);
        if (i == j) {
          left -= 1.0;
          right += 1.0;
        }
        if (left != 0.0) trips.emplace_back(row + i, 5 * k + j, left);
        if (right != 0.0) trips.emplace_back(row + i, 5 * (k + 1) + j, right);
      }
    }
  }
  const int b = n_defects();
  const int last = 5 * (n_ - 1);
  for (int i = 0; i < 4; ++i) trips.emplace_back(b + i, i, 1.0);
  trips.emplace_back(b + 4, last + 0, 1.0);
  trips.emplace_back(b + 5, last + 2, 1.0);
  trips.emplace_back(b + 6, last + 3, 1.0);
  SpMat jac(n_equalities(), n_vars());
  jac.setFromTriplets(trips.begin(), trips.end());
  return jac;
}

Eigen::VectorXd NlpProblem::inequalities(const Eigen::VectorXd& z) const {
  const int m = task_.tau_max ? 6 : 4;
  Eigen::VectorXd g(n_inequalities());
  for (int k = 0; k < n_; ++k) {
    const double theta = z[5 * k];
    const double v = p_.r * z[5 * k + 3];
    g[m * k + 0] = theta - task_.theta_max;
    g[m * k + 1] = -theta - task_.theta_max;
    g[m * k + 2] = v - task_.v_max;
    g[m * k + 3] = -v - task_.v_max;
    if (task_.tau_max) {
      g[m * k + 4] = z[5 * k + 4] - *task_.tau_max;
      g[m * k + 5] = -z[5 * k + 4] - *task_.tau_max;
    }
  }
  return g;
}

SpMat NlpProblem::inequality_jacobian() const {
  const int m = task_.tau_max ? 6 : 4;
  Triplets trips;
  for (int k = 0; k < n_; ++k) {
    trips.emplace_back(m * k + 0, 5 * k, 1.0);
    trips.emplace_back(m * k + 1, 5 * k, -1.0);
    trips.emplace_back(m * k + 2, 5 * k + 3, p_.r);
    trips.emplace_back(m * k + 3, 5 * k + 3, -p_.r);
    if (task_.tau_max) {
      trips.emplace_back(m * k + 4, 5 * k + 4, 1.0);
      trips.emplace_back(m * k + 5, 5 * k + 4, -1.0);
    }
  }
  SpMat jac(n_inequalities(), n_vars());
  jac.setFromTriplets(trips.begin(), trips.end());
  return jac;
}

SpMat NlpProblem::weighted_equality_hessian(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& w) const {
  Triplets trips;
  trips.reserve(static_cast<std::size_t>(n_) * 25);
  for (int k = 0; k < n_; ++k) {
    // Knot k appears in segment k-1 (as the right end) and segment k (left).
    Eigen::Vector4d weight = Eigen::Vector4d::Zero();
    if (k > 0) weight += w.segment<4>(4 * (k - 1));
    if (k + 1 < n_) weight += w.segment<4>(4 * k);
    weight *= -0.5 * h_;
    if (weight.isZero(0.0)) continue;

    const Eigen::Matrix<double, 5, 1> x = z.segment<5>(5 * k);
    const auto phi = [&](const Eigen::Matrix<double, 5, 1>& v) {
      return weight.dot(dynamics::wip_derivative(p_, dynamics::FrictionParams::none(),
                                                 v.head<4>(), v[4]));
    };
    // The wheel angle (index 1) does not enter the dynamics.
    constexpr int kIdx[4] = {0, 2, 3, 4};
    const double e = 1e-4;
    const double f0 = phi(x);
    for (int a = 0; a < 4; ++a) {
      const int i = kIdx[a];
      Eigen::Matrix<double, 5, 1> xp = x;
      Eigen::Matrix<double, 5, 1> xm = x;
      xp[i] += e;
      xm[i] -= e;
      const double hii = (phi(xp) - 2.0 * f0 + phi(xm)) / (e * e);
      if (hii != 0.0) trips.emplace_back(5 * k + i, 5 * k + i, hii);
      for (int b = a + 1; b < 4; ++b) {
        const int j = kIdx[b];
        Eigen::Matrix<double, 5, 1> pp = x, pm = x, mp = x, mm = x;
        pp[i] += e, pp[j] += e;
        pm[i] += e, pm[j] -= e;
        mp[i] -= e, mp[j] += e;
        mm[i] -= e, mm[j] -= e;
        const double hij = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4.0 * e * e);
        if (hij != 0.0) {
          trips.emplace_back(5 * k + i, 5 * k + j, hij);
          trips.emplace_back(5 * k + j, 5 * k + i, hij);
        }
      }
    }
  }
  SpMat hess(n_vars(), n_vars());
  hess.setFromTriplets(trips.begin(), trips.end());
  return hess;
}

Eigen::VectorXd NlpProblem::pack(const Trajectory& traj) const {
  traj.validate();
  Eigen::VectorXd z(n_vars());
  for (int k = 0; k < n_; ++k) {
    const double t = traj.start() + knot_time(k) * traj.duration() / task_.t_dur;
    z.segment<4>(5 * k) = traj.state_at(t).vec();
    z[5 * k + 4] = traj.input_at(t);
  }
  return z;
}

Trajectory NlpProblem::unpack(const Eigen::VectorXd& z) const {
  Trajectory traj;
  traj.interpolation = Interpolation::kCubicHermite;
  for (int k = 0; k < n_; ++k) {
    traj.t.push_back(knot_time(k));
    traj.states.push_back(dynamics::PlanarState::from_vec(z.segment<4>(5 * k)));
    traj.tau.push_back(z[5 * k + 4]);
    traj.state_derivs.push_back(f(z, k));
  }
  return traj;
}

Trajectory initial_guess(const NlpProblem& nlp) {
  const BrakingTask& task = nlp.task();
  const double w0 = task.v0 / nlp.params().r;
  const Eigen::Vector4d s0{task.theta0, 0.0, task.theta_dot0, w0};
  // Final wheel angle consistent with a linearly decaying wheel speed.
  const Eigen::Vector4d sf{task.theta_f, 0.5 * w0 * task.t_dur, task.theta_dot_f, 0.0};
  Trajectory traj;
  const int n = nlp.n_knots();
  for (int k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / (n - 1);
    traj.t.push_back(nlp.knot_time(k));
    traj.states.push_back(dynamics::PlanarState::from_vec((1.0 - u) * s0 + u * sf));
    traj.tau.push_back(0.0);
  }
  return traj;
}

namespace {

struct AlState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double rho;
};

double merit(const NlpProblem& nlp, const AlState& al, const Eigen::VectorXd& z) {
  const Eigen::VectorXd c = nlp.equalities(z);
  const Eigen::VectorXd g = nlp.inequalities(z);
  double m = nlp.objective(z) + al.lambda.dot(c) + 0.5 * al.rho * c.squaredNorm();
  for (int i = 0; i < g.size(); ++i) {
    const double s = std::max(0.0, al.mu[i] + al.rho * g[i]);
    m += (s * s - al.mu[i] * al.mu[i]) / (2.0 * al.rho);
  }
  return m;
}

// Returns the number of inner iterations taken.
int minimize_inner(const NlpProblem& nlp, const AlState& al, const SpMat& jg,
                   const SolveOptions& opts, Eigen::VectorXd& z) {
  const Eigen::VectorXd hdiag = nlp.objective_hessian_diag();
  const int n = nlp.n_vars();
  int it = 0;
  for (; it < opts.max_inner_iter; ++it) {
    const Eigen::VectorXd c = nlp.equalities(z);
    const Eigen::VectorXd g = nlp.inequalities(z);
    const SpMat jc = nlp.equality_jacobian(z);
    const Eigen::VectorXd w = al.lambda + al.rho * c;
    Eigen::VectorXd v = (al.mu + al.rho * g).cwiseMax(0.0);
    const Eigen::VectorXd grad_f = nlp.objective_gradient(z);
    const Eigen::VectorXd grad = grad_f + jc.transpose() * w + jg.transpose() * v;
    const double scale = std::max(1.0, inf_norm(grad_f));
    if (inf_norm(grad) <= 0.1 * opts.stationarity_tol * scale) break;

    Eigen::VectorXd active = Eigen::VectorXd::Zero(g.size());
    for (int i = 0; i < g.size(); ++i) active[i] = v[i] > 0.0 ? al.rho : 0.0;
    SpMat gn = SpMat(hdiag.asDiagonal()) + al.rho * SpMat(jc.transpose() * jc) +
               SpMat(jg.transpose() * active.asDiagonal() * jg) +
               sparse_identity(n, 1e-10);

    Eigen::SimplicialLDLT<SpMat> ldlt;
    Eigen::VectorXd d;
    const SpMat full = gn + nlp.weighted_equality_hessian(z, w);
    ldlt.compute(full);
    bool ok = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
    if (ok) {
      d = -ldlt.solve(grad);
      ok = d.allFinite() && grad.dot(d) < 0.0;
    }
    if (!ok) {
      ldlt.compute(gn);
      if (ldlt.info() != Eigen::Success) break;
      d = -ldlt.solve(grad);
    }

    const double m0 = merit(nlp, al, z);
    const double slope = grad.dot(d);
    if (!(slope < 0.0)) break;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd trial = z + alpha * d;
      const double m1 = merit(nlp, al, trial);
      if (std::isfinite(m1) && m1 <= m0 + 1e-4 * alpha * slope) {
        z = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (alpha * inf_norm(d) <= 1e-14 * std::max(1.0, inf_norm(z))) break;
  }
  return it;
}

SolveReport evaluate(const NlpProblem& nlp, const Eigen::VectorXd& z,
                     const AlState& al) {
  SolveReport r;
  const Eigen::VectorXd c = nlp.equalities(z);
  const Eigen::VectorXd g = nlp.inequalities(z);
  r.objective = nlp.objective(z);
  r.max_defect = inf_norm(c.head(nlp.n_defects()));
  r.max_boundary_error = inf_norm(c.tail(7));
  r.max_violation = std::max(inf_norm(c), positive_part_max(g));
  const Eigen::VectorXd grad_f = nlp.objective_gradient(z);
  const Eigen::VectorXd kkt = grad_f + nlp.equality_jacobian(z).transpose() * al.lambda +
                              nlp.inequality_jacobian().transpose() * al.mu;
  r.stationarity = inf_norm(kkt) / std::max(1.0, inf_norm(grad_f));
  r.penalty = al.rho;
  return r;
}

}  // namespace

SolveResult solve(const NlpProblem& nlp, const Trajectory& guess,
                  const SolveOptions& opts) {
  Eigen::VectorXd z = nlp.pack(guess);
  AlState al{Eigen::VectorXd::Zero(nlp.n_equalities()),
             Eigen::VectorXd::Zero(nlp.n_inequalities()), opts.rho0};
  const SpMat jg = nlp.inequality_jacobian();

  SolveResult best;
  best.report.max_violation = std::numeric_limits<double>::infinity();
  double prev_violation = std::numeric_limits<double>::infinity();
  int inner_total = 0;

  for (int outer = 1; outer <= opts.max_iter; ++outer) {
    inner_total += minimize_inner(nlp, al, jg, opts, z);

    const Eigen::VectorXd c = nlp.equalities(z);
    const Eigen::VectorXd g = nlp.inequalities(z);
    al.lambda += al.rho * c;
    al.mu = (al.mu + al.rho * g).cwiseMax(0.0);

    SolveReport report = evaluate(nlp, z, al);
    report.outer_iterations = outer;
    report.inner_iterations = inner_total;
    if (report.max_violation <= best.report.max_violation) {
      best.z = z;
      best.report = report;
    }
    if (report.max_violation <= opts.tol && report.stationarity <= opts.stationarity_tol) {
      report.converged = true;
      SolveResult out;
      out.z = z;
      out.trajectory = nlp.unpack(z);
      out.report = report;
      return out;
    }
    if (report.max_violation > 0.25 * prev_violation) {
      al.rho = std::min(al.rho * 10.0, 1e10);
    }
    prev_violation = report.max_violation;
  }
  best.trajectory = nlp.unpack(best.z);
  throw SolveError("collocation solve did not converge", std::move(best));
}

Eigen::VectorXd project_onto_constraints(const NlpProblem& nlp, Eigen::VectorXd z,
                                         double tol, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd c = nlp.equalities(z);
    if (inf_norm(c) <= tol) break;
    const SpMat jc = nlp.equality_jacobian(z);
    const SpMat jjt = jc * jc.transpose();
    Eigen::SimplicialLDLT<SpMat> ldlt(jjt);
    if (ldlt.info() != Eigen::Success) break;
    z -= jc.transpose() * ldlt.solve(c);
  }
  return z;
}

SolveResult optimize_braking(const dynamics::WipParams& p, const BrakingTask& task,
                             int n_knots, const SolveOptions& opts) {
  const NlpProblem nlp = transcribe(p, task, n_knots);
  return solve(nlp, initial_guess(nlp), opts);
}

}  // namespace ballbot::trajopt
