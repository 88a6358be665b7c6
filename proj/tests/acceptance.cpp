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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "ballbot/benchmarks.hpp"
#include "ballbot/config.hpp"
#include "ballbot/export.hpp"
#include "ballbot/harness.hpp"
#include "ballbot/kinematics.hpp"
#include "ballbot/lqr.hpp"
#include "ballbot/service/protocol.hpp"
#include "ballbot/service/server.hpp"
#include "ballbot/service/session.hpp"
#include "ballbot/trajopt.hpp"
#include "test_support.hpp"

namespace ballbot {
namespace {

using dynamics::FrictionParams;
using dynamics::PlanarState;
using dynamics::WipParams;
using Json = nlohmann::ordered_json;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + what);
  }
};

// ------------------------------------------------------------------ dynamics

Outcome dynamics_fidelity() {
  Outcome o;
  const WipParams p = testing::miapure().wip;
  Eigen::Vector4d s(0.1, 0.0, 0.0, 0.0);
  const double e0 = dynamics::total_energy(p, PlanarState::from_vec(s));
  const auto deriv = [&](const Eigen::Vector4d& x) {
    return dynamics::wip_derivative(p, FrictionParams::none(), x, 0.0);
  };
  for (int k = 0; k < 10000; ++k) s = dynamics::step_rk4(deriv, s, 1e-4);
  const double drift = std::abs(dynamics::total_energy(p, PlanarState::from_vec(s)) - e0) /
                       std::abs(e0);
  o.check(drift <= 1e-6, fmt::format("energy drift {:.2e} <= 1e-6", drift));

  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> th(-0.5, 0.5), rate(-5.0, 5.0), tq(-40.0, 40.0);
  double worst = 0.0;
  for (const WipParams& q : {testing::miapure().wip, testing::piptb().wip}) {
    for (int i = 0; i < 1000; ++i) {
      const PlanarState st{th(rng), rate(rng), rate(rng), 3.0 * rate(rng)};
      const double tau = tq(rng);
      const auto a = dynamics::wip_accel(q, st, tau);
      const Eigen::Vector2d ref = testing::lagrangian_accel(q, st, tau);
      const double scale = std::max({std::abs(ref[0]), std::abs(ref[1]), 1e-6});
      worst = std::max({worst, std::abs(a.theta_ddot - ref[0]) / scale,
                        std::abs(a.phi_ddot - ref[1]) / scale});
    }
  }
  o.check(worst <= 1e-8, fmt::format("Lagrangian oracle {:.2e} <= 1e-8", worst));
  return o;
}

// ----------------------------------------------------------------------- LQR

Outcome linearization_lqr() {
  Outcome o;
  double lin = 0.0, residual = 0.0, max_re = -INFINITY;
  for (const sim::PlatformConfig& pc : {testing::miapure(), testing::piptb()}) {
    const WipParams& p = pc.wip;
    const dynamics::LinearModel m = dynamics::linearize(p);
    const double h = 1e-6;
    const auto f = [&](const Eigen::Vector4d& x, double u) {
      return dynamics::wip_derivative(p, FrictionParams::none(), x, u);
    };
    for (int j = 0; j < 5; ++j) {
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      double du = 0.0;
      if (j < 4) e[j] = h; else du = h;
      const Eigen::Vector4d col = (f(e, du) - f(-e, -du)) / (2 * h);
      for (int i = 0; i < 4; ++i) {
        const double model = j < 4 ? m.A(i, j) : m.B[i];
        lin = std::max(lin, std::abs(model - col[i]) / std::max(1.0, std::abs(col[i])));
      }
    }
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    testing::reduce(m, A, B);
    const auto& qd = pc.control.lqr.q_diag;
    const Eigen::Matrix3d Q = Eigen::Vector3d(qd[0], qd[2], qd[3]).asDiagonal();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, pc.control.lqr.r);
    const control::CareSolution sol = control::solve_care(A, B, Q, R);
    residual = std::max(residual, control::care_residual(A, B, Q, R, sol.P));
    const control::LqrGains k = control::solve_lqr(m, pc.control.lqr);
    const Eigen::Matrix3d Acl = A - B * Eigen::RowVector3d(k.k1, k.k2, k.k3);
    Eigen::EigenSolver<Eigen::Matrix3d> es(Acl);
    for (int i = 0; i < 3; ++i) max_re = std::max(max_re, es.eigenvalues()[i].real());
  }
  o.check(lin <= 1e-6, fmt::format("A,B vs finite differences {:.2e} <= 1e-6", lin));
  o.check(residual <= 1e-8, fmt::format("ARE residual {:.2e} <= 1e-8", residual));
  o.check(max_re < 0.0, fmt::format("max closed-loop Re {:.3f} < 0", max_re));
  return o;
}

// ---------------------------------------------------------------- conversion

Outcome conversion() {
  using namespace kinematics;
  Outcome o;
  const DrivetrainGeometry g = testing::miapure().geometry;
  const Drivetrain dt(g);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  double round = 0.0, power = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const PlanarRates pr{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const RatesEstimate back =
        dt.planar_rates(dt.motor_speeds(pr), {pr.theta_dot_x, pr.theta_dot_y});
    round = std::max({round, std::abs(back.rates.phi_dot_x - pr.phi_dot_x) / 20.0,
                      std::abs(back.rates.phi_dot_y - pr.phi_dot_y) / 20.0,
                      std::abs(back.rates.theta_dot_z - pr.theta_dot_z) / 20.0});
    const PlanarTorques t{u(rng), u(rng), u(rng)};
    round = std::max(round, (dt.planar_torques(dt.motor_torques(t)).vec() - t.vec()).norm() / 20.0);
    const MotorVector w = dt.motor_speeds(pr);
    const MotorVector m = dt.motor_torques(t);
    const double p_motor = m.values.dot(w.values);
    const double p_planar = t.tau_x * (pr.phi_dot_x - pr.theta_dot_x) +
                            t.tau_y * (pr.phi_dot_y - pr.theta_dot_y) + t.tau_z * pr.theta_dot_z;
    const double scale = (m.values.array() * w.values.array()).abs().sum();
    power = std::max(power, std::abs(p_motor - p_planar) / std::max(scale, 1e-12));
  }
  double cyclic = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double h = u(rng);
    const auto [ax, ay] = heading_to_phi_dot(1.3, h, g.r_s);
    const auto [bx, by] = heading_to_phi_dot(1.3, h + 2.0 * M_PI / 3.0, g.r_s);
    const MotorVector a = dt.motor_speeds({ax, ay, 0.0, 0.0, 0.0});
    const MotorVector b = dt.motor_speeds({bx, by, 0.0, 0.0, 0.0});
    for (int i = 0; i < 3; ++i) cyclic = std::max(cyclic, std::abs(b[(i + 1) % 3] - a[i]));
  }
  o.check(round <= 1e-12, fmt::format("round trip {:.2e} <= 1e-12", round));
  o.check(power <= 1e-9, fmt::format("power {:.2e} <= 1e-9", power));
  o.check(cyclic <= 1e-12, fmt::format("cyclic symmetry {:.2e} <= 1e-12", cyclic));
  return o;
}

// -------------------------------------------------------------------- trajopt

Outcome trajectory_optimization() {
  Outcome o;
  const config::TaskConfig tc = config::task(testing::lab(), "braking");
  const trajopt::SolveResult r50 = trajopt::optimize_braking(tc.wip, tc.task, 50, tc.solver);
  const trajopt::SolveResult r100 = trajopt::optimize_braking(tc.wip, tc.task, 100, tc.solver);
  const auto& traj = r50.trajectory;
  const auto xdot = [&](const PlanarState& s, double tau) {
    const auto a = dynamics::wip_accel(tc.wip, s, tau);
    return Eigen::Vector4d(s.theta_dot, s.phi_dot, a.theta_ddot, a.phi_ddot);
  };
  double defect = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj.t[k + 1] - traj.t[k];
    const Eigen::Vector4d d = traj.states[k + 1].vec() - traj.states[k].vec() -
                              0.5 * h * (xdot(traj.states[k], traj.tau[k]) +
                                         xdot(traj.states[k + 1], traj.tau[k + 1]));
    defect = std::max(defect, d.cwiseAbs().maxCoeff());
  }
  const auto& s0 = traj.states.front();
  const auto& sf = traj.states.back();
  const double boundary = std::max(
      {std::abs(s0.theta - tc.task.theta0), std::abs(s0.phi), std::abs(s0.theta_dot - tc.task.theta_dot0),
       std::abs(tc.wip.r * s0.phi_dot - tc.task.v0), std::abs(sf.theta - tc.task.theta_f),
       std::abs(sf.theta_dot - tc.task.theta_dot_f), std::abs(sf.phi_dot)});
  double min_theta = 0.0, max_v = 0.0;
  for (const auto& s : traj.states) {
    min_theta = std::min(min_theta, s.theta);
    max_v = std::max(max_v, tc.wip.r * s.phi_dot);
  }
  const auto spans = trajopt::negative_power_span(traj);
  const double change =
      std::abs(r100.report.objective - r50.report.objective) / r100.report.objective;
  o.check(defect <= 1e-6, fmt::format("defects {:.2e} <= 1e-6", defect));
  o.check(boundary <= 1e-6, fmt::format("boundary {:.2e} <= 1e-6", boundary));
  o.check(min_theta < -0.005, fmt::format("min theta {:.4f} < -0.005", min_theta));
  o.check(max_v > 1.4, fmt::format("max v {:.3f} > 1.4", max_v));
  o.check(!spans.empty(), fmt::format("{} negative-power spans", spans.size()));
  o.check(change <= 0.01, fmt::format("J* 50 -> 100 knots {:.3f} -> {:.3f} ({:.2f}%)",
                                      r50.report.objective, r100.report.objective,
                                      100.0 * change));
  return o;
}

// ------------------------------------------------------- controller comparison

Outcome controller_comparison() {
  Outcome o;
  const config::Document doc = testing::lab();
  const bench::CompareSpec spec = config::compare_benchmark(doc, "compare-controllers");
  o.check(spec.base.platform.friction.tau_stiction > 0.0,
          fmt::format("stiction {:.2f} N m", spec.base.platform.friction.tau_stiction));
  const auto rows = bench::compare_controllers(spec, 1);
  const bench::CompareRow* lqr = nullptr;
  const bench::CompareRow* pipd = nullptr;
  const bench::CompareRow* lqrpi = nullptr;
  for (const auto& r : rows) {
    if (r.controller == control::ControllerKind::kLqr) lqr = &r;
    if (r.controller == control::ControllerKind::kPiPd) pipd = &r;
    if (r.controller == control::ControllerKind::kLqrPi) lqrpi = &r;
  }
  if (!lqr || !pipd || !lqrpi) {
    o.check(false, "missing controller rows");
    return o;
  }
  o.check(lqrpi->completed && std::abs(lqrpi->final_speed_mean) <= 0.05 &&
              std::abs(lqrpi->final_theta_mean) <= M_PI / 180.0,
          fmt::format("LQR-PI final v {:.4f} m/s, theta {:.4f} deg", lqrpi->final_speed_mean,
                      lqrpi->final_theta_mean * 180.0 / M_PI));
  o.check(lqrpi->effort_mean < pipd->effort_mean,
          fmt::format("J(LQR-PI) {:.3f} < J(PI-PD) {:.3f}", lqrpi->effort_mean,
                      pipd->effort_mean));
  o.check(lqr->hold_error_mean >= 5.0 * lqrpi->hold_error_mean,
          fmt::format("hold error LQR {:.4f} >= 5 x LQR-PI {:.4f}", lqr->hold_error_mean,
                      lqrpi->hold_error_mean));
  return o;
}

// ---------------------------------------------------------- braking benchmark

Outcome braking_benchmark() {
  Outcome o;
  const bench::MinBrakingSpec spec =
      config::min_braking_benchmark(testing::lab(), "min-braking");
  o.check(std::abs(spec.heading - M_PI) < 1e-12, "heading 180 deg");
  const bench::MinBrakingResult r = bench::min_braking_search(spec, 1);
  const bench::BrakingProbe* best = nullptr;
  for (const auto& p : r.probes) {
    if (p.success && std::abs(p.duration - r.min_duration) < 1e-9) best = &p;
  }
  o.check(r.min_duration <= 2.0, fmt::format("min duration {:.2f} s <= 2.0", r.min_duration));
  o.check(best && !best->slip && !best->balance_failure &&
              std::abs(best->final_theta) <= spec.stop_tilt &&
              std::abs(best->final_speed) <= spec.stop_speed,
          best ? fmt::format("final v {:.4f}, theta {:.4f} deg", best->final_speed,
                             best->final_theta * 180.0 / M_PI)
               : std::string("no successful probe"));
  return o;
}

Outcome braking_saturation_monotonicity() {
  Outcome o;
  bench::MinBrakingSpec spec = config::min_braking_benchmark(testing::lab(), "min-braking");
  const double base = bench::min_braking_search(spec, 1).min_duration;
  spec.platform.control.motor_torque_limit = 12.0;
  double tight = INFINITY;
  try {
    tight = bench::min_braking_search(spec, 1).min_duration;
  } catch (const bench::NoFeasibleBraking&) {
  }
  o.check(tight > base, fmt::format("12 N m limit {:.2f} s > 43.2 N m limit {:.2f} s", tight,
                                    base));
  return o;
}

// ----------------------------------------------------------- heading asymmetry

Outcome heading_asymmetry() {
  Outcome o;
  const bench::MaxSpeedSweep sweep = config::max_speed_benchmark(testing::lab(), "max-speed");
  bench::MaxSpeedSpec spec = sweep.base;
  spec.heading = 0.0;
  const bench::MaxSpeedResult h0 = bench::max_speed_ramp(spec, 1);
  spec.heading = M_PI;
  const bench::MaxSpeedResult h180 = bench::max_speed_ramp(spec, 1);
  o.check(h0.failure_speed < h180.failure_speed,
          fmt::format("v_fail(0) {:.3f} ({}) < v_fail(180) {:.3f} ({})", h0.failure_speed,
                      h0.cause, h180.failure_speed, h180.cause));

  const sim::PlatformConfig pc = testing::miapure();
  double prev = INFINITY;
  bool monotone = true;
  for (int k = 0; k <= 30; ++k) {
    const double lean = 0.01 * k;
    const auto r =
        kinematics::contact_forces(pc.geometry, pc.supported_mass, {0.0, lean}, {}, pc.mu);
    monotone = monotone && r.min_margin() < prev;
    prev = r.min_margin();
  }
  o.check(monotone, "margin strictly decreasing over lean 0..0.3 rad toward omniwheel 1");
  return o;
}

// ---------------------------------------------------------------- determinism

Outcome determinism() {
  Outcome o;
  const config::Document doc = testing::lab();
  for (const auto& name : config::names(doc, "scenarios")) {
    const harness::ScenarioSpec spec = config::scenario(doc, name);
    const std::string a = artifacts::run_json(harness::run_scenario(spec, 7)).dump();
    const std::string b = artifacts::run_json(harness::run_scenario(spec, 7)).dump();
    o.check(a == b, name);
  }
  return o;
}

// -------------------------------------------------------------------- service

Outcome service_pacing() {
  Outcome o;
  const config::Document doc = testing::lab();
  const config::ServiceSettings svc = config::service(doc);
  service::SessionSettings st = service::SessionSettings::from_document(
      doc, svc, "miapure", control::ControllerKind::kLqrPi, 1);
  service::SessionRunner runner("pace", st, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  runner.post({{"type", "control"}, {"proto_version", service::kProtoVersion},
               {"action", "start"}},
              nullptr);
  std::this_thread::sleep_for(std::chrono::seconds(60));
  const Json info = runner.info();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  runner.stop();
  const double sim_t = info.value("t", 0.0);
  const double drift = std::abs(sim_t - wall) / wall;
  o.check(drift <= 0.01,
          fmt::format("sim {:.3f} s vs wall {:.3f} s, drift {:.3f}%", sim_t, wall, 100.0 * drift));
  return o;
}

Outcome service_failure() {
  Outcome o;
  const config::Document doc = testing::lab();
  service::SessionSettings st = service::SessionSettings::from_document(
      doc, config::service(doc), "miapure", control::ControllerKind::kLqr, 1);
  service::SimSession s("fail", st);
  s.set_param("lqr.k1", -sim::design_ballbot_gains(st.platform).x.lqr.k1);
  s.start();
  s.push(40.0, 0.0, 0.1);
  long before = 0;
  bool torque = false;
  while (s.status() == service::Status::kRunning && s.ticks() < 160000) {
    before = s.ticks();
    for (double u : s.frame().motor_torque) torque = torque || u != 0.0;
    s.advance(1, nullptr);
  }
  const service::TelemetryFrame f = s.frame();
  const long outer = std::lround(1.0 / (st.platform.dt * st.platform.control.rates.outer_hz));
  bool zero = true;
  for (double u : f.motor_torque) zero = zero && u == 0.0;
  o.check(s.status() == service::Status::kFailed && f.balance_failure, "balance failure");
  o.check(torque, "torque applied before failure");
  o.check(zero && f.tick - before <= outer,
          fmt::format("torque zero {} tick(s) after detection (outer period {})",
                      f.tick - before, outer));
  return o;
}

Outcome service_replay() {
  Outcome o;
  const config::Document doc = testing::lab();
  const service::SessionSettings st = service::SessionSettings::from_document(
      doc, config::service(doc), "miapure", control::ControllerKind::kLqrPi, 3);
  service::SimSession s("rep", st);
  std::vector<service::TelemetryFrame> frames;
  const auto msg = [](Json j) {
    j["proto_version"] = service::kProtoVersion;
    return j;
  };
  s.handle(msg({{"type", "control"}, {"action", "start"}}));
  s.handle(msg({{"type", "command"}, {"v", 0.8}, {"heading_deg", 60.0}, {"yaw_rate", 0.3}}));
  s.advance(12000, &frames);
  s.handle(msg({{"type", "control"}, {"action", "push"}, {"fx", 40.0}, {"fy", 10.0},
                {"duration", 0.25}}));
  s.advance(7777, &frames);
  s.handle(msg({{"type", "control"}, {"action", "set_param"}, {"key", "pi.k_i"},
                {"value", 3.0}}));
  s.handle(msg({{"type", "command"}, {"v", 1.5}, {"heading", -2.0}}));
  s.advance(16000, &frames);
  s.handle(msg({{"type", "control"}, {"action", "trigger"}, {"name", "brake"}}));
  s.advance(24000, &frames);
  const auto replayed = service::replay("rep", st, s.input_log(), s.ticks());
  bool same = replayed.size() == frames.size();
  for (std::size_t i = 0; same && i < frames.size(); ++i) {
    same = service::telemetry_message(frames[i], "rep").dump() ==
           service::telemetry_message(replayed[i], "rep").dump();
  }
  o.check(same, fmt::format("{} frames from {} logged inputs", frames.size(),
                            s.input_log().size()));
  return o;
}

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace ballbot

int main() {
  using namespace ballbot;
  const std::vector<Criterion> criteria = {
      {"dynamics-fidelity", dynamics_fidelity},
      {"linearization-lqr", linearization_lqr},
      {"conversion", conversion},
      {"trajectory-optimization", trajectory_optimization},
      {"controller-comparison", controller_comparison},
      {"braking-benchmark", braking_benchmark},
      {"braking-saturation-monotonicity", braking_saturation_monotonicity},
      {"heading-asymmetry", heading_asymmetry},
      {"determinism", determinism},
      {"service-failure-zero-torque", service_failure},
      {"service-replay", service_replay},
      {"service-pacing", service_pacing},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << fmt::format("{} {} ({:.1f} s): {}", o.pass ? "PASS" : "FAIL", c.name, secs,
                             detail)
              << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
