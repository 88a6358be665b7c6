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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ballbot/benchmarks.hpp"
#include "ballbot/export.hpp"
#include "ballbot/harness.hpp"
#include "ballbot/service/server.hpp"
#include "ballbot/trajopt.hpp"

namespace ballbot::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr double kTiltBackThreshold = -0.005;  // rad
constexpr int kManifestVersion = 1;

fs::path base_dir(const Options& opt) {
  return opt.config.empty() ? fs::current_path() : fs::path(opt.config).parent_path();
}

std::string run_id(const Options& opt) {
  return opt.run_id.empty() ? artifacts::timestamp_run_id() : opt.run_id;
}

/// Names the entry or lists the choices when it is missing.
std::string require_name(const Options& opt, const config::Document& doc,
                         const char* section, const char* flag) {
  if (!opt.name.empty()) return opt.name;
  std::string list;
  for (const std::string& n : config::names(doc, section)) list += (list.empty() ? "" : ", ") + n;
  throw UsageError(fmt::format("{} is required (available: {})", flag, list));
}

struct Artifacts {
  fs::path dir;
  std::vector<std::string> files;

  void text(const std::string& name, const std::string& content) {
    artifacts::write_text(dir / name, content);
    files.push_back(name);
  }
  void json(const std::string& name, const Json& j) {
    artifacts::write_json(dir / name, j);
    files.push_back(name);
  }
  void manifest(const std::string& subcommand, const std::string& name, const Options& opt,
                const config::Document& doc, int exit_code, const std::string& run) {
    Json m;
    m["manifest_version"] = kManifestVersion;
    m["subcommand"] = subcommand;
    m["name"] = name;
    m["run_id"] = run;
    m["seed"] = opt.seed;
    m["config_source"] = opt.config.empty() ? std::string("preset:lab") : opt.config;
    m["overrides"] = opt.overrides;
    m["exit_code"] = exit_code;
    m["artifacts"] = files;
    m["config"] = doc;
    artifacts::write_json(dir / "manifest.json", m);
  }
};

Json trajectory_report(const trajopt::Trajectory& traj, const trajopt::SolveReport& rep,
                       const config::TaskConfig& tc) {
  double min_theta = 0.0;
  double max_speed = -INFINITY;
  for (const auto& s : traj.states) {
    min_theta = std::min(min_theta, s.theta);
    max_speed = std::max(max_speed, tc.wip.r * s.phi_dot);
  }
  Json spans = Json::array();
  for (const auto& [a, b] : trajopt::negative_power_span(traj)) spans.push_back({a, b});

  Json j;
  j["task"] = tc.name;
  j["platform"] = tc.platform;
  j["v0"] = tc.task.v0;
  j["t_dur"] = tc.task.t_dur;
  j["n_knots"] = tc.n_knots;
  j["converged"] = rep.converged;
  j["objective"] = rep.objective;
  j["max_defect"] = rep.max_defect;
  j["max_boundary_error"] = rep.max_boundary_error;
  j["max_violation"] = rep.max_violation;
  j["stationarity"] = rep.stationarity;
  j["outer_iterations"] = rep.outer_iterations;
  j["inner_iterations"] = rep.inner_iterations;
  j["negative_power_spans"] = spans;
  j["signatures"] = {{"min_theta", min_theta},
                     {"tilt_back", min_theta < kTiltBackThreshold},
                     {"max_speed", max_speed},
                     {"overshoot", tc.task.v0 > 0.0 && max_speed > tc.task.v0},
                     {"back_driving", !spans.empty()}};
  return j;
}

int finish(Artifacts& a, const std::string& sub, const std::string& name, const Options& opt,
           const config::Document& doc, int code, const std::string& run, std::ostream& out) {
  a.manifest(sub, name, opt, doc, code, run);
  out << "artifacts: " << a.dir.string() << "\n";
  return code;
}

}  // namespace

config::Document load_config(const Options& opt) {
  config::Document doc =
      opt.config.empty() ? config::preset("lab") : config::load_document(opt.config);
  doc = config::resolve(std::move(doc));
  for (const std::string& s : opt.overrides) config::apply_override(doc, s);
  return doc;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  const config::Document doc = load_config(opt);
  const std::string name = require_name(opt, doc, "scenarios", "--scenario");
  const harness::ScenarioSpec spec = config::scenario(doc, name, base_dir(opt));
  const harness::RunResult r = harness::run_scenario(spec, opt.seed);

  const std::string run = run_id(opt);
  Artifacts a{artifacts::run_directory(opt.out, "simulate", name, run), {}};
  a.text("series.csv", artifacts::series_csv(r.series));
  a.json("run.json", artifacts::run_json(r));
  a.text("plot.svg", artifacts::svg_run(r));
  for (const harness::Phase& p : spec.phases) {
    if (p.kind == harness::PhaseKind::kTrajectory && p.trajectory) {
      std::ostringstream os;
      trajopt::write_csv(*p.trajectory, os);
      a.text("trajectory_" + p.name + ".csv", os.str());
    }
  }

  const int code = r.completed ? kOk : kRunFailed;
  out << fmt::format("scenario {}: {} at t={:.3f} s, final speed {:.4f} m/s, max |theta| {:.4f} rad\n",
                     name,
                     r.completed         ? "completed"
                     : r.balance_failure ? "balance failure"
                     : r.slip            ? "aborted on slip"
                                         : "aborted",
                     r.metrics["end_time"].get<double>(), r.metrics["final_speed"].get<double>(),
                     r.metrics["max_abs_theta"].get<double>());
  return finish(a, "simulate", name, opt, doc, code, run, out);
}

int cmd_optimize(const Options& opt, std::ostream& out) {
  const config::Document doc = load_config(opt);
  const std::string name = require_name(opt, doc, "tasks", "--task");
  const config::TaskConfig tc = config::task(doc, name);

  trajopt::SolveResult sol;
  int code = kOk;
  try {
    sol = trajopt::optimize_braking(tc.wip, tc.task, tc.n_knots, tc.solver);
  } catch (const trajopt::SolveError& e) {
    sol = e.best();
    code = kSolver;
    out << "solver did not converge: " << e.what() << "\n";
  }

  const std::string run = run_id(opt);
  Artifacts a{artifacts::run_directory(opt.out, "optimize", name, run), {}};
  std::ostringstream os;
  trajopt::write_csv(sol.trajectory, os);
  a.text("trajectory.csv", os.str());
  a.json("report.json", trajectory_report(sol.trajectory, sol.report, tc));
  a.text("trajectory.svg", artifacts::svg_trajectory(sol.trajectory, "task " + name));
  out << fmt::format("task {}: J* = {:.6g}, max defect {:.3g}, {} outer iterations\n", name,
                     sol.report.objective, sol.report.max_defect, sol.report.outer_iterations);
  return finish(a, "optimize", name, opt, doc, code, run, out);
}

int cmd_benchmark(const Options& opt, std::ostream& out) {
  const config::Document doc = load_config(opt);
  const std::string name = require_name(opt, doc, "benchmarks", "--benchmark");
  const config::BenchmarkKind kind = config::benchmark_kind(doc, name);
  std::vector<Json> rows;
  Json summary;
  summary["benchmark"] = name;

  switch (kind) {
    case config::BenchmarkKind::kMaxSpeed: {
      const bench::MaxSpeedSweep sweep = config::max_speed_benchmark(doc, name);
      if (sweep.headings.empty()) throw UsageError("max-speed benchmark has an empty heading list");
      summary["kind"] = "max-speed";
      for (double h : sweep.headings) {
        bench::MaxSpeedSpec s = sweep.base;
        s.heading = h;
        Json row;
        try {
          row = bench::to_json(bench::max_speed_ramp(s, opt.seed));
          row["error"] = "";
        } catch (const std::exception& e) {
          row = {{"heading_deg", h * 180.0 / M_PI}, {"error", e.what()}};
        }
        out << fmt::format("heading {:>6.1f} deg: {}\n", h * 180.0 / M_PI,
                           row.contains("failure_speed")
                               ? fmt::format("{} at {:.4f} m/s", row["cause"].get<std::string>(),
                                             row["failure_speed"].get<double>())
                               : row["error"].get<std::string>());
        rows.push_back(std::move(row));
      }
      break;
    }
    case config::BenchmarkKind::kMinBraking: {
      const bench::MinBrakingSpec spec = config::min_braking_benchmark(doc, name);
      summary["kind"] = "min-braking";
      try {
        const bench::MinBrakingResult r = bench::min_braking_search(spec, opt.seed);
        for (const auto& p : r.probes) rows.push_back(bench::to_json(p));
        summary["min_duration"] = r.min_duration;
        summary["reached_floor"] = r.reached_floor;
        out << fmt::format("minimum braking time {:g} s\n", r.min_duration);
      } catch (const bench::NoFeasibleBraking& e) {
        rows.push_back(bench::to_json(e.probe()));
        summary["min_duration"] = nullptr;
        summary["error"] = e.what();
        out << e.what() << "\n";
      }
      break;
    }
    case config::BenchmarkKind::kCompareControllers: {
      const bench::CompareSpec spec = config::compare_benchmark(doc, name, base_dir(opt));
      summary["kind"] = "compare-controllers";
      for (const auto& r : bench::compare_controllers(spec, opt.seed)) {
        out << fmt::format("{:>7}: effort {:.4f} +- {:.4f}, hold error {:.4f} m/s\n",
                           control::to_string(r.controller), r.effort_mean, r.effort_sd,
                           r.hold_error_mean);
        rows.push_back(bench::to_json(r));
      }
      break;
    }
  }
  summary["rows"] = rows;

  const std::string run = run_id(opt);
  Artifacts a{artifacts::run_directory(opt.out, "benchmark", name, run), {}};
  a.json("results.json", summary);
  a.text("results.csv", artifacts::table_csv(rows));
  return finish(a, "benchmark", name, opt, doc, kOk, run, out);
}

int cmd_serve(const Options& opt, std::ostream& out) {
  config::Document doc = load_config(opt);
  config::ServiceSettings svc = config::service(doc);
  if (!opt.platform.empty()) {
    const auto names = config::names(doc, "platforms");
    if (std::find(names.begin(), names.end(), opt.platform) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw UsageError(fmt::format("unknown platform '{}' (available: {})", opt.platform, list));
    }
    svc.platform = opt.platform;
  }
  if (!opt.bind.empty()) {
    const auto colon = opt.bind.rfind(':');
    if (colon == std::string::npos) throw UsageError("--bind must look like host:port");
    svc.host = opt.bind.substr(0, colon);
    try {
      const int port = std::stoi(opt.bind.substr(colon + 1));
      if (port < 0 || port > 65535) throw std::out_of_range("port");
      svc.port = static_cast<unsigned short>(port);
    } catch (const std::exception&) {
      throw UsageError("--bind port must be an integer in [0, 65535]");
    }
  }
  // Validates the default platform before binding.
  config::platform(doc, svc.platform);

  service::Server server(doc, svc);
  if (!opt.telemetry_log.empty()) server.set_telemetry_log_dir(opt.telemetry_log);
  try {
    server.bind();
  } catch (const service::BindError& e) {
    out << e.what() << "\n";
    return kBind;
  }
  out << fmt::format("serving on {}:{} (platform {}, proto_version {})\n", svc.host,
                     server.port(), svc.platform, 1)
      << std::flush;
  server.run(true);
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ballbot simulation and control lab"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "Lab config file (JSON); default is the shipped preset");
  app.add_option("--out", opt.out, "Artifact root directory")->capture_default_str();
  app.add_option("--seed", opt.seed, "Random seed for sensor noise")->capture_default_str();
  app.add_option("--set", opt.overrides, "Override an existing config key: key=value")
      ->take_all();
  app.add_option("--run-id", opt.run_id, "Artifact subdirectory name (default UTC timestamp)");

  auto* sim = app.add_subcommand("simulate", "Run a scenario through the closed loop");
  sim->add_option("--scenario", opt.name, "Scenario name");
  auto* optc = app.add_subcommand("optimize", "Solve a braking trajectory task");
  optc->add_option("--task", opt.name, "Task name");
  auto* bench = app.add_subcommand("benchmark", "Run a benchmark table");
  bench->add_option("--benchmark", opt.name, "Benchmark name");
  auto* serve = app.add_subcommand("serve", "Start the interactive simulation service");
  serve->add_option("--platform", opt.platform, "Platform for new sessions");
  serve->add_option("--bind", opt.bind, "host:port (default from config)");
  serve->add_option("--telemetry-log", opt.telemetry_log,
                    "Directory for per-session .jsonl telemetry logs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt, out);
    if (optc->parsed()) return cmd_optimize(opt, out);
    if (bench->parsed()) return cmd_benchmark(opt, out);
    if (serve->parsed()) return cmd_serve(opt, out);
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const config::ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const trajopt::SolveError& e) {
    err << "error: trajectory solve failed: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace ballbot::cli
