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

// Lab configuration document: platforms, optimization tasks, scenarios,
// benchmarks and service settings in one JSON file. See docs/config.md.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/benchmarks.hpp"
#include "ballbot/harness.hpp"
#include "ballbot/simulator.hpp"
#include "ballbot/trajopt.hpp"

namespace ballbot::config {

using Document = nlohmann::ordered_json;

/// Malformed document, unknown name or bad override.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for a name lookup that fails; carries the available names.
class UnknownName : public ConfigError {
 public:
  UnknownName(const std::string& section, const std::string& name,
              std::vector<std::string> available);
  const std::vector<std::string>& available() const { return available_; }

 private:
  std::vector<std::string> available_;
};

/// Names of the shipped presets: "miapure", "piptb" (platforms) and "lab".
std::vector<std::string> preset_names();
/// Shipped preset document by name; throws UnknownName.
Document preset(std::string_view name);

/// Parses a document from text; throws ConfigError with the parse position.
Document parse_document(std::string_view text);
/// Reads and parses a file; relative trajectory paths resolve against its directory.
Document load_document(const std::filesystem::path& path);

/// Expands platform references (a preset name, or an object with a "preset"
/// key plus overrides) into full platform objects. Idempotent.
Document resolve(Document doc);

/// Applies `dotted.key=value`. The key must already exist; numeric segments
/// index arrays. The value is parsed as JSON when possible, else taken as a
/// string. Throws ConfigError.
void apply_override(Document& doc, std::string_view assignment);

/// Names in a top-level section ("platforms", "tasks", "scenarios", ...).
std::vector<std::string> names(const Document& doc, std::string_view section);

sim::PlatformConfig parse_platform(const nlohmann::ordered_json& j);
sim::PlatformConfig platform(const Document& doc, const std::string& name);

struct TaskConfig {
  std::string name;
  std::string platform;
  dynamics::WipParams wip;
  trajopt::BrakingTask task;
  int n_knots = 50;
  trajopt::SolveOptions solver;
};
TaskConfig task(const Document& doc, const std::string& name);

/// Builds a scenario. Trajectory phases are solved from their task or read
/// from their CSV file (relative to `base_dir`).
harness::ScenarioSpec scenario(const Document& doc, const std::string& name,
                               const std::filesystem::path& base_dir = {});

enum class BenchmarkKind { kMaxSpeed, kMinBraking, kCompareControllers };
BenchmarkKind benchmark_kind(const Document& doc, const std::string& name);
bench::MaxSpeedSweep max_speed_benchmark(const Document& doc, const std::string& name);
bench::MinBrakingSpec min_braking_benchmark(const Document& doc, const std::string& name);
bench::CompareSpec compare_benchmark(const Document& doc, const std::string& name,
                                     const std::filesystem::path& base_dir = {});

struct ServiceSettings {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  std::string platform = "miapure";
  std::string controller = "lqr-pi";
  double speed_limit = 2.0;     // m/s
  double slew_rate = 1.5;       // m/s^2
  double yaw_rate_limit = 1.0;  // rad/s
  double telemetry_hz = 50.0;
  double realtime_factor = 1.0;
  int queue_depth = 64;  // telemetry frames buffered per subscriber
  double push_force_limit = 200.0;  // N
  std::vector<std::string> tunable;  // whitelisted set_param keys
};
ServiceSettings service(const Document& doc);

}  // namespace ballbot::config
