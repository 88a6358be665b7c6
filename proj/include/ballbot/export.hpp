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

// Run artifacts: CSV time series, JSON metrics and events, quick-look SVG
// plots and the per-run manifest. Output is byte-deterministic.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/harness.hpp"
#include "ballbot/trajectory.hpp"

namespace ballbot::artifacts {

/// Shortest text that round-trips the value.
std::string format_number(double v);

std::string series_csv(const harness::Series& series);

/// Metrics plus the event log.
nlohmann::ordered_json run_json(const harness::RunResult& result);

/// Flat table of JSON objects as CSV. Columns follow the first row; nested
/// values are written as compact JSON.
std::string table_csv(const std::vector<nlohmann::ordered_json>& rows);

struct Trace {
  std::string column;
  std::string label;
};

/// Stacked strip charts, one panel per trace, with phase windows shaded.
std::string svg_traces(const harness::Series& series, const std::vector<Trace>& traces,
                       const std::string& title,
                       const std::vector<harness::PhaseWindow>& phases = {});

/// Default quick-look panels for a run (speed, tilt, torque).
std::string svg_run(const harness::RunResult& result);
/// Quick-look panels for an optimized trajectory.
std::string svg_trajectory(const trajopt::Trajectory& traj, const std::string& title);

harness::Series trajectory_series(const trajopt::Trajectory& traj);

/// `<out>/<subcommand>/<name>/<run_id>`, created if missing.
std::filesystem::path run_directory(const std::filesystem::path& out,
                                    const std::string& subcommand, const std::string& name,
                                    const std::string& run_id);

/// UTC timestamp such as 20260101T120000Z.
std::string timestamp_run_id();

void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace ballbot::artifacts
