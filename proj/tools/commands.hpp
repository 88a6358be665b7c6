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

// Subcommands of the `ballbot` command-line tool.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ballbot/config.hpp"

namespace ballbot::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kSolver = 3,
  kBind = 4,
  kRunFailed = 5,  // balance failure or slip abort during a simulation
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;  // empty selects the shipped lab preset
  std::string out = "out";
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;  // key=value
  std::string run_id;                  // empty selects a UTC timestamp
  std::string name;                    // scenario, task or benchmark
  std::string platform;                // serve only
  std::string bind;                    // serve only, host:port
  std::string telemetry_log;           // serve only, directory
};

/// Loads the config (or the lab preset), expands platforms and applies the
/// overrides. Throws config::ConfigError.
config::Document load_config(const Options& opt);

int cmd_simulate(const Options& opt, std::ostream& out);
int cmd_optimize(const Options& opt, std::ostream& out);
int cmd_benchmark(const Options& opt, std::ostream& out);
int cmd_serve(const Options& opt, std::ostream& out);

/// Full command line entry point. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ballbot::cli
