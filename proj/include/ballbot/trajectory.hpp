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

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ballbot/dynamics.hpp"

namespace ballbot::trajopt {

class TrajectoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Interpolation {
  kLinear,        // states and input piecewise linear
  kCubicHermite,  // states cubic Hermite from knot derivatives, input linear
};

/// Time-stamped state and input knots.
struct Trajectory {
  std::vector<double> t;
  std::vector<dynamics::PlanarState> states;
  std::vector<double> tau;
  /// Knot state derivatives; required for cubic Hermite interpolation.
  std::vector<Eigen::Vector4d> state_derivs;
  Interpolation interpolation = Interpolation::kLinear;

  std::size_t size() const { return t.size(); }
  double start() const { return t.front(); }
  double end() const { return t.back(); }
  double duration() const { return t.back() - t.front(); }

  /// Throws TrajectoryFormatError on unequal lengths, fewer than two knots or
  /// non-increasing times.
  void validate() const;

  dynamics::PlanarState state_at(double time) const;
  double input_at(double time) const;
};

/// Trapezoidal quadrature of tau^2.
double objective_value(const Trajectory& traj);

/// Intervals where tau * phi_dot < 0; crossings located by linear
/// interpolation of the power between knots.
std::vector<std::pair<double, double>> negative_power_span(const Trajectory& traj);

/// CSV with header `t,theta,phi,theta_dot,phi_dot,tau`.
void write_csv(const Trajectory& traj, std::ostream& os);
Trajectory read_csv(std::istream& is);
Trajectory read_csv_file(const std::string& path);
void write_csv_file(const Trajectory& traj, const std::string& path);

}  // namespace ballbot::trajopt
