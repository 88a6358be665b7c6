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

#include "ballbot/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ballbot::trajopt {

namespace {

// Index k with t[k] <= time < t[k+1], clamped to the knot range.
std::size_t segment(const std::vector<double>& t, double time) {
  if (time <= t.front()) return 0;
  if (time >= t.back()) return t.size() - 2;
  auto it = std::upper_bound(t.begin(), t.end(), time);
  return static_cast<std::size_t>(std::distance(t.begin(), it)) - 1;
}

}  // namespace

void Trajectory::validate() const {
  if (t.size() < 2) throw TrajectoryFormatError("trajectory needs at least two knots");
  if (states.size() != t.size() || tau.size() != t.size()) {
    throw TrajectoryFormatError("trajectory arrays have unequal lengths");
  }
  if (!state_derivs.empty() && state_derivs.size() != t.size()) {
    throw TrajectoryFormatError("state derivative array has the wrong length");
  }
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) {
      throw TrajectoryFormatError("trajectory times must be strictly increasing");
    }
  }
}

dynamics::PlanarState Trajectory::state_at(double time) const {
  const std::size_t k = segment(t, time);
  const double h = t[k + 1] - t[k];
  const double u = std::clamp((time - t[k]) / h, 0.0, 1.0);
  const Eigen::Vector4d a = states[k].vec();
  const Eigen::Vector4d b = states[k + 1].vec();
  if (interpolation == Interpolation::kCubicHermite && !state_derivs.empty()) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return dynamics::PlanarState::from_vec(h00 * a + h10 * h * state_derivs[k] +
                                           h01 * b + h11 * h * state_derivs[k + 1]);
  }
  return dynamics::PlanarState::from_vec((1.0 - u) * a + u * b);
}

double Trajectory::input_at(double time) const {
  const std::size_t k = segment(t, time);
  const double u = std::clamp((time - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0);
  return (1.0 - u) * tau[k] + u * tau[k + 1];
}

double objective_value(const Trajectory& traj) {
  traj.validate();
  double j = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj.t[k + 1] - traj.t[k];
    j += 0.5 * h * (traj.tau[k] * traj.tau[k] + traj.tau[k + 1] * traj.tau[k + 1]);
  }
  return j;
}

std::vector<std::pair<double, double>> negative_power_span(const Trajectory& traj) {
  traj.validate();
  std::vector<std::pair<double, double>> spans;
  const auto power = [&](std::size_t k) { return traj.tau[k] * traj.states[k].phi_dot; };

  bool open = power(0) < 0.0;
  double start = traj.t[0];
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double p0 = power(k);
    const double p1 = power(k + 1);
    const bool next_negative = p1 < 0.0;
    if (next_negative == open) continue;
    // Sign change inside [t_k, t_k+1]: locate the zero of the linear power.
    double crossing = traj.t[k + 1];
    if (p0 != p1) {
      crossing = traj.t[k] + (traj.t[k + 1] - traj.t[k]) * p0 / (p0 - p1);
    }
    if (open) {
      spans.emplace_back(start, crossing);
    } else {
      start = crossing;
    }
    open = next_negative;
  }
  if (open) spans.emplace_back(start, traj.t.back());
  return spans;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
  traj.validate();
  os << "t,theta,phi,theta_dot,phi_dot,tau\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    os << traj.t[k] << ',' << s.theta << ',' << s.phi << ',' << s.theta_dot << ','
       << s.phi_dot << ',' << traj.tau[k] << '\n';
  }
}

Trajectory read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw TrajectoryFormatError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,theta,phi,theta_dot,phi_dot,tau") {
    throw TrajectoryFormatError("unexpected trajectory header: " + line);
  }
  Trajectory traj;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    double v[6];
    int n = 0;
    while (std::getline(ss, cell, ',')) {
      if (n == 6) break;
      try {
        std::size_t used = 0;
        v[n] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw TrajectoryFormatError("row " + std::to_string(row) + ": bad number '" +
                                    cell + "'");
      }
      ++n;
    }
    if (n != 6) {
      throw TrajectoryFormatError("row " + std::to_string(row) + ": expected 6 columns");
    }
    traj.t.push_back(v[0]);
    traj.states.push_back({v[1], v[2], v[3], v[4]});
    traj.tau.push_back(v[5]);
  }
  traj.validate();
  return traj;
}

Trajectory read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TrajectoryFormatError("cannot open trajectory file " + path);
  return read_csv(in);
}

void write_csv_file(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(traj, out);
}

}  // namespace ballbot::trajopt
