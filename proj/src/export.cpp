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

#include "ballbot/export.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace ballbot::artifacts {

namespace {

constexpr double kWidth = 900.0;
constexpr double kPanelHeight = 150.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kGap = 30.0;
constexpr std::size_t kMaxPoints = 2000;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string csv_field(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_number() || v.is_boolean()) return v.dump();
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return s;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::string series_csv(const harness::Series& series) {
  std::string out;
  for (std::size_t c = 0; c < series.columns.size(); ++c) {
    if (c) out += ',';
    out += series.columns[c];
  }
  out += '\n';
  const std::size_t n = series.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < series.data.size(); ++c) {
      if (c) out += ',';
      out += format_number(series.data[c][i]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json run_json(const harness::RunResult& result) {
  nlohmann::ordered_json j;
  j["metrics"] = result.metrics;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const harness::Event& e : result.events) {
    nlohmann::ordered_json ej;
    ej["t"] = e.t;
    ej["type"] = e.type;
    ej["detail"] = e.detail;
    events.push_back(ej);
  }
  j["events"] = events;
  return j;
}

std::string table_csv(const std::vector<nlohmann::ordered_json>& rows) {
  if (rows.empty()) return "";
  std::vector<std::string> keys;
  for (const auto& [key, _] : rows.front().items()) keys.push_back(key);
  std::string out;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (k) out += ',';
    out += keys[k];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (k) out += ',';
      const auto it = row.find(keys[k]);
      if (it != row.end()) out += csv_field(*it);
    }
    out += '\n';
  }
  return out;
}

std::string svg_traces(const harness::Series& series, const std::vector<Trace>& traces,
                       const std::string& title,
                       const std::vector<harness::PhaseWindow>& phases) {
  const std::size_t panels = traces.size();
  const double height = kTop + panels * (kPanelHeight + kGap) + 10.0;
  const double plot_w = kWidth - kLeft - kRight;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      kWidth, height, kWidth, height);
  out += "<metadata>ballbot quick-look</metadata>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", kLeft,
                     escape(title));
  if (series.rows() == 0 || !series.has("t")) {
    out += "</svg>\n";
    return out;
  }
  const auto& t = series.column("t");
  const double t0 = t.front();
  const double t1 = std::max(t.back(), t0 + 1e-9);
  const auto x_of = [&](double tv) { return kLeft + (tv - t0) / (t1 - t0) * plot_w; };
  const std::size_t stride = std::max<std::size_t>(1, (t.size() + kMaxPoints - 1) / kMaxPoints);

  for (std::size_t p = 0; p < panels; ++p) {
    const Trace& tr = traces[p];
    const double top = kTop + p * (kPanelHeight + kGap);
    const double bottom = top + kPanelHeight;
    for (std::size_t w = 0; w < phases.size(); ++w) {
      if (w % 2 == 1) continue;
      const double xa = x_of(std::clamp(phases[w].start, t0, t1));
      const double xb = x_of(std::clamp(phases[w].end, t0, t1));
      out += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
          "fill=\"#eeeeee\"/>\n",
          xa, top, std::max(0.0, xb - xa), kPanelHeight);
    }
    out += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
        "stroke=\"#444\"/>\n",
        kLeft, top, plot_w, kPanelHeight);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft, top - 6.0,
                       escape(tr.label));
    if (!series.has(tr.column)) throw std::out_of_range("unknown series column: " + tr.column);
    const auto& y = series.column(tr.column);
    double lo = y.front();
    double hi = y.front();
    for (double v : y) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const auto y_of = [&](double v) { return bottom - (v - lo) / (hi - lo) * kPanelHeight; };
    if (lo < 0.0 && hi > 0.0) {
      out += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\" "
          "stroke-dasharray=\"4 3\"/>\n",
          kLeft, y_of(0.0), kLeft + plot_w, y_of(0.0));
    }
    out += fmt::format("<text x=\"4\" y=\"{:.2f}\">{:.4g}</text>\n", top + 10.0, hi);
    out += fmt::format("<text x=\"4\" y=\"{:.2f}\">{:.4g}</text>\n", bottom, lo);
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"",
                       kColors[p % 5]);
    for (std::size_t i = 0; i < t.size(); i += stride) {
      if (!std::isfinite(y[i])) continue;
      out += fmt::format("{:.2f},{:.2f} ", x_of(t[i]), y_of(y[i]));
    }
    out += "\"/>\n";
  }
  const double axis_y = kTop + panels * (kPanelHeight + kGap) - kGap + 14.0;
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{:.4g} s</text>\n", kLeft, axis_y, t0);
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g} s</text>\n",
                     kLeft + plot_w, axis_y, t1);
  out += "</svg>\n";
  return out;
}

std::string svg_run(const harness::RunResult& result) {
  const bool planar = result.series.has("tau_track");
  std::vector<Trace> traces;
  if (planar) {
    traces = {{"v", "speed v (m/s)"},
              {"theta", "tilt theta (rad)"},
              {"tau", "wheel torque tau (N m)"}};
  } else {
    traces = {{"v", "speed along heading (m/s)"},
              {"theta_h", "tilt along heading (rad)"},
              {"tau", "planar torque along heading (N m)"},
              {"margin1", "friction margin OW1 (N)"}};
  }
  return svg_traces(result.series, traces, result.scenario, result.phases);
}

harness::Series trajectory_series(const trajopt::Trajectory& traj) {
  harness::Series s;
  s.set_columns({"t", "theta", "phi", "theta_dot", "phi_dot", "tau"});
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const auto& st = traj.states[k];
    s.add_row({traj.t[k], st.theta, st.phi, st.theta_dot, st.phi_dot, traj.tau[k]});
  }
  return s;
}

std::string svg_trajectory(const trajopt::Trajectory& traj, const std::string& title) {
  return svg_traces(trajectory_series(traj),
                    {{"theta", "tilt theta (rad)"},
                     {"phi_dot", "wheel speed phi_dot (rad/s)"},
                     {"tau", "torque tau (N m)"}},
                    title);
}

std::filesystem::path run_directory(const std::filesystem::path& out,
                                    const std::string& subcommand, const std::string& name,
                                    const std::string& run_id) {
  const std::filesystem::path dir = out / subcommand / name / run_id;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + ec.message());
  }
  return dir;
}

std::string timestamp_run_id() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << content;
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace ballbot::artifacts
