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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ballbot/export.hpp"

namespace ballbot::artifacts {
namespace {

TEST(Export, NumbersRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-30, 30);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mant(rng), ex(rng));
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(NAN), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
}

TEST(Export, SeriesCsvLayout) {
  harness::Series s;
  s.set_columns({"t", "v"});
  s.add_row({0.0, 1.5});
  s.add_row({0.1, -2.0});
  EXPECT_EQ(series_csv(s), "t,v\n0,1.5\n0.1,-2\n");
}

TEST(Export, TableCsvQuotesAndNests) {
  std::vector<nlohmann::ordered_json> rows;
  rows.push_back({{"name", "a,b"}, {"n", 3}, {"x", 0.25}, {"ok", true}, {"list", {1, 2}}});
  rows.push_back({{"name", "say \"hi\""}, {"n", 4}, {"x", nullptr}, {"ok", false}});
  EXPECT_EQ(table_csv(rows),
            "name,n,x,ok,list\n"
            "\"a,b\",3,0.25,true,\"[1,2]\"\n"
            "\"say \"\"hi\"\"\",4,,false,\n");
  EXPECT_EQ(table_csv({}), "");
}

TEST(Export, TrajectorySeriesColumns) {
  trajopt::Trajectory traj;
  traj.t = {0.0, 1.0};
  traj.states = {{0.1, 0.0, 0.0, 1.0}, {0.0, 0.5, 0.0, 0.0}};
  traj.tau = {2.0, -1.0};
  const auto s = trajectory_series(traj);
  EXPECT_EQ(s.rows(), 2u);
  EXPECT_EQ(s.column("tau")[1], -1.0);
  EXPECT_EQ(s.column("theta")[0], 0.1);
}

TEST(Export, SvgIsDeterministicAndWellFormed) {
  harness::Series s;
  s.set_columns({"t", "v", "theta"});
  for (int k = 0; k <= 50; ++k) s.add_row({0.02 * k, std::sin(0.1 * k), std::cos(0.1 * k)});
  const std::vector<Trace> traces{{"v", "speed"}, {"theta", "tilt"}};
  const std::vector<harness::PhaseWindow> phases{{"a", 0.0, 0.5}, {"b", 0.5, 1.0}};
  const std::string a = svg_traces(s, traces, "demo", phases);
  const std::string b = svg_traces(s, traces, "demo", phases);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("speed"), std::string::npos);
  EXPECT_NE(a.find("tilt"), std::string::npos);
  EXPECT_THROW(svg_traces(s, {{"missing", "m"}}, "x"), std::out_of_range);
}

TEST(Export, RunDirectoryLayout) {
  const auto root = std::filesystem::temp_directory_path() / "ballbot_export_test";
  std::filesystem::remove_all(root);
  const auto dir = run_directory(root, "simulate", "rest", "r1");
  EXPECT_EQ(dir, root / "simulate" / "rest" / "r1");
  EXPECT_TRUE(std::filesystem::is_directory(dir));
  write_json(dir / "x.json", {{"a", 1}});
  std::ifstream in(dir / "x.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "{\n  \"a\": 1\n}\n");
  std::filesystem::remove_all(root);
}

TEST(Export, TimestampRunIdShape) {
  const std::string id = timestamp_run_id();
  ASSERT_EQ(id.size(), 16u);
  EXPECT_EQ(id[8], 'T');
  EXPECT_EQ(id.back(), 'Z');
}

}  // namespace
}  // namespace ballbot::artifacts
