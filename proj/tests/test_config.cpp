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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ballbot/config.hpp"
#include "test_support.hpp"

namespace ballbot::config {
namespace {

TEST(Config, PresetsLoad) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(preset(name)) << name;
  const auto doc = testing::lab();
  EXPECT_EQ(names(doc, "platforms"), (std::vector<std::string>{"miapure", "piptb"}));
  const auto pc = platform(doc, "miapure");
  EXPECT_EQ(pc.mode, sim::PlantMode::kBallbot);
  EXPECT_DOUBLE_EQ(pc.wip.m_b, 74.3);
  EXPECT_NO_THROW(pc.validate());
  EXPECT_EQ(platform(doc, "piptb").mode, sim::PlantMode::kPlanar);
}

TEST(Config, NullInertiasUseDerivedEstimates) {
  for (const auto& pc : {testing::miapure(), testing::piptb()}) {
    EXPECT_NEAR(pc.wip.I_w, 2.0 / 3.0 * pc.wip.m_w * pc.wip.r * pc.wip.r, 1e-15);
    EXPECT_NEAR(pc.wip.I_b, pc.wip.m_b * pc.wip.l * pc.wip.l / 3.0, 1e-12);
  }
}

TEST(Config, ExplicitInertiaOverridesEstimate) {
  Document doc = preset("lab");
  doc["platforms"]["miapure"] = {{"preset", "miapure"}, {"wip", {{"I_b", 12.5}}}};
  doc = resolve(doc);
  const auto pc = platform(doc, "miapure");
  EXPECT_DOUBLE_EQ(pc.wip.I_b, 12.5);
  EXPECT_DOUBLE_EQ(pc.wip.m_b, 74.3);
}

TEST(Config, OverridesApply) {
  Document doc = testing::lab();
  apply_override(doc, "platforms.miapure.mu=0.5");
  apply_override(doc, "tasks.braking.t_dur=1.5");
  apply_override(doc, "benchmarks.max-speed.headings_deg.1=45");
  apply_override(doc, "service.controller=lqr");
  EXPECT_DOUBLE_EQ(platform(doc, "miapure").mu, 0.5);
  EXPECT_DOUBLE_EQ(task(doc, "braking").task.t_dur, 1.5);
  EXPECT_NEAR(max_speed_benchmark(doc, "max-speed").headings[1], M_PI / 4, 1e-15);
  EXPECT_EQ(service(doc).controller, "lqr");
}

TEST(Config, OverrideOnMissingKeyIsRejected) {
  Document doc = testing::lab();
  EXPECT_THROW(apply_override(doc, "platforms.miapure.wip.mass=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "nope=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "benchmarks.max-speed.headings_deg.9=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "benchmarks.max-speed.headings_deg.x=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "no-equals-sign"), ConfigError);
  EXPECT_THROW(apply_override(doc, "a..b=1"), ConfigError);
}

TEST(Config, UnknownNamesListAlternatives) {
  const Document doc = testing::lab();
  try {
    scenario(doc, "missing");
    FAIL() << "expected UnknownName";
  } catch (const UnknownName& e) {
    EXPECT_EQ(e.available(), names(doc, "scenarios"));
    EXPECT_NE(std::string(e.what()).find("rest"), std::string::npos);
  }
  EXPECT_THROW(platform(doc, "segway"), UnknownName);
  EXPECT_THROW(task(doc, "sprint"), UnknownName);
  EXPECT_THROW(preset("unknown"), UnknownName);
}

TEST(Config, MalformedDocumentsRejected) {
  EXPECT_THROW(parse_document("{not json"), ConfigError);
  EXPECT_THROW(load_document("/nonexistent/config.json"), ConfigError);
  Document doc = testing::lab();
  doc["platforms"]["miapure"]["wip"]["extra"] = 1.0;
  EXPECT_THROW(platform(doc, "miapure"), ConfigError);
  doc = testing::lab();
  doc["platforms"]["miapure"]["mode"] = "tricycle";
  EXPECT_THROW(platform(doc, "miapure"), ConfigError);
  doc = testing::lab();
  doc["tasks"]["braking"]["n_knots"] = 5;
  EXPECT_THROW(task(doc, "braking"), ConfigError);
  doc = testing::lab();
  doc["benchmarks"]["max-speed"]["headings_deg"] = nlohmann::ordered_json::array();
  EXPECT_THROW(max_speed_benchmark(doc, "max-speed"), ConfigError);
  doc = testing::lab();
  doc["service"]["telemetry_hz"] = 500.0;
  EXPECT_THROW(service(doc), ConfigError);
}

TEST(Config, TasksAndScenariosResolve) {
  const Document doc = testing::lab();
  const auto tc = task(doc, "braking");
  EXPECT_EQ(tc.platform, "miapure");
  EXPECT_EQ(tc.n_knots, 50);
  EXPECT_FALSE(tc.task.tau_max.has_value());
  EXPECT_DOUBLE_EQ(tc.task.v0, 1.4);
  const auto spec = scenario(doc, "miapure-braking");
  ASSERT_EQ(spec.phases.size(), 4u);
  EXPECT_NEAR(spec.heading, M_PI, 1e-15);
  ASSERT_TRUE(spec.phases[2].trajectory);
  EXPECT_NEAR(spec.phases[2].duration, 2.0, 1e-12);
  EXPECT_EQ(benchmark_kind(doc, "min-braking"), BenchmarkKind::kMinBraking);
  EXPECT_THROW(benchmark_kind(doc, "unknown"), UnknownName);
}

TEST(Config, ServiceSettings) {
  const auto s = service(testing::lab());
  EXPECT_EQ(s.host, "127.0.0.1");
  EXPECT_DOUBLE_EQ(s.speed_limit, 2.0);
  EXPECT_DOUBLE_EQ(s.slew_rate, 1.5);
  EXPECT_DOUBLE_EQ(s.telemetry_hz, 50.0);
  EXPECT_NE(std::find(s.tunable.begin(), s.tunable.end(), "lqr.k1"), s.tunable.end());
  EXPECT_EQ(std::find(s.tunable.begin(), s.tunable.end(), "wip.m_b"), s.tunable.end());
}

}  // namespace
}  // namespace ballbot::config
