// Copyright 2026 The dexmpc Authors
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

#include "dexmpc/task.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "dexmpc/errors.h"

namespace dexmpc {
namespace {

nlohmann::json Minimal() {
  return nlohmann::json::parse(R"({
    "name": "t", "model": {"name": "point_mass_2d"},
    "cost": {"terms": [{"name": "InHand", "weight": 1}]},
    "episode": {"duration": 1}})");
}

TEST(TaskTest, ShippedTasksLoad) {
  for (const auto& entry : std::filesystem::directory_iterator("tasks")) {
    SCOPED_TRACE(entry.path().string());
    const TaskConfig t = LoadTask(entry.path().string());
    EXPECT_EQ(t.content_hash.size(), 40u);
    EXPECT_NO_THROW(Instantiate(t, 0));
  }
}

TEST(TaskTest, ShippedPresets) {
  const TaskConfig arm = LoadTask("tasks/arm_flipping.json");
  const TaskInstance inst = Instantiate(arm, 0);
  EXPECT_EQ(inst.planner.spline_order, 2);
  EXPECT_EQ(inst.planner.num_knots, 8);
  EXPECT_EQ(inst.planner.num_candidates, 10);
  EXPECT_EQ(inst.planner.horizon_steps, 25);
  EXPECT_DOUBLE_EQ(inst.planner.noise_std, 0.1);
  const TaskInstance flip = Instantiate(LoadTask("tasks/flipping.json"), 0);
  EXPECT_DOUBLE_EQ(flip.planner.noise_std, 0.2);
}

TEST(TaskTest, GitBlobHash) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(GitBlobHash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(GitBlobHash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(TaskTest, MinimalTaskValidates) {
  const TaskConfig t = TaskFromJson(Minimal(), ".");
  EXPECT_EQ(t.model_name, "point_mass_2d");
  EXPECT_EQ(t.seeds, std::vector<uint64_t>{0});
}

TEST(TaskTest, SchemaErrors) {
  auto bad = [](auto mutate) {
    nlohmann::json j = Minimal();
    mutate(j);
    return j;
  };
  EXPECT_THROW(TaskFromJson(bad([](auto& j) { j["surprise"] = 1; }), "."),
               ConfigError);
  EXPECT_THROW(TaskFromJson(bad([](auto& j) { j.erase("cost"); }), "."),
               ConfigError);
  EXPECT_THROW(
      TaskFromJson(bad([](auto& j) { j["model"]["name"] = "robot"; }), "."),
      ConfigError);
  EXPECT_THROW(
      TaskFromJson(bad([](auto& j) { j["planner"] = {{"candidates", 0}}; }),
                   "."),
      ConfigError);
  EXPECT_THROW(
      TaskFromJson(bad([](auto& j) { j["episode"]["duration"] = -1; }), "."),
      ConfigError);
  EXPECT_THROW(
      TaskFromJson(bad([](auto& j) { j["seeds"] = nlohmann::json::array(); }),
                   "."),
      ConfigError);
  EXPECT_THROW(
      TaskFromJson(bad([](auto& j) { j["cost_file"] = "x.json"; }), "."),
      ConfigError);
  EXPECT_THROW(LoadTask("tasks/does_not_exist.json"), ConfigError);
}

TEST(TaskTest, ScoreDefaults) {
  EXPECT_DOUBLE_EQ(ScoreSpecFromJson({{"kind", "rolling"}}).lambda_drop, 0.5);
  EXPECT_DOUBLE_EQ(
      ScoreSpecFromJson({{"kind", "flipping"}, {"target", 0.1}}).lambda_drop,
      0.05);
  EXPECT_THROW(ScoreSpecFromJson({{"kind", "juggling"}}), ConfigError);
}

}  // namespace
}  // namespace dexmpc
