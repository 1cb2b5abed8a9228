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

#ifndef DEXMPC_TASK_H_
#define DEXMPC_TASK_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dexmpc/cost.h"
#include "dexmpc/dynamics.h"
#include "dexmpc/episode.h"
#include "dexmpc/metrics.h"
#include "dexmpc/planner.h"

namespace dexmpc {

// Scalar episode score used by both tuning procedures.
struct ScoreSpec {
  enum class Kind { kRolling, kFlipping };
  Kind kind = Kind::kRolling;
  double target = 1.0;  // rad/s or m
  double lambda_drop = 0.5;
};
ScoreSpec ScoreSpecFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ScoreSpec& s);

// A task file, fully validated. Layout:
//   {"name", "model": {"name", "params"}, "planner": {...},
//    "cost": {...} | "cost_file": "path relative to the task file",
//    "metrics": {...}, "score": {...}, "seeds": [...],
//    "episode": {"duration", "reinit_delay", "initial"}, "output_dir"}
struct TaskConfig {
  std::string name;
  std::string model_name;
  nlohmann::json model_params = nlohmann::json::object();
  nlohmann::json planner_json = nlohmann::json::object();
  CostSpec cost;  // as written; validate against the model before use
  MetricsConfig metrics;
  ScoreSpec score;
  std::vector<uint64_t> seeds{0};
  double duration = 60.0;
  double reinit_delay = 0.5;
  nlohmann::json initial = nlohmann::json::object();
  std::string output_dir = "out";

  // provenance
  std::string source_path;
  std::string content_hash;  // git blob id of the task file bytes
  nlohmann::json raw;
};

// Throws ConfigError with a field path on any schema problem.
TaskConfig TaskFromJson(const nlohmann::json& j, const std::string& base_dir);
TaskConfig LoadTask(const std::string& path);

// Live objects for one run of a task.
struct TaskInstance {
  std::unique_ptr<DynamicsModel> model;
  PlannerConfig planner;
  CostSpec spec;  // validated
};
TaskInstance Instantiate(const TaskConfig& task, uint64_t seed,
                         int num_workers = 1);

// One closed-loop episode of a task. `cost` replaces the task's spec when
// given; duration <= 0 uses the task's.
struct EpisodeOutcome {
  TrajectoryLog log;
  EpisodeMetrics metrics;
};
EpisodeOutcome RunTaskEpisode(const TaskConfig& task, uint64_t seed,
                              const CostSpec* cost = nullptr,
                              double duration = 0.0, int num_workers = 1,
                              StateFeed* feed = nullptr);

// git-compatible blob id: sha1("blob <n>\0" + bytes), lowercase hex
std::string GitBlobHash(const std::string& bytes);

std::string ReadFile(const std::string& path);
nlohmann::json ReadJsonFile(const std::string& path);

}  // namespace dexmpc

#endif  // DEXMPC_TASK_H_
