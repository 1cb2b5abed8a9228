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

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace fs = std::filesystem;

ScoreSpec ScoreSpecFromJson(const nlohmann::json& j) {
  ScoreSpec s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw ConfigError("score must be an object");
  bool lambda_set = false;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") {
        const auto kind = value.get<std::string>();
        if (kind == "rolling") {
          s.kind = ScoreSpec::Kind::kRolling;
        } else if (kind == "flipping") {
          s.kind = ScoreSpec::Kind::kFlipping;
        } else {
          throw ConfigError("score.kind must be rolling or flipping");
        }
      } else if (key == "target") {
        s.target = value.get<double>();
      } else if (key == "lambda_drop") {
        s.lambda_drop = value.get<double>();
        lambda_set = true;
      } else {
        throw ConfigError("score: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("score: ") + e.what());
  }
  if (!lambda_set) {
    s.lambda_drop = s.kind == ScoreSpec::Kind::kRolling ? 0.5 : 0.05;
  }
  if (!std::isfinite(s.target) || !std::isfinite(s.lambda_drop) ||
      s.lambda_drop < 0.0) {
    throw ConfigError("score: target and lambda_drop must be finite");
  }
  if (s.kind == ScoreSpec::Kind::kFlipping && !(s.target > 0.0)) {
    throw ConfigError("score: flipping target height must be positive");
  }
  return s;
}

nlohmann::json ToJson(const ScoreSpec& s) {
  return {{"kind", s.kind == ScoreSpec::Kind::kRolling ? "rolling" : "flipping"},
          {"target", s.target},
          {"lambda_drop", s.lambda_drop}};
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

nlohmann::json ReadJsonFile(const std::string& path) {
  const std::string text = ReadFile(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string GitBlobHash(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size() + 1);  // includes '\0'
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

TaskConfig TaskFromJson(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("task file must be a JSON object");
  TaskConfig t;
  t.raw = j;
  bool has_cost = false;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
        t.name = value.get<std::string>();
      } else if (key == "description") {
        if (!value.is_string()) throw ConfigError("description: not a string");
      } else if (key == "model") {
        if (!value.is_object() || !value.contains("name")) {
          throw ConfigError("model: needs {\"name\": ..., \"params\": {...}}");
        }
        for (const auto& [mk, _] : value.items()) {
          if (mk != "name" && mk != "params") {
            throw ConfigError("model: unknown field '" + mk + "'");
          }
        }
        t.model_name = value.at("name").get<std::string>();
        if (value.contains("params")) t.model_params = value["params"];
      } else if (key == "planner") {
        t.planner_json = value;
      } else if (key == "cost") {
        if (has_cost) throw ConfigError("give either cost or cost_file");
        t.cost = CostSpecFromJson(value);
        has_cost = true;
      } else if (key == "cost_file") {
        if (has_cost) throw ConfigError("give either cost or cost_file");
        fs::path p(value.get<std::string>());
        if (p.is_relative()) p = fs::path(base_dir) / p;
        t.cost = CostSpecFromJson(ReadJsonFile(p.string()));
        has_cost = true;
      } else if (key == "metrics") {
        t.metrics = MetricsConfigFromJson(value);
      } else if (key == "score") {
        t.score = ScoreSpecFromJson(value);
      } else if (key == "seeds") {
        t.seeds = value.get<std::vector<uint64_t>>();
        if (t.seeds.empty()) throw ConfigError("seeds: need at least one");
      } else if (key == "episode") {
        if (!value.is_object()) throw ConfigError("episode must be an object");
        for (const auto& [ek, ev] : value.items()) {
          if (ek == "duration") {
            t.duration = ev.get<double>();
          } else if (ek == "reinit_delay") {
            t.reinit_delay = ev.get<double>();
          } else if (ek == "initial") {
            t.initial = ev;
            OverridesFromJson(ev);  // schema check
          } else {
            throw ConfigError("episode: unknown field '" + ek + "'");
          }
        }
      } else if (key == "output_dir") {
        t.output_dir = value.get<std::string>();
      } else {
        throw ConfigError("unknown task field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("task file: ") + e.what());
  }
  if (t.model_name.empty()) throw ConfigError("task file: model is required");
  if (!has_cost) throw ConfigError("task file: cost or cost_file is required");
  if (!(t.duration > 0.0) || !std::isfinite(t.duration)) {
    throw ConfigError("episode.duration must be positive");
  }
  // full validation up front: the model, the planner and the spec
  auto model = MakeModel(t.model_name, t.model_params);
  PlannerConfigFromJson(t.planner_json, *model);
  ValidateSpec(t.cost, *model);
  if (t.metrics.catching && !t.initial.is_object()) {
    throw ConfigError("catching metrics need episode.initial");
  }
  return t;
}

TaskConfig LoadTask(const std::string& path) {
  const std::string bytes = ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  TaskConfig t = TaskFromJson(j, fs::path(path).parent_path().string());
  t.source_path = path;
  t.content_hash = GitBlobHash(bytes);
  return t;
}

TaskInstance Instantiate(const TaskConfig& task, uint64_t seed,
                         int num_workers) {
  TaskInstance inst;
  inst.model = MakeModel(task.model_name, task.model_params);
  inst.planner = PlannerConfigFromJson(task.planner_json, *inst.model);
  inst.planner.seed = seed;
  inst.planner.num_workers = num_workers;
  inst.planner.Validate(inst.model->control_dim());
  inst.spec = ValidateSpec(task.cost, *inst.model);
  return inst;
}

EpisodeOutcome RunTaskEpisode(const TaskConfig& task, uint64_t seed,
                              const CostSpec* cost, double duration,
                              int num_workers, StateFeed* feed) {
  TaskInstance inst = Instantiate(task, seed, num_workers);
  if (cost != nullptr) inst.spec = ValidateSpec(*cost, *inst.model);
  const Planner planner(inst.planner, *inst.model, inst.spec);
  EpisodeOptions opts;
  opts.duration = duration > 0.0 ? duration : task.duration;
  opts.initial = OverridesFromJson(task.initial);
  opts.reinit_delay = task.reinit_delay;
  opts.feed = feed;
  EpisodeOutcome out;
  out.log = RunEpisode(planner, opts);
  out.metrics = ComputeMetrics(out.log, task.metrics);
  return out;
}

}  // namespace dexmpc
