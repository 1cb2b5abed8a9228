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

#ifndef DEXMPC_TUNER_H_
#define DEXMPC_TUNER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dexmpc/cost.h"
#include "dexmpc/metrics.h"
#include "dexmpc/task.h"

namespace dexmpc {

// -|omega - target| - lambda * drops/min
double ScoreRolling(const EpisodeMetrics& m, double target_omega,
                    double lambda_drop = 0.5);
// -|height - target| / target + flips/min / 100 - lambda * drops/min
double ScoreFlipping(const EpisodeMetrics& m, double target_height,
                     double lambda_drop = 0.05);
double Score(const ScoreSpec& spec, const EpisodeMetrics& m);

// One swept weight. component < 0 addresses a scalar weight.
struct GridAxis {
  TermKind term = TermKind::kInHand;
  int component = -1;
  std::vector<double> values;
  std::string label() const;  // e.g. "w_LinVel.z"
};

// Grid file layout:
//   {"name", "task": "path relative to the grid file",
//    "axes": [{"term": "w_Height" | "BallHeight", "component": "z" | 2,
//              "values": [...] | "linspace": [lo, hi, n]}],
//    "duration", "seeds", "score", "workers", "output_dir"}
// Missing seeds and score fall back to the task's.
struct GridSpec {
  std::string name = "grid";
  std::string task_path;
  std::vector<GridAxis> axes;
  double duration = 60.0;
  std::vector<uint64_t> seeds;
  std::optional<ScoreSpec> score;
  int workers = 1;  // combinations in flight
  std::string output_dir = "out/grid";

  std::size_t num_combinations() const;
  // row-major, last axis fastest
  std::vector<double> Combination(std::size_t index) const;
};
GridSpec GridSpecFromJson(const nlohmann::json& j);
GridSpec LoadGridSpec(const std::string& path);

// base with the axes' weights overwritten; throws ConfigError when an axis
// names a term the spec lacks or a component it does not have
CostSpec ApplyAxes(const CostSpec& base, const std::vector<GridAxis>& axes,
                   const std::vector<double>& values);

struct GridRow {
  std::size_t index = 0;
  std::vector<double> values;
  // nullopt where the episode degenerated
  std::vector<std::optional<EpisodeMetrics>> per_seed;
  // mean over the non-degenerate seeds; -inf when every seed degenerated
  double score = 0.0;
};

struct GridResult {
  std::vector<std::string> labels;
  std::vector<GridRow> rows;  // in grid order
  std::size_t best = 0;
  std::vector<std::size_t> ranking;  // best first, ties by grid index
  std::vector<double> best_values() const { return rows.at(best).values; }
};

// Runs one episode; nullopt reports a degenerate episode.
using EpisodeRunner = std::function<std::optional<EpisodeMetrics>(
    const CostSpec& spec, uint64_t seed)>;
// Maps episode metrics to a score; defaults to the grid's score spec.
using ScoreFn = std::function<double(const EpisodeMetrics&)>;

struct GridRunOptions {
  // append-only JSONL of finished rows; rows already present are not rerun
  std::string journal_path;
  ScoreFn score;
  std::function<void(const GridRow&)> on_row;
};

GridResult RunGrid(const GridSpec& grid, const CostSpec& base,
                   const EpisodeRunner& runner,
                   const GridRunOptions& options = {});

// Episodes of `task` with a replaced spec, DegenerateEpisode -> nullopt.
EpisodeRunner TaskRunner(const TaskConfig& task, double duration,
                         int planner_workers = 1);

nlohmann::json ToJson(const GridResult& r);
void WriteGridCsv(const GridResult& r, const std::string& path);

}  // namespace dexmpc

#endif  // DEXMPC_TUNER_H_
