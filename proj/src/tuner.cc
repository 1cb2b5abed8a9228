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

#include "dexmpc/tuner.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>

#include "dexmpc/errors.h"
#include "dexmpc/thread_pool.h"
#include "dexmpc/trajectory.h"

namespace dexmpc {

namespace fs = std::filesystem;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int ComponentFromJson(const nlohmann::json& c) {
  if (c.is_number_integer()) {
    const int i = c.get<int>();
    if (i < 0) throw ConfigError("axis component must be >= 0");
    return i;
  }
  if (c.is_string()) {
    const std::string s = c.get<std::string>();
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
  }
  throw ConfigError("axis component must be an index or one of x, y, z");
}

GridAxis AxisFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("grid axis must be an object");
  GridAxis a;
  bool has_term = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "term") {
      const std::string name = value.get<std::string>();
      const auto by_key = TermFromWeightKey(name);
      a.term = by_key ? *by_key : TermFromName(name);
      has_term = true;
    } else if (key == "component") {
      a.component = ComponentFromJson(value);
    } else if (key == "values") {
      a.values = value.get<std::vector<double>>();
    } else if (key == "linspace") {
      const auto v = value.get<std::vector<double>>();
      if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) {
        throw ConfigError("linspace needs [lo, hi, count]");
      }
      const int n = static_cast<int>(v[2]);
      for (int i = 0; i < n; ++i) {
        a.values.push_back(n == 1 ? v[0] : v[0] + (v[1] - v[0]) * i / (n - 1));
      }
    } else {
      throw ConfigError("grid axis: unknown field '" + key + "'");
    }
  }
  if (!has_term) throw ConfigError("grid axis: 'term' is required");
  if (a.values.empty()) throw ConfigError("grid axis " + a.label() + ": no values");
  for (double v : a.values) {
    if (!std::isfinite(v)) throw ConfigError("grid axis values must be finite");
  }
  return a;
}

nlohmann::json RowJson(const GridRow& row) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& m : row.per_seed) {
    seeds.push_back(m ? ToJson(*m) : nlohmann::json());
  }
  return {{"index", row.index},
          {"values", row.values},
          {"per_seed", seeds},
          {"score", std::isfinite(row.score) ? nlohmann::json(row.score)
                                             : nlohmann::json()}};
}

GridRow RowFromJson(const nlohmann::json& j) {
  GridRow row;
  row.index = j.at("index").get<std::size_t>();
  row.values = j.at("values").get<std::vector<double>>();
  for (const auto& m : j.at("per_seed")) {
    row.per_seed.push_back(m.is_null() ? std::nullopt
                                       : std::optional(MetricsFromJson(m)));
  }
  row.score = j.at("score").is_null() ? kNegInf : j["score"].get<double>();
  return row;
}

// rows of a previous run of the same grid, keyed by index
std::map<std::size_t, GridRow> ReadJournal(const std::string& path,
                                           const GridSpec& grid) {
  std::map<std::size_t, GridRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    GridRow row;
    try {
      row = RowFromJson(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception&) {
      // a torn final line from an interrupted run is rerun
      continue;
    }
    if (row.index >= grid.num_combinations() ||
        row.values != grid.Combination(row.index)) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": journal does not belong to this grid");
    }
    rows[row.index] = std::move(row);
  }
  return rows;
}

}  // namespace

double ScoreRolling(const EpisodeMetrics& m, double target_omega,
                    double lambda_drop) {
  return -std::abs(m.mean_rot_vel - target_omega) -
         lambda_drop * m.drops_per_min;
}

double ScoreFlipping(const EpisodeMetrics& m, double target_height,
                     double lambda_drop) {
  if (!(target_height > 0.0)) {
    throw ContractViolation("flipping score needs a positive target height");
  }
  return -std::abs(m.mean_flip_height - target_height) / target_height +
         m.flips_per_min / 100.0 - lambda_drop * m.drops_per_min;
}

double Score(const ScoreSpec& spec, const EpisodeMetrics& m) {
  return spec.kind == ScoreSpec::Kind::kRolling
             ? ScoreRolling(m, spec.target, spec.lambda_drop)
             : ScoreFlipping(m, spec.target, spec.lambda_drop);
}

std::string GridAxis::label() const {
  std::string s(TermWeightKey(term));
  if (component >= 0) {
    s += '.';
    s += component < 3 ? std::string(1, "xyz"[component])
                       : std::to_string(component);
  }
  return s;
}

std::size_t GridSpec::num_combinations() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::vector<double> GridSpec::Combination(std::size_t index) const {
  if (index >= num_combinations()) {
    throw ContractViolation("grid index out of range");
  }
  std::vector<double> out(axes.size());
  for (std::size_t i = axes.size(); i-- > 0;) {
    const std::size_t n = axes[i].values.size();
    out[i] = axes[i].values[index % n];
    index /= n;
  }
  return out;
}

GridSpec GridSpecFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("grid file must be a JSON object");
  GridSpec g;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
        g.name = value.get<std::string>();
      } else if (key == "description") {
        if (!value.is_string()) throw ConfigError("description: not a string");
      } else if (key == "task") {
        g.task_path = value.get<std::string>();
      } else if (key == "axes") {
        if (!value.is_array() || value.empty()) {
          throw ConfigError("grid: 'axes' must be a non-empty array");
        }
        for (const auto& a : value) g.axes.push_back(AxisFromJson(a));
      } else if (key == "duration") {
        g.duration = value.get<double>();
      } else if (key == "seeds") {
        g.seeds = value.get<std::vector<uint64_t>>();
        if (g.seeds.empty()) throw ConfigError("grid: seeds must not be empty");
      } else if (key == "score") {
        g.score = ScoreSpecFromJson(value);
      } else if (key == "workers") {
        g.workers = value.get<int>();
      } else if (key == "output_dir") {
        g.output_dir = value.get<std::string>();
      } else {
        throw ConfigError("grid: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid file: ") + e.what());
  }
  if (g.axes.empty()) throw ConfigError("grid: 'axes' is required");
  if (!(g.duration > 0.0) || !std::isfinite(g.duration)) {
    throw ConfigError("grid: duration must be positive");
  }
  if (g.workers < 1) throw ConfigError("grid: workers must be >= 1");
  return g;
}

GridSpec LoadGridSpec(const std::string& path) {
  GridSpec g = GridSpecFromJson(ReadJsonFile(path));
  if (g.task_path.empty()) throw ConfigError(path + ": 'task' is required");
  fs::path task(g.task_path);
  if (task.is_relative()) task = fs::path(path).parent_path() / task;
  g.task_path = task.lexically_normal().string();
  return g;
}

CostSpec ApplyAxes(const CostSpec& base, const std::vector<GridAxis>& axes,
                   const std::vector<double>& values) {
  if (values.size() != axes.size()) {
    throw ContractViolation("one value per grid axis expected");
  }
  CostSpec out = base;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const GridAxis& a = axes[i];
    CostTerm* t = out.find(a.term);
    if (t == nullptr) {
      throw ConfigError("grid axis " + a.label() +
                        ": the cost spec has no such term");
    }
    if (a.component < 0) {
      if (t->vector_weight) {
        throw ConfigError("grid axis " + a.label() +
                          ": vector weight needs a component");
      }
      t->weight[0] = values[i];
    } else {
      if (!t->vector_weight || a.component >= t->weight.size()) {
        throw ConfigError("grid axis " + a.label() +
                          ": component out of range");
      }
      t->weight[a.component] = values[i];
    }
  }
  return out;
}

GridResult RunGrid(const GridSpec& grid, const CostSpec& base,
                   const EpisodeRunner& runner,
                   const GridRunOptions& options) {
  const std::size_t n = grid.num_combinations();
  if (n == 0) throw ConfigError("grid has no combinations");
  if (grid.seeds.empty()) throw ConfigError("grid has no seeds");
  ScoreFn score = options.score;
  if (!score) {
    if (!grid.score) throw ConfigError("grid has no score");
    score = [spec = *grid.score](const EpisodeMetrics& m) {
      return Score(spec, m);
    };
  }
  // fail on bad axes before anything runs
  ApplyAxes(base, grid.axes, grid.Combination(0));

  GridResult result;
  for (const auto& a : grid.axes) result.labels.push_back(a.label());
  result.rows.resize(n);

  std::map<std::size_t, GridRow> done;
  if (!options.journal_path.empty()) {
    done = ReadJournal(options.journal_path, grid);
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    auto it = done.find(i);
    if (it != done.end()) {
      result.rows[i] = std::move(it->second);
    } else {
      pending.push_back(i);
    }
  }

  std::ofstream journal;
  if (!options.journal_path.empty()) {
    bool torn = false;
    {
      std::ifstream in(options.journal_path, std::ios::binary | std::ios::ate);
      if (in && in.tellg() > 0) {
        in.seekg(-1, std::ios::end);
        torn = in.get() != '\n';
      }
    }
    journal.open(options.journal_path, std::ios::app);
    if (!journal) throw ConfigError("cannot write " + options.journal_path);
    if (torn) journal << "\n";
  }
  std::mutex mutex;
  ThreadPool pool(std::min<int>(grid.workers,
                                static_cast<int>(std::max<std::size_t>(
                                    pending.size(), 1))));
  pool.ParallelFor(pending.size(), [&](std::size_t p) {
    GridRow row;
    row.index = pending[p];
    row.values = grid.Combination(row.index);
    const CostSpec spec = ApplyAxes(base, grid.axes, row.values);
    double sum = 0.0;
    int valid = 0;
    for (uint64_t seed : grid.seeds) {
      std::optional<EpisodeMetrics> m = runner(spec, seed);
      if (m) {
        const double s = score(*m);
        if (!std::isnan(s)) {
          sum += s;
          ++valid;
        }
      }
      row.per_seed.push_back(std::move(m));
    }
    row.score = valid > 0 ? sum / valid : kNegInf;
    std::lock_guard<std::mutex> lock(mutex);
    if (journal.is_open()) {
      journal << RowJson(row).dump() << "\n";
      journal.flush();
    }
    if (options.on_row) options.on_row(row);
    result.rows[row.index] = std::move(row);
  });

  result.ranking.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.ranking[i] = i;
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return result.rows[a].score > result.rows[b].score;
                   });
  result.best = result.ranking.front();
  return result;
}

EpisodeRunner TaskRunner(const TaskConfig& task, double duration,
                         int planner_workers) {
  return [task, duration, planner_workers](
             const CostSpec& spec,
             uint64_t seed) -> std::optional<EpisodeMetrics> {
    try {
      return RunTaskEpisode(task, seed, &spec, duration, planner_workers)
          .metrics;
    } catch (const DegenerateEpisode&) {
      return std::nullopt;
    }
  };
}

nlohmann::json ToJson(const GridResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back(RowJson(row));
  nlohmann::json best;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    best[r.labels[i]] = r.rows.at(r.best).values[i];
  }
  return {{"labels", r.labels},
          {"num_combinations", r.rows.size()},
          {"best_index", r.best},
          {"best_weights", best},
          {"best_score", RowJson(r.rows.at(r.best))["score"]},
          {"ranking", r.ranking},
          {"rows", rows}};
}

void WriteGridCsv(const GridResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "index";
  for (const auto& l : r.labels) out << "," << l;
  out << ",score,mean_rot_vel,drops_per_min,flips_per_min,mean_flip_height,"
         "degenerate_seeds\n";
  for (const auto& row : r.rows) {
    out << row.index;
    for (double v : row.values) out << "," << FormatDouble(v);
    out << "," << FormatDouble(row.score);
    double rot = 0, drops = 0, flips = 0, height = 0;
    int valid = 0;
    for (const auto& m : row.per_seed) {
      if (!m) continue;
      rot += m->mean_rot_vel;
      drops += m->drops_per_min;
      flips += m->flips_per_min;
      height += m->mean_flip_height;
      ++valid;
    }
    const double d = valid > 0 ? valid : std::nan("");
    out << "," << FormatDouble(rot / d) << "," << FormatDouble(drops / d)
        << "," << FormatDouble(flips / d) << "," << FormatDouble(height / d)
        << "," << row.per_seed.size() - valid << "\n";
  }
}

}  // namespace dexmpc
