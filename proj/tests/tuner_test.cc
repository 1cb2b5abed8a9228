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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dexmpc/errors.h"

namespace dexmpc {
namespace {

EpisodeMetrics Rolling(double omega, double drops) {
  EpisodeMetrics m;
  m.mean_rot_vel = omega;
  m.drops_per_min = drops;
  return m;
}

EpisodeMetrics Flipping(double height, double flips, double drops) {
  EpisodeMetrics m;
  m.mean_flip_height = height;
  m.flips_per_min = flips;
  m.drops_per_min = drops;
  return m;
}

GridSpec Square(int n) {
  GridSpec g;
  GridAxis a;
  a.term = TermKind::kBallOrientation;
  GridAxis b;
  b.term = TermKind::kHoldBall;
  for (int i = 0; i < n; ++i) {
    a.values.push_back(i);
    b.values.push_back(10 * i);
  }
  g.axes = {a, b};
  g.seeds = {0, 1};
  g.score = ScoreSpec{};
  return g;
}

CostSpec RollingSpec() { return LoadTask("tasks/rolling.json").cost; }

// Stub episode whose omega encodes the two swept weights.
EpisodeRunner PlantedRunner(double best_a, double best_b) {
  return [=](const CostSpec& spec, uint64_t) {
    const double a = spec.find(TermKind::kBallOrientation)->weight[0];
    const double b = spec.find(TermKind::kHoldBall)->weight[0];
    return Rolling(1.0 - std::abs(a - best_a) - std::abs(b - best_b), 0.0);
  };
}

TEST(ScoreTest, RollingExamples) {
  EXPECT_EQ(ScoreRolling(Rolling(1.0, 0.0), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(ScoreRolling(Rolling(1.0, 2.0), 1.0), -1.0);
  EXPECT_NEAR(ScoreRolling(Rolling(0.99, 0.6), 1.0), -0.31, 1e-12);
  EXPECT_LT(ScoreRolling(Rolling(0.99, 0.6), 1.0),
            ScoreRolling(Rolling(1.0, 0.0), 1.0));
}

TEST(ScoreTest, RollingStrictlyDecreasesWithDrops) {
  double prev = ScoreRolling(Rolling(0.9, 0.0), 1.0);
  for (double d = 0.1; d < 10; d += 0.1) {
    const double s = ScoreRolling(Rolling(0.9, d), 1.0);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(ScoreTest, FlippingExamples) {
  EXPECT_DOUBLE_EQ(ScoreFlipping(Flipping(0.15, 0, 0), 0.15), 0.0);
  EXPECT_DOUBLE_EQ(ScoreFlipping(Flipping(0.15, 50, 0), 0.15), 0.5);
  EXPECT_NEAR(ScoreFlipping(Flipping(0.075, 100, 2), 0.15), -0.5 + 1 - 0.1,
              1e-12);
  EXPECT_THROW(ScoreFlipping(Flipping(0.1, 1, 0), 0.0), ContractViolation);
}

// the slow careful row against the fast droppy row
TEST(ScoreTest, FlippingOrderingDependsOnDropPenalty) {
  const EpisodeMetrics careful = Flipping(0.096, 48, 1);
  const EpisodeMetrics droppy = Flipping(0.14, 91, 33);
  EXPECT_GT(ScoreFlipping(careful, 0.15, 0.05),
            ScoreFlipping(droppy, 0.15, 0.05));
  EXPECT_GT(ScoreFlipping(careful, 0.15, 1.0),
            ScoreFlipping(droppy, 0.15, 1.0));
  EXPECT_LT(ScoreFlipping(careful, 0.15, 0.0),
            ScoreFlipping(droppy, 0.15, 0.0));
}

TEST(GridTest, CombinationOrderIsRowMajor) {
  const GridSpec g = Square(3);
  EXPECT_EQ(g.num_combinations(), 9u);
  EXPECT_EQ(g.Combination(0), (std::vector<double>{0, 0}));
  EXPECT_EQ(g.Combination(1), (std::vector<double>{0, 10}));
  EXPECT_EQ(g.Combination(5), (std::vector<double>{1, 20}));
  EXPECT_THROW(g.Combination(9), ContractViolation);
}

TEST(GridTest, ElevenByElevenHas121Rows) {
  const GridSpec g = Square(11);
  const GridResult r = RunGrid(g, RollingSpec(), PlantedRunner(3, 40));
  ASSERT_EQ(r.rows.size(), 121u);
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].index, i);
    EXPECT_EQ(r.rows[i].per_seed.size(), 2u);
    seen.insert(r.rows[i].values);
  }
  EXPECT_EQ(seen.size(), 121u);
}

TEST(GridTest, PlantedOptimumFound) {
  std::mt19937_64 gen(2026);
  std::uniform_int_distribution<int> cell(0, 10);
  GridSpec g = Square(11);
  g.workers = 3;
  for (int trial = 0; trial < 20; ++trial) {
    const int a = cell(gen);
    const int b = cell(gen);
    const GridResult r = RunGrid(g, RollingSpec(), PlantedRunner(a, 10 * b));
    EXPECT_EQ(r.best_values(), (std::vector<double>{double(a), 10.0 * b}));
    EXPECT_EQ(r.best, static_cast<std::size_t>(11 * a + b));
  }
}

TEST(GridTest, TiesGoToEarliestIndex) {
  const GridSpec g = Square(4);
  const GridResult r = RunGrid(
      g, RollingSpec(), [](const CostSpec&, uint64_t) { return Rolling(1, 0); });
  EXPECT_EQ(r.best, 0u);
  for (std::size_t i = 0; i < r.ranking.size(); ++i) EXPECT_EQ(r.ranking[i], i);
}

TEST(GridTest, AllDegenerateRowScoresMinusInfinity) {
  const GridSpec g = Square(2);
  const GridResult r = RunGrid(
      g, RollingSpec(),
      [](const CostSpec& spec, uint64_t seed) -> std::optional<EpisodeMetrics> {
        if (spec.find(TermKind::kBallOrientation)->weight[0] == 1.0) {
          return std::nullopt;
        }
        if (seed == 1) return std::nullopt;  // partial: mean over the rest
        return Rolling(0.5, 0.0);
      });
  EXPECT_DOUBLE_EQ(r.rows[0].score, -0.5);
  EXPECT_EQ(r.rows[2].score, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.rows[3].score, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.ranking.back(), 3u);
}

TEST(GridTest, WorkerCountDoesNotChangeResult) {
  GridSpec g = Square(5);
  const GridResult one = RunGrid(g, RollingSpec(), PlantedRunner(2, 30));
  g.workers = 4;
  const GridResult four = RunGrid(g, RollingSpec(), PlantedRunner(2, 30));
  EXPECT_EQ(ToJson(one), ToJson(four));
}

TEST(GridTest, JournalResumesWithoutRerunning) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dexmpc_grid_journal.jsonl")
          .string();
  std::filesystem::remove(path);
  const GridSpec g = Square(5);
  GridRunOptions opts;
  opts.journal_path = path;
  const GridResult full = RunGrid(g, RollingSpec(), PlantedRunner(1, 20), opts);

  // keep 10 rows plus a torn line, as after a crash
  std::ifstream in(path);
  std::string line, kept;
  for (int i = 0; i < 10 && std::getline(in, line); ++i) kept += line + "\n";
  in.close();
  std::ofstream(path) << kept << "{\"index\": 1";

  std::atomic<int> calls{0};
  const EpisodeRunner inner = PlantedRunner(1, 20);
  const GridResult resumed = RunGrid(
      g, RollingSpec(),
      [&](const CostSpec& s, uint64_t seed) {
        ++calls;
        return inner(s, seed);
      },
      opts);
  EXPECT_EQ(calls.load(), (25 - 10) * 2);
  EXPECT_EQ(ToJson(resumed), ToJson(full));
  calls = 0;
  RunGrid(
      g, RollingSpec(),
      [&](const CostSpec& s, uint64_t seed) {
        ++calls;
        return inner(s, seed);
      },
      opts);
  EXPECT_EQ(calls.load(), 0);

  GridSpec other = Square(5);
  other.axes[0].values[0] = 99;
  EXPECT_THROW(RunGrid(other, RollingSpec(), PlantedRunner(1, 20), opts),
               ConfigError);
  std::filesystem::remove(path);
}

TEST(GridTest, AxisErrors) {
  GridSpec g = Square(2);
  g.axes[0].term = TermKind::kBallHeight;  // not in the rolling spec
  EXPECT_THROW(RunGrid(g, RollingSpec(), PlantedRunner(0, 0)), ConfigError);
  GridAxis vec;
  vec.term = TermKind::kBallLinearVelocity;
  vec.values = {1};
  EXPECT_THROW(ApplyAxes(RollingSpec(), {vec}, {1.0}), ConfigError);
  vec.component = 3;
  EXPECT_THROW(ApplyAxes(RollingSpec(), {vec}, {1.0}), ConfigError);
  vec.component = 2;
  const CostSpec s = ApplyAxes(RollingSpec(), {vec}, {-7.0});
  EXPECT_EQ(s.find(TermKind::kBallLinearVelocity)->weight[2], -7.0);
}

TEST(GridTest, ShippedGridsParse) {
  for (const char* path :
       {"grids/rolling_grid.json", "grids/flipping_grid.json"}) {
    SCOPED_TRACE(path);
    const GridSpec g = LoadGridSpec(path);
    EXPECT_EQ(g.num_combinations(), 121u);
    const TaskConfig task = LoadTask(g.task_path);
    EXPECT_NO_THROW(ApplyAxes(task.cost, g.axes, g.Combination(120)));
  }
  const GridSpec flip = LoadGridSpec("grids/flipping_grid.json");
  EXPECT_EQ(flip.axes[1].label(), "w_LinVel.z");
  EXPECT_THROW(GridSpecFromJson(nlohmann::json::parse(
                   R"({"axes": [{"term": "w_Nope", "values": [1]}]})")),
               ConfigError);
  EXPECT_THROW(GridSpecFromJson(nlohmann::json::parse(
                   R"({"axes": [{"term": "w_Height", "values": []}]})")),
               ConfigError);
}

// A singleton grid row carries exactly the metrics of a plain run.
TEST(GridTest, SingletonMatchesPlainEpisode) {
  const TaskConfig task = LoadTask("tasks/rolling.json");
  GridSpec g;
  GridAxis a;
  a.term = TermKind::kBallOrientation;
  a.values = {20};
  g.axes = {a};
  g.seeds = {3};
  g.score = task.score;
  const GridResult r = RunGrid(g, task.cost, TaskRunner(task, 2.0));
  ASSERT_EQ(r.rows.size(), 1u);
  const EpisodeMetrics plain = RunTaskEpisode(task, 3, nullptr, 2.0).metrics;
  EXPECT_EQ(ToJson(*r.rows[0].per_seed[0]), ToJson(plain));
  EXPECT_EQ(r.rows[0].score, Score(task.score, plain));
}

}  // namespace
}  // namespace dexmpc
