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

#include "dexmpc/planner.h"

#include <sstream>

#include <gtest/gtest.h>

#include "dexmpc/episode.h"
#include "dexmpc/errors.h"
#include "dexmpc/task.h"

namespace dexmpc {
namespace {

CostSpec PointMassSpec(const DynamicsModel& model) {
  return ValidateSpec(CostSpecFromJson(nlohmann::json::parse(R"({
      "terms": [{"name": "InHand", "weight": [1, 1, 0]},
                {"name": "BallLinearVelocity", "weight": [0.1, 0.1, 0]}],
      "references": {"p_optimal": [0, 0, 0]}})")),
                      model);
}

PlannerConfig Preset() {
  PlannerConfig c;
  c.control_bounds = PointMass2D().control_bounds();
  return c;
}

StateOverrides Offset() {
  StateOverrides o;
  o.ball_position = Vec3(0.3, -0.2, 0.0);
  return o;
}

TEST(PlannerTest, ZeroNoiseKeepsNominal) {
  PointMass2D model;
  PlannerConfig c = Preset();
  c.noise_std = 0.0;
  const Planner planner(c, model, PointMassSpec(model));
  const SystemState x0 = model.Reset(Offset());
  const ControlSpline nominal = planner.InitialNominal(x0.sim_time);
  const auto [r, next] = planner.PlanTick(x0, nominal, 0, model.HomeControl());
  EXPECT_EQ(next, nominal);
  EXPECT_EQ(r.best_index, 0);
  EXPECT_FALSE(r.nominal_updated);
  for (double j : r.candidate_objectives) EXPECT_EQ(j, r.best_objective);
  EXPECT_EQ(r.best_objective,
            planner.RolloutObjective(nominal, x0,
                                     MakeContext(planner.spec(), x0)));
}

TEST(PlannerTest, SingleCandidateReplaysNominal) {
  PointMass2D model;
  PlannerConfig c = Preset();
  c.num_candidates = 1;
  const Planner planner(c, model, PointMassSpec(model));
  SystemState x = model.Reset(Offset());
  ControlSpline nominal = planner.InitialNominal(0.0);
  for (uint64_t n = 0; n < 10; ++n) {
    const auto [r, next] = planner.PlanTick(x, nominal, n, model.HomeControl());
    EXPECT_EQ(r.candidate_objectives.size(), 1u);
    EXPECT_FALSE(r.nominal_updated);
    EXPECT_EQ(next, nominal);
    AdvanceTick(model, x, r.best_control);
    nominal = ShiftHorizon(next, c.tick_dt());
  }
}

TEST(PlannerTest, BestIsArgminAndWithinBounds) {
  PointMass2D model;
  const Planner planner(Preset(), model, PointMassSpec(model));
  const SystemState x0 = model.Reset(Offset());
  const ControlSpline nominal = planner.InitialNominal(0.0);
  const auto [r, next] = planner.PlanTick(x0, nominal, 3, model.HomeControl());
  ASSERT_EQ(r.candidate_objectives.size(), 10u);
  for (double j : r.candidate_objectives) EXPECT_LE(r.best_objective, j);
  EXPECT_LE(r.best_objective, r.candidate_objectives[0]);
  EXPECT_TRUE(planner.config().control_bounds.Contains(r.best_control));
  const auto candidates = planner.SampleCandidates(nominal, 3);
  EXPECT_EQ(candidates[r.best_index], next);
}

TEST(PlannerTest, CandidateNoiseDoesNotDependOnK) {
  PointMass2D model;
  PlannerConfig small = Preset();
  PlannerConfig big = Preset();
  big.num_candidates = 1000;
  const Planner a(small, model, PointMassSpec(model));
  const Planner b(big, model, PointMassSpec(model));
  const ControlSpline nominal = a.InitialNominal(0.0);
  const auto ca = a.SampleCandidates(nominal, 17);
  const auto cb = b.SampleCandidates(nominal, 17);
  for (std::size_t k = 0; k < ca.size(); ++k) EXPECT_EQ(ca[k], cb[k]);
}

// Closed loop to the origin, plus a 100x-candidate search from the same
// states that must reach at least as low an objective every tick.
TEST(PlannerTest, PointMassReachesOriginAndBigKDominates) {
  PointMass2D model;
  PlannerConfig big_cfg = Preset();
  big_cfg.num_candidates = 1000;
  const CostSpec spec = PointMassSpec(model);
  const Planner planner(Preset(), model, spec);
  const Planner oracle(big_cfg, model, spec);
  SystemState x = model.Reset(Offset());
  ControlSpline nominal = planner.InitialNominal(0.0);
  Control previous = model.HomeControl();
  for (uint64_t n = 0; n < 100; ++n) {
    const auto [r, next] = planner.PlanTick(x, nominal, n, previous);
    if (n % 10 == 0) {
      const auto [ro, unused] = oracle.PlanTick(x, nominal, n, previous);
      EXPECT_LE(ro.best_objective, r.best_objective);
    }
    AdvanceTick(model, x, r.best_control);
    nominal = ShiftHorizon(next, planner.config().tick_dt());
    previous = r.best_control;
  }
  EXPECT_LT(x.ball_position.head<2>().norm(), 0.05);
}

TEST(PlannerTest, ArgminInvariantUnderWeightScaling) {
  PointMass2D model;
  const CostSpec spec = PointMassSpec(model);
  const Planner a(Preset(), model, spec);
  const Planner b(Preset(), model, ScaleWeights(spec, 7.25));
  SystemState x = model.Reset(Offset());
  ControlSpline nominal = a.InitialNominal(0.0);
  for (uint64_t n = 0; n < 30; ++n) {
    const auto [ra, next] = a.PlanTick(x, nominal, n, model.HomeControl());
    const auto [rb, unused] = b.PlanTick(x, nominal, n, model.HomeControl());
    EXPECT_EQ(ra.best_index, rb.best_index);
    AdvanceTick(model, x, ra.best_control);
    nominal = ShiftHorizon(next, a.config().tick_dt());
  }
}

TEST(PlannerTest, DegenerateTickHoldsPreviousControl) {
  PointMass2D model;
  const Planner planner(Preset(), model, PointMassSpec(model));
  const SystemState x0 = model.Reset();
  SystemState bad = x0;
  bad.ball_position.x() = 1e300;  // squares overflow
  const Control previous = Eigen::Vector2d(0.25, -0.5);
  const auto [r, next] =
      planner.PlanTick(bad, planner.InitialNominal(0.0), 0, previous);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.best_control, previous);
}

TEST(PlannerTest, RejectsBadDimensions) {
  PointMass2D model;
  const Planner planner(Preset(), model, PointMassSpec(model));
  const ControlSpline wrong =
      ControlSpline::Constant(0, 5, 0.0, 1.0, Eigen::Vector3d::Zero());
  EXPECT_THROW(planner.PlanTick(model.Reset(), wrong, 0, model.HomeControl()),
               ConfigError);
  PlannerConfig c = Preset();
  c.num_knots = 0;
  EXPECT_THROW(Planner(c, model, PointMassSpec(model)), ConfigError);
}

TEST(EpisodeTest, OneTickGivesOneRecord) {
  PointMass2D model;
  const Planner planner(Preset(), model, PointMassSpec(model));
  EpisodeOptions opts;
  opts.duration = 1.0 / kControlRate;
  EXPECT_EQ(RunEpisode(planner, opts).ticks.size(), 1u);
}

TEST(EpisodeTest, TruthFeedMatchesNoFeed) {
  const TaskConfig task = LoadTask("tasks/rolling.json");
  TruthFeed feed;
  const auto plain = RunTaskEpisode(task, 4, nullptr, 3.0);
  const auto fed = RunTaskEpisode(task, 4, nullptr, 3.0, 1, &feed);
  std::ostringstream a, b;
  WriteTrajectoryCsv(plain.log, a);
  WriteTrajectoryCsv(fed.log, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(EpisodeTest, WorkerCountDoesNotChangeTrajectory) {
  const TaskConfig task = LoadTask("tasks/flipping.json");
  const auto one = RunTaskEpisode(task, 2, nullptr, 2.0, 1);
  const auto three = RunTaskEpisode(task, 2, nullptr, 2.0, 3);
  std::ostringstream a, b;
  WriteTrajectoryCsv(one.log, a);
  WriteTrajectoryCsv(three.log, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(EpisodeTest, StaleFeedIsFlagged) {
  const TaskConfig task = LoadTask("tasks/rolling.json");
  StateFeed silent;  // never publishes
  const auto r = RunTaskEpisode(task, 0, nullptr, 0.5, 1, &silent);
  for (const auto& t : r.log.ticks) EXPECT_TRUE(t.stale);
}

TEST(EpisodeTest, CsvRoundTripIsExact) {
  const TaskConfig task = LoadTask("tasks/arm_flipping.json");
  const auto r = RunTaskEpisode(task, 1, nullptr, 1.0);
  std::ostringstream a;
  WriteTrajectoryCsv(r.log, a);
  std::istringstream in(a.str());
  const TrajectoryLog back = ReadTrajectoryCsv(in);
  ASSERT_EQ(back.ticks.size(), r.log.ticks.size());
  for (std::size_t i = 0; i < back.ticks.size(); ++i) {
    EXPECT_TRUE(back.ticks[i].state == r.log.ticks[i].state);
    EXPECT_EQ(back.ticks[i].control, r.log.ticks[i].control);
  }
  std::ostringstream b;
  WriteTrajectoryCsv(back, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(EpisodeTest, MalformedCsvThrows) {
  std::istringstream in("tick,sim_time\n0,abc\n");
  EXPECT_THROW(ReadTrajectoryCsv(in), ParseError);
}

}  // namespace
}  // namespace dexmpc
