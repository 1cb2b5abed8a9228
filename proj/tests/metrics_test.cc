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

#include "dexmpc/metrics.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dexmpc/errors.h"

namespace dexmpc {
namespace {

constexpr double kDt = 1.0 / kControlRate;

TrajectoryLog Blank(int ticks) {
  TrajectoryLog log;
  for (int i = 0; i < ticks; ++i) {
    TickRecord r;
    r.tick = i;
    r.state.sim_time = i * kDt;
    r.state.ball_in_contact = true;
    log.ticks.push_back(r);
  }
  return log;
}

// rotation at `rate` rad/s about `axis`
TrajectoryLog Spinning(double seconds, double rate, const Vec3& axis) {
  TrajectoryLog log = Blank(static_cast<int>(std::lround(seconds / kDt)));
  for (auto& r : log.ticks) {
    r.state.ball_orientation = Quat(Eigen::AngleAxisd(rate * r.state.sim_time, axis));
  }
  return log;
}

// ballistic flights from z = 0 reaching `apex`, launched at the given times
TrajectoryLog Flights(double seconds, const std::vector<double>& launches,
                      double apex) {
  TrajectoryLog log = Blank(static_cast<int>(std::lround(seconds / kDt)));
  const double v0 = std::sqrt(2 * kGravity * apex);
  const double flight = 2 * v0 / kGravity;
  for (double t0 : launches) {
    // put one sample exactly on the apex
    const double t_apex = t0 + v0 / kGravity;
    for (auto& r : log.ticks) {
      const double t = r.state.sim_time;
      if (t > t0 && t < t0 + flight) {
        const double tau = t - t0;
        r.state.ball_in_contact = false;
        r.state.ball_position.z() = v0 * tau - 0.5 * kGravity * tau * tau;
      }
    }
    const long i = std::lround(t_apex / kDt);
    EXPECT_NEAR(i * kDt, t_apex, 1e-9) << "launch time must align the apex";
  }
  return log;
}

TEST(MetricsTest, ConstantOrientationHasNoRotation) {
  EXPECT_EQ(RotationalVelocity(Blank(30), -Vec3::UnitY()), 0.0);
}

TEST(MetricsTest, SyntheticRotationRecovered) {
  const TrajectoryLog log = Spinning(10.0, 1.0, -Vec3::UnitY());
  EXPECT_NEAR(RotationalVelocity(log, -Vec3::UnitY()), 1.0, 1e-6);
  EXPECT_NEAR(RotationalVelocity(log, Vec3::UnitY()), -1.0, 1e-6);
  EXPECT_NEAR(RotationalVelocity(log, Vec3::UnitX()), 0.0, 1e-12);
}

TEST(MetricsTest, FastRotationStillRecovered) {
  // 20 rad/s is 0.67 rad per tick, well inside the log map's range
  const TrajectoryLog log = Spinning(2.0, 20.0, Vec3::UnitZ());
  EXPECT_NEAR(RotationalVelocity(log, Vec3::UnitZ()), 20.0, 1e-9);
}

TEST(MetricsTest, RotationNeedsTwoTicks) {
  EXPECT_THROW(RotationalVelocity(Blank(1), Vec3::UnitZ()), UndefinedMetric);
}

TEST(MetricsTest, NoFlightsNoFlips) {
  const FlipStats f = CountFlips(Blank(300));
  EXPECT_EQ(f.count, 0);
  EXPECT_EQ(f.flips_per_min, 0.0);
  EXPECT_EQ(f.mean_height, 0.0);
}

TEST(MetricsTest, BallisticFlightsCounted) {
  // apex 0.10 m: v0/g = 0.142784 s; choose launches so the apex is on a tick
  const double v0 = std::sqrt(2 * kGravity * 0.10);
  const double rise = v0 / kGravity;
  std::vector<double> launches;
  for (double base : {5.0, 25.0, 45.0}) {
    const double t_apex = std::round((base + rise) / kDt) * kDt;
    launches.push_back(t_apex - rise);
  }
  const TrajectoryLog log = Flights(60.0, launches, 0.10);
  const FlipStats f = CountFlips(log);
  EXPECT_EQ(f.count, 3);
  EXPECT_NEAR(f.flips_per_min, 3.0, 1e-9);
  EXPECT_NEAR(f.mean_height, 0.10, 1e-12);
}

TEST(MetricsTest, MicroBouncesAreNotFlips) {
  const TrajectoryLog log = Flights(10.0, {}, 0.01);
  TrajectoryLog hop = log;
  for (int i = 100; i < 104; ++i) {
    hop.ticks[i].state.ball_in_contact = false;
    hop.ticks[i].state.ball_position.z() = 0.01;
  }
  EXPECT_EQ(CountFlips(hop).count, 0);
}

TEST(MetricsTest, FlightEndingInDropIsNotAFlip) {
  TrajectoryLog log = Blank(600);
  for (int i = 100; i < 200; ++i) {
    log.ticks[i].state.ball_in_contact = false;
    log.ticks[i].state.ball_position.z() = i < 120 ? 0.1 : -0.2;
    log.ticks[i].state.ball_dropped = i >= 120;
  }
  EXPECT_EQ(CountFlips(log).count, 0);
  EXPECT_EQ(CountDropEvents(log), 1);
}

TEST(MetricsTest, DropRates) {
  TrajectoryLog log = Blank(static_cast<int>(120 * kControlRate));
  EXPECT_EQ(DropsPerMinute(log), 0.0);
  for (int i = 100; i < 130; ++i) log.ticks[i].state.ball_dropped = true;
  for (int i = 1000; i < 1010; ++i) log.ticks[i].state.ball_dropped = true;
  EXPECT_NEAR(DropsPerMinute(log), 1.0, 1e-12);
}

TEST(MetricsTest, DropTimeExcludedFromFlipRate) {
  TrajectoryLog log = Flights(60.0, {}, 0.0);
  // 30 s of the minute spent dropped
  for (int i = 900; i < 1800; ++i) log.ticks[i].state.ball_dropped = true;
  log.ticks[100].state.ball_in_contact = false;
  for (int i = 101; i < 110; ++i) {
    log.ticks[i].state.ball_in_contact = false;
    log.ticks[i].state.ball_position.z() = 0.05;
  }
  const FlipStats f = CountFlips(log);
  EXPECT_EQ(f.count, 1);
  EXPECT_NEAR(f.flips_per_min, 2.0, 1e-9);
}

TEST(MetricsTest, ConcatenationDoublesCountsKeepsRates) {
  const double v0 = std::sqrt(2 * kGravity * 0.10);
  const double rise = v0 / kGravity;
  const double t_apex = std::round((3.0 + rise) / kDt) * kDt;
  TrajectoryLog log = Flights(20.0, {t_apex - rise}, 0.10);
  for (int i = 400; i < 420; ++i) log.ticks[i].state.ball_dropped = true;
  const TrajectoryLog twice = ConcatLogs(log, log);
  const MetricsConfig cfg;
  const EpisodeMetrics a = ComputeMetrics(log, cfg);
  const EpisodeMetrics b = ComputeMetrics(twice, cfg);
  EXPECT_EQ(b.num_flips, 2 * a.num_flips);
  EXPECT_EQ(b.num_drops, 2 * a.num_drops);
  EXPECT_EQ(b.flips_per_min, a.flips_per_min);
  EXPECT_EQ(b.drops_per_min, a.drops_per_min);
  EXPECT_EQ(b.mean_flip_height, a.mean_flip_height);
  EXPECT_EQ(b.duration, 2 * a.duration);
}

TEST(MetricsTest, CatchSuccessPerEpisode) {
  TrajectoryLog caught = Blank(90);
  for (int i = 0; i < 10; ++i) caught.ticks[i].state.ball_in_contact = false;
  TrajectoryLog missed = Blank(90);
  for (int i = 0; i < 90; ++i) {
    missed.ticks[i].state.ball_in_contact = i % 20 == 5;
  }
  EXPECT_EQ(CatchSuccess(caught), 1.0);
  EXPECT_EQ(CatchSuccess(missed), 0.0);
  EXPECT_EQ(CatchSuccess(ConcatLogs(caught, missed)), 0.5);
}

TEST(MetricsTest, JsonRoundTrip) {
  EpisodeMetrics m;
  m.mean_rot_vel = 0.97;
  m.flips_per_min = 48;
  m.catch_success = 0.75;
  m.duration = 60;
  EXPECT_EQ(ToJson(MetricsFromJson(ToJson(m))), ToJson(m));
  EXPECT_THROW(MetricsFromJson(nlohmann::json::object()), ParseError);
}

}  // namespace
}  // namespace dexmpc
