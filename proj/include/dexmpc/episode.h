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

#ifndef DEXMPC_EPISODE_H_
#define DEXMPC_EPISODE_H_

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>

#include "dexmpc/planner.h"
#include "dexmpc/trajectory.h"

namespace dexmpc {

// Single-slot channel: producers overwrite, the consumer reads the newest
// value without blocking.
template <typename T>
class LatestValue {
 public:
  void Publish(T value) {
    std::lock_guard<std::mutex> lock(mutex_);
    value_ = std::move(value);
    ++sequence_;
  }
  // newest value and its sequence number (0 = nothing published yet)
  std::pair<std::optional<T>, uint64_t> Read() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return {value_, sequence_};
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
  uint64_t sequence_ = 0;
};

struct BallMeasurement {
  double stamp = 0.0;
  Vec3 position = Vec3::Zero();
  // finite-difference estimate, when available
  std::optional<Vec3> velocity;
};

// Source of measured ball positions for the planner's belief state.
// Simulation-driven sources sample the true state in Observe; external
// sources (sockets, replay) publish from their own thread and ignore it.
class StateFeed {
 public:
  virtual ~StateFeed() = default;
  virtual void Observe(const SystemState& truth) { (void)truth; }
  LatestValue<BallMeasurement>& channel() { return channel_; }

 private:
  LatestValue<BallMeasurement> channel_;
};

// Feed that reports the true ball position exactly.
class TruthFeed final : public StateFeed {
 public:
  void Observe(const SystemState& truth) override {
    channel().Publish({truth.sim_time, truth.ball_position, std::nullopt});
  }
};

struct EpisodeOptions {
  double duration = 1.0;  // seconds
  StateOverrides initial;
  // after a drop the ball is put back on the palm once this much time has
  // passed; negative disables reinitialization
  double reinit_delay = 0.5;
  StateFeed* feed = nullptr;
  // also overwrite the belief velocity when the feed provides one
  bool inject_velocity = false;
  bool log_term_costs = true;
  // called after every tick; returning false stops the episode early
  std::function<bool(const TickRecord&)> on_tick;
};

// Closed loop at the planner tick rate: inject measurements into the belief
// state, plan, advance the true system one tick, shift the nominal.
// Throws DegenerateEpisode when every tick degenerated.
TrajectoryLog RunEpisode(const Planner& planner, const EpisodeOptions& options);

}  // namespace dexmpc

#endif  // DEXMPC_EPISODE_H_
