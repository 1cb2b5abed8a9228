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

#include "dexmpc/episode.h"

#include <cmath>
#include <cstring>
#include <string>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace {

bool SameBits(const Vec3& a, const Vec3& b) {
  for (int i = 0; i < 3; ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

// put the ball back on the palm; the hand keeps its posture
SystemState Reinitialize(const DynamicsModel& model, const SystemState& s) {
  StateOverrides o;
  o.hand_joints = s.hand_joints;
  o.hand_joint_velocities = s.hand_joint_velocities;
  if (s.has_arm()) {
    o.arm_joints = s.arm_joints;
    o.arm_joint_velocities = s.arm_joint_velocities;
  }
  o.sim_time = s.sim_time;
  o.ball_orientation = s.ball_orientation;
  o.ball_position = model.RestingBallPosition(s);
  return model.Reset(o);
}

}  // namespace

TrajectoryLog RunEpisode(const Planner& planner,
                         const EpisodeOptions& options) {
  if (!(options.duration > 0.0) || !std::isfinite(options.duration)) {
    throw ConfigError("episode duration must be positive");
  }
  const DynamicsModel& model = planner.model();
  const PlannerConfig& cfg = planner.config();
  const CostSpec& spec = planner.spec();
  const double dt = cfg.tick_dt();
  const long num_ticks =
      std::max(1L, std::lround(options.duration * cfg.tick_rate));

  TrajectoryLog log;
  log.model = model.name();
  log.tick_dt = dt;
  if (options.log_term_costs) {
    for (const auto& t : spec.terms) log.term_names.emplace_back(TermName(t.kind));
  }
  log.ticks.reserve(num_ticks);

  SystemState truth = model.Reset(options.initial);
  SystemState belief = truth;
  ControlSpline nominal = planner.InitialNominal(truth.sim_time);
  Control previous = cfg.control_bounds.Clamp(model.HomeControl());
  uint64_t last_sequence = 0;
  std::optional<double> dropped_since;
  long degenerate_ticks = 0;

  for (long n = 0; n < num_ticks; ++n) {
    TickRecord rec;
    rec.tick = static_cast<int>(n);

    if (truth.ball_dropped && options.reinit_delay >= 0.0) {
      if (!dropped_since) dropped_since = truth.sim_time;
      if (truth.sim_time - *dropped_since >= options.reinit_delay - 1e-9) {
        truth = Reinitialize(model, truth);
        belief = truth;
        rec.reinitialized = true;
        dropped_since.reset();
      }
    } else if (!truth.ball_dropped) {
      dropped_since.reset();
    }

    if (options.feed != nullptr) {
      options.feed->Observe(truth);
      const auto [m, sequence] = options.feed->channel().Read();
      if (m && sequence != last_sequence) {
        last_sequence = sequence;
        const bool new_velocity = options.inject_velocity && m->velocity;
        if (!SameBits(m->position, belief.ball_position) || new_velocity) {
          belief = model.InjectBall(
              belief, m->position,
              new_velocity ? m->velocity : std::optional<Vec3>());
        }
      } else {
        rec.stale = true;
      }
    } else {
      belief = truth;
    }

    rec.state = truth;
    auto [result, next] =
        planner.PlanTick(belief, nominal, static_cast<uint64_t>(n), previous);
    rec.control = result.best_control;
    rec.best_objective = result.best_objective;
    rec.best_index = result.best_index;
    rec.degenerate = result.degenerate;
    rec.late = result.late;
    rec.wall_time_ms = result.wall_time_ms;
    if (result.degenerate) ++degenerate_ticks;
    if (options.log_term_costs) {
      rec.term_costs = TermCosts(spec, MakeContext(spec, truth), truth,
                                 result.best_control);
    }

    AdvanceTick(model, truth, result.best_control, dt, cfg.substeps);
    if (options.feed != nullptr) {
      AdvanceTick(model, belief, result.best_control, dt, cfg.substeps);
    }
    nominal = ShiftHorizon(next, dt);
    previous = result.best_control;

    log.ticks.push_back(std::move(rec));
    if (options.on_tick && !options.on_tick(log.ticks.back())) break;
  }

  if (degenerate_ticks == static_cast<long>(log.ticks.size())) {
    throw DegenerateEpisode("every planning tick degenerated");
  }
  return log;
}

}  // namespace dexmpc
