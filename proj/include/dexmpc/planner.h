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

#ifndef DEXMPC_PLANNER_H_
#define DEXMPC_PLANNER_H_

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dexmpc/cost.h"
#include "dexmpc/dynamics.h"
#include "dexmpc/spline.h"
#include "dexmpc/thread_pool.h"

namespace dexmpc {

struct PlannerConfig {
  int spline_order = 0;
  int num_knots = 5;
  int num_candidates = 10;
  int horizon_steps = 25;
  double noise_std = 0.1;
  ControlBounds control_bounds;
  uint64_t seed = 0;
  double tick_rate = kControlRate;
  int substeps = kSubstepsPerTick;
  int num_workers = 1;
  // a tick slower than this holds the previous control; 0 disables
  double budget_ms = 0.0;

  double tick_dt() const { return 1.0 / tick_rate; }
  double horizon_time() const { return horizon_steps * tick_dt(); }
  // throws ConfigError
  void Validate(int control_dim) const;
};

// Reads {order, knots, candidates, horizon, noise_std, [bounds], ...};
// missing bounds default to the model's.
PlannerConfig PlannerConfigFromJson(const nlohmann::json& j,
                                    const DynamicsModel& model);
nlohmann::json ToJson(const PlannerConfig& config);

struct PlanResult {
  Control best_control;
  double best_objective = 0.0;
  int best_index = 0;
  bool nominal_updated = false;
  bool degenerate = false;
  bool late = false;
  std::vector<double> candidate_objectives;
  double wall_time_ms = 0.0;
};

// Predictive Sampling. Candidate 0 is the nominal; candidates 1..K-1 add
// N(0, sigma^2) noise to every knot component (keyed by seed, tick and
// candidate index) and are clamped. The best rollout becomes the new
// nominal; ties go to the lowest index.
class Planner {
 public:
  // `spec` must already be validated against `model`. Without a pool the
  // planner owns one of config.num_workers threads.
  Planner(PlannerConfig config, const DynamicsModel& model, CostSpec spec,
          ThreadPool* pool = nullptr);

  const PlannerConfig& config() const { return config_; }
  const CostSpec& spec() const { return spec_; }
  const DynamicsModel& model() const { return model_; }

  // constant spline at the model's home control starting at t0
  ControlSpline InitialNominal(double t0) const;

  // previous_control is emitted on degenerate or late ticks
  std::pair<PlanResult, ControlSpline> PlanTick(
      const SystemState& x0, const ControlSpline& nominal,
      uint64_t tick_index, const Control& previous_control) const;

  // J of one candidate from x0; +inf when the rollout leaves the numeric
  // domain or the cost is not finite
  double RolloutObjective(const ControlSpline& candidate,
                          const SystemState& x0,
                          const CostContext& ctx) const;

  // the K candidates of a tick, before rollout
  std::vector<ControlSpline> SampleCandidates(const ControlSpline& nominal,
                                              uint64_t tick_index) const;

 private:
  PlannerConfig config_;
  const DynamicsModel& model_;
  CostSpec spec_;
  std::unique_ptr<ThreadPool> owned_pool_;
  ThreadPool* pool_;
};

}  // namespace dexmpc

#endif  // DEXMPC_PLANNER_H_
