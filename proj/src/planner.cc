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

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "dexmpc/errors.h"
#include "dexmpc/rng.h"

namespace dexmpc {

void PlannerConfig::Validate(int control_dim) const {
  if (spline_order < 0 || spline_order > 2) {
    throw ConfigError("planner: spline order must be 0, 1 or 2");
  }
  if (num_knots < spline_order + 1) {
    throw ConfigError("planner: need at least order + 1 knots");
  }
  if (num_candidates < 1) throw ConfigError("planner: need K >= 1");
  if (horizon_steps < 1) throw ConfigError("planner: need T >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("planner: noise_std must be finite and >= 0");
  }
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) {
    throw ConfigError("planner: tick_rate must be positive");
  }
  if (substeps < 1) throw ConfigError("planner: substeps must be >= 1");
  if (num_workers < 1) throw ConfigError("planner: workers must be >= 1");
  if (!(budget_ms >= 0.0)) throw ConfigError("planner: budget_ms must be >= 0");
  control_bounds.Validate();
  if (control_bounds.dim() != control_dim) {
    throw ConfigError("planner: bounds dimension " +
                      std::to_string(control_bounds.dim()) +
                      " does not match control dimension " +
                      std::to_string(control_dim));
  }
}

PlannerConfig PlannerConfigFromJson(const nlohmann::json& j,
                                    const DynamicsModel& model) {
  if (!j.is_object()) throw ConfigError("planner config must be an object");
  PlannerConfig c;
  c.control_bounds = model.control_bounds();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "order") {
        c.spline_order = value.get<int>();
      } else if (key == "knots") {
        c.num_knots = value.get<int>();
      } else if (key == "candidates") {
        c.num_candidates = value.get<int>();
      } else if (key == "horizon") {
        c.horizon_steps = value.get<int>();
      } else if (key == "noise_std") {
        c.noise_std = value.get<double>();
      } else if (key == "tick_rate") {
        c.tick_rate = value.get<double>();
      } else if (key == "substeps") {
        c.substeps = value.get<int>();
      } else if (key == "workers") {
        c.num_workers = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else if (key == "budget_ms") {
        c.budget_ms = value.get<double>();
      } else if (key == "bounds") {
        const auto lo = value.at("lo").get<std::vector<double>>();
        const auto hi = value.at("hi").get<std::vector<double>>();
        c.control_bounds = {FromStdVector(lo), FromStdVector(hi)};
      } else {
        throw ConfigError("planner: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("planner config: ") + e.what());
  }
  c.Validate(model.control_dim());
  return c;
}

nlohmann::json ToJson(const PlannerConfig& c) {
  return {{"order", c.spline_order},
          {"knots", c.num_knots},
          {"candidates", c.num_candidates},
          {"horizon", c.horizon_steps},
          {"noise_std", c.noise_std},
          {"tick_rate", c.tick_rate},
          {"substeps", c.substeps},
          {"seed", c.seed},
          {"budget_ms", c.budget_ms},
          {"bounds",
           {{"lo", ToStdVector(c.control_bounds.lo)},
            {"hi", ToStdVector(c.control_bounds.hi)}}}};
}

Planner::Planner(PlannerConfig config, const DynamicsModel& model,
                 CostSpec spec, ThreadPool* pool)
    : config_(std::move(config)), model_(model), spec_(std::move(spec)) {
  config_.Validate(model_.control_dim());
  if (pool == nullptr) {
    owned_pool_ = std::make_unique<ThreadPool>(config_.num_workers);
    pool_ = owned_pool_.get();
  } else {
    pool_ = pool;
  }
}

ControlSpline Planner::InitialNominal(double t0) const {
  return ControlSpline::Constant(
      config_.spline_order, config_.num_knots, t0, config_.horizon_time(),
      config_.control_bounds.Clamp(model_.HomeControl()));
}

std::vector<ControlSpline> Planner::SampleCandidates(
    const ControlSpline& nominal, uint64_t tick_index) const {
  const int k_total = config_.num_candidates;
  std::vector<ControlSpline> candidates;
  candidates.reserve(k_total);
  candidates.push_back(nominal);
  for (int k = 1; k < k_total; ++k) {
    CounterRng rng(config_.seed, tick_index, static_cast<uint32_t>(k));
    std::vector<Control> values = nominal.knot_values();
    for (auto& v : values) {
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        v[j] += config_.noise_std * rng.Normal();
      }
      v = config_.control_bounds.Clamp(v);
    }
    candidates.emplace_back(nominal.order(), nominal.knot_times(),
                            std::move(values));
  }
  return candidates;
}

double Planner::RolloutObjective(const ControlSpline& candidate,
                                 const SystemState& x0,
                                 const CostContext& ctx) const {
  const double dt = config_.tick_dt();
  const double t0 = x0.sim_time;
  SystemState x = x0;
  Control u(model_.control_dim());
  double total = 0.0;
  try {
    for (int t = 0; t <= config_.horizon_steps; ++t) {
      candidate.EvaluateInto(t0 + t * dt, u);
      u = u.cwiseMax(config_.control_bounds.lo)
              .cwiseMin(config_.control_bounds.hi);
      total += StepCost(spec_, ctx, x, u);
      if (t < config_.horizon_steps) {
        AdvanceTick(model_, x, u, dt, config_.substeps);
      }
    }
  } catch (const NumericalDomainError&) {
    return std::numeric_limits<double>::infinity();
  }
  return std::isfinite(total) ? total
                              : std::numeric_limits<double>::infinity();
}

std::pair<PlanResult, ControlSpline> Planner::PlanTick(
    const SystemState& x0, const ControlSpline& nominal, uint64_t tick_index,
    const Control& previous_control) const {
  const auto start = std::chrono::steady_clock::now();
  if (nominal.dim() != model_.control_dim()) {
    throw ConfigError("plan_tick: nominal dimension does not match model");
  }
  if (previous_control.size() != model_.control_dim()) {
    throw ConfigError("plan_tick: previous control has wrong dimension");
  }
  if (!x0.IsFinite()) throw NumericalDomainError("plan_tick: x0 not finite");

  const std::vector<ControlSpline> candidates =
      SampleCandidates(nominal, tick_index);
  const CostContext ctx = MakeContext(spec_, x0);
  PlanResult result;
  result.candidate_objectives.assign(candidates.size(), 0.0);
  pool_->ParallelFor(candidates.size(), [&](std::size_t k) {
    result.candidate_objectives[k] = RolloutObjective(candidates[k], x0, ctx);
  });

  int best = 0;
  for (int k = 1; k < static_cast<int>(candidates.size()); ++k) {
    if (result.candidate_objectives[k] < result.candidate_objectives[best]) {
      best = k;
    }
  }
  result.best_index = best;
  result.best_objective = result.candidate_objectives[best];

  ControlSpline next_nominal = nominal;
  if (!std::isfinite(result.best_objective)) {
    result.degenerate = true;
    result.best_control = previous_control;
  } else {
    next_nominal = candidates[best];
    result.nominal_updated = best != 0;
    result.best_control =
        config_.control_bounds.Clamp(next_nominal.Evaluate(x0.sim_time));
  }

  result.wall_time_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  if (config_.budget_ms > 0.0 && result.wall_time_ms > config_.budget_ms) {
    result.late = true;
    result.best_control = previous_control;
  }
  return {std::move(result), std::move(next_nominal)};
}

}  // namespace dexmpc
