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

#ifndef DEXMPC_COST_H_
#define DEXMPC_COST_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "dexmpc/dynamics.h"

namespace dexmpc {

enum class TermKind {
  kInHand,
  kBallOrientation,
  kBallLinearVelocity,
  kBallHeight,
  kFlatHand,
  kHoldBall,
  kFaiveActuator,
  kPandaActuator,
};
inline constexpr int kNumTermKinds = 8;

enum class Norm { kSquaredL2, kAbs };

std::string_view TermName(TermKind kind);
// "InHand" -> kInHand; throws ConfigError on unknown names
TermKind TermFromName(std::string_view name);
// key used in critic weight blocks, e.g. "w_InHand"
std::string_view TermWeightKey(TermKind kind);
std::optional<TermKind> TermFromWeightKey(std::string_view key);
Norm DefaultNorm(TermKind kind);

// One (weight, norm, residual) triple. A scalar weight multiplies the norm
// of the whole residual; a vector weight multiplies the per-component norms,
// so negative components reward large residuals.
struct CostTerm {
  TermKind kind = TermKind::kInHand;
  Eigen::VectorXd weight;  // size 1 for scalar weights
  bool vector_weight = false;
  Norm norm = Norm::kSquaredL2;
};

// How the orientation target is derived. kFixed uses references.q_target
// rotated about `axis` by lead + rate * sim_time, so a nonzero rate gives a
// target that turns on the episode clock. kRelative anchors on the ball orientation at the start of each planning
// tick and rotates it about `axis` by lead + rate * (t - t0); rate = 0 with
// a 60 degree lead is the moving-carrot target used without orientation
// measurements.
struct OrientationTarget {
  enum class Mode { kFixed, kRelative };
  Mode mode = Mode::kFixed;
  Vec3 axis = -Vec3::UnitY();
  double lead = 0.0;  // radians
  double rate = 0.0;  // rad/s
};

struct CostReferences {
  std::optional<Vec3> p_optimal;
  std::optional<Quat> q_target;
  std::optional<double> h_desired;
  std::optional<Eigen::VectorXd> q_flat;
  std::optional<Eigen::VectorXd> q_hold;
};

struct CostSpec {
  std::vector<CostTerm> terms;
  CostReferences references;
  OrientationTarget orientation;

  bool has_term(TermKind kind) const;
  CostTerm* find(TermKind kind);
  const CostTerm* find(TermKind kind) const;
};

CostSpec CostSpecFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const CostSpec& spec);

// Checks a spec against a model and fills default references (p_optimal at
// the palm center, q_flat zeros, q_hold the model's hold posture, q_target
// identity). Throws ConfigError on unknown terms, missing references,
// dimension mismatches or terms that need absent state fields.
CostSpec ValidateSpec(const CostSpec& spec, const DynamicsModel& model);

// Per-tick evaluation context: the resolved orientation anchor.
struct CostContext {
  Quat anchor = Quat::Identity();
  double t0 = 0.0;
};
CostContext MakeContext(const CostSpec& spec, const SystemState& x0);
Quat TargetOrientation(const CostSpec& spec, const CostContext& ctx,
                       double sim_time);

// Pure evaluation of a validated spec.
double StepCost(const CostSpec& spec, const CostContext& ctx,
                const SystemState& state, const Control& control);
// one entry per term, in spec order
std::vector<double> TermCosts(const CostSpec& spec, const CostContext& ctx,
                              const SystemState& state,
                              const Control& control);
// sum of step costs over T+1 (state, control) pairs; +inf if any step cost
// is not finite
double Objective(const CostSpec& spec, const CostContext& ctx,
                 const std::vector<std::pair<SystemState, Control>>& traj);

// quat(axis, angle) * q_fixed, normalized
Quat OrientationTargetAhead(const Quat& q_fixed, const Vec3& axis,
                            double angle);

// spec with every weight multiplied by lambda
CostSpec ScaleWeights(const CostSpec& spec, double lambda);
// terms of a followed by terms of b, references of a
CostSpec ConcatTerms(const CostSpec& a, const CostSpec& b);

}  // namespace dexmpc

#endif  // DEXMPC_COST_H_
