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

#include "dexmpc/cost.h"

#include <cmath>
#include <limits>
#include <string>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace {

struct TermInfo {
  TermKind kind;
  const char* name;
  const char* weight_key;
  Norm norm;
};

constexpr std::array<TermInfo, kNumTermKinds> kTerms = {{
    {TermKind::kInHand, "InHand", "w_InHand", Norm::kSquaredL2},
    {TermKind::kBallOrientation, "BallOrientation", "w_Orientation",
     Norm::kSquaredL2},
    {TermKind::kBallLinearVelocity, "BallLinearVelocity", "w_LinVel",
     Norm::kSquaredL2},
    {TermKind::kBallHeight, "BallHeight", "w_Height", Norm::kAbs},
    {TermKind::kFlatHand, "FlatHand", "w_FlatHand", Norm::kSquaredL2},
    {TermKind::kHoldBall, "HoldBall", "w_HoldBall", Norm::kSquaredL2},
    {TermKind::kFaiveActuator, "FaiveActuator", "w_FaiveActuator",
     Norm::kSquaredL2},
    {TermKind::kPandaActuator, "PandaActuator", "w_PandaActuator",
     Norm::kSquaredL2},
}};

const TermInfo& Info(TermKind kind) {
  return kTerms[static_cast<int>(kind)];
}

// weighted norm of a residual expression; no allocation
template <typename Residual>
double Weighted(const CostTerm& term, const Residual& r) {
  if (term.vector_weight) {
    if (term.norm == Norm::kSquaredL2) {
      return term.weight.dot(r.cwiseAbs2().matrix());
    }
    return term.weight.dot(r.cwiseAbs().matrix());
  }
  const double w = term.weight[0];
  return term.norm == Norm::kSquaredL2 ? w * r.squaredNorm() : w * r.norm();
}

Eigen::Vector4d Wxyz(const Quat& q) {
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

double TermCost(const CostTerm& term, const CostSpec& spec,
                const CostContext& ctx, const SystemState& x) {
  const CostReferences& ref = spec.references;
  switch (term.kind) {
    case TermKind::kInHand:
      return Weighted(term, x.ball_position - *ref.p_optimal);
    case TermKind::kBallOrientation: {
      const Eigen::Vector4d target =
          Wxyz(TargetOrientation(spec, ctx, x.sim_time));
      Eigen::Vector4d q = Wxyz(x.ball_orientation);
      if (q.dot(target) < 0.0) q = -q;
      return Weighted(term, q - target);
    }
    case TermKind::kBallLinearVelocity:
      return Weighted(term, x.ball_velocity);
    case TermKind::kBallHeight: {
      Eigen::Matrix<double, 1, 1> r;
      r[0] = x.ball_position.z() - *ref.h_desired;
      return Weighted(term, r);
    }
    case TermKind::kFlatHand:
      return Weighted(term, x.hand_joints - *ref.q_flat);
    case TermKind::kHoldBall:
      return Weighted(term, x.hand_joints - *ref.q_hold);
    case TermKind::kFaiveActuator:
      return Weighted(term, x.hand_joint_velocities);
    case TermKind::kPandaActuator:
      return Weighted(term, x.arm_joint_velocities);
  }
  return 0.0;
}

Eigen::VectorXd JsonVector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must hold numbers");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ConfigError(what + " must be finite");
  return v;
}

Vec3 JsonVec3(const nlohmann::json& j, const std::string& what) {
  const Eigen::VectorXd v = JsonVector(j, what);
  if (v.size() != 3) throw ConfigError(what + " needs 3 components");
  return v;
}

Quat JsonQuat(const nlohmann::json& j, const std::string& what) {
  const Eigen::VectorXd v = JsonVector(j, what);
  if (v.size() != 4) throw ConfigError(what + " needs (w, x, y, z)");
  return Quat(v[0], v[1], v[2], v[3]);
}

nlohmann::json JsonArray(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

int ResidualDim(TermKind kind, const DynamicsModel& model) {
  switch (kind) {
    case TermKind::kInHand:
    case TermKind::kBallLinearVelocity:
      return 3;
    case TermKind::kBallOrientation:
      return 4;
    case TermKind::kBallHeight:
      return 1;
    case TermKind::kFlatHand:
    case TermKind::kHoldBall:
    case TermKind::kFaiveActuator:
      return model.hand_dim();
    case TermKind::kPandaActuator:
      return model.arm_dim();
  }
  return 0;
}

}  // namespace

std::string_view TermName(TermKind kind) { return Info(kind).name; }

TermKind TermFromName(std::string_view name) {
  for (const auto& t : kTerms) {
    if (name == t.name) return t.kind;
  }
  throw ConfigError("unknown cost term '" + std::string(name) + "'");
}

std::string_view TermWeightKey(TermKind kind) { return Info(kind).weight_key; }

std::optional<TermKind> TermFromWeightKey(std::string_view key) {
  for (const auto& t : kTerms) {
    if (key == t.weight_key) return t.kind;
  }
  return std::nullopt;
}

Norm DefaultNorm(TermKind kind) { return Info(kind).norm; }

bool CostSpec::has_term(TermKind kind) const { return find(kind) != nullptr; }

CostTerm* CostSpec::find(TermKind kind) {
  for (auto& t : terms) {
    if (t.kind == kind) return &t;
  }
  return nullptr;
}

const CostTerm* CostSpec::find(TermKind kind) const {
  for (const auto& t : terms) {
    if (t.kind == kind) return &t;
  }
  return nullptr;
}

CostSpec CostSpecFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("cost spec must be an object");
  CostSpec spec;
  for (const auto& [key, _] : j.items()) {
    if (key != "terms" && key != "references" &&
        key != "orientation_target") {
      throw ConfigError("cost spec: unknown field '" + key + "'");
    }
  }
  if (!j.contains("terms") || !j["terms"].is_array()) {
    throw ConfigError("cost spec: 'terms' array is required");
  }
  for (const auto& jt : j["terms"]) {
    if (!jt.is_object() || !jt.contains("name") || !jt["name"].is_string()) {
      throw ConfigError("cost term needs a string 'name'");
    }
    CostTerm term;
    term.kind = TermFromName(jt["name"].get<std::string>());
    const std::string label(TermName(term.kind));
    term.norm = DefaultNorm(term.kind);
    if (!jt.contains("weight")) {
      throw ConfigError("cost term " + label + ": missing weight");
    }
    const auto& w = jt["weight"];
    if (w.is_number()) {
      term.weight = Eigen::VectorXd::Constant(1, w.get<double>());
      if (!term.weight.allFinite()) {
        throw ConfigError("cost term " + label + ": weight must be finite");
      }
    } else {
      term.weight = JsonVector(w, "weight of " + label);
      term.vector_weight = true;
      if (term.weight.size() == 0) {
        throw ConfigError("cost term " + label + ": empty weight vector");
      }
    }
    if (jt.contains("norm")) {
      const std::string norm = jt["norm"].is_string()
                                   ? jt["norm"].get<std::string>()
                                   : std::string();
      if (norm == "squared_l2") {
        term.norm = Norm::kSquaredL2;
      } else if (norm == "abs") {
        term.norm = Norm::kAbs;
      } else {
        throw ConfigError("cost term " + label + ": unknown norm");
      }
    }
    spec.terms.push_back(std::move(term));
  }

  if (j.contains("references")) {
    const auto& r = j["references"];
    if (!r.is_object()) throw ConfigError("references must be an object");
    for (const auto& [key, value] : r.items()) {
      if (key == "p_optimal") {
        spec.references.p_optimal = JsonVec3(value, key);
      } else if (key == "q_target") {
        spec.references.q_target = JsonQuat(value, key);
      } else if (key == "h_desired") {
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
          throw ConfigError("h_desired must be a finite number");
        }
        spec.references.h_desired = value.get<double>();
      } else if (key == "q_flat") {
        spec.references.q_flat = JsonVector(value, key);
      } else if (key == "q_hold") {
        spec.references.q_hold = JsonVector(value, key);
      } else {
        throw ConfigError("unknown reference '" + key + "'");
      }
    }
  }

  if (j.contains("orientation_target")) {
    const auto& o = j["orientation_target"];
    if (!o.is_object()) throw ConfigError("orientation_target: not an object");
    for (const auto& [key, value] : o.items()) {
      if (key == "mode") {
        const std::string mode =
            value.is_string() ? value.get<std::string>() : std::string();
        if (mode == "fixed") {
          spec.orientation.mode = OrientationTarget::Mode::kFixed;
        } else if (mode == "relative") {
          spec.orientation.mode = OrientationTarget::Mode::kRelative;
        } else {
          throw ConfigError("orientation_target.mode must be fixed|relative");
        }
      } else if (key == "axis") {
        spec.orientation.axis = JsonVec3(value, "orientation_target.axis");
      } else if (key == "lead" || key == "rate") {
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
          throw ConfigError("orientation_target." + key + " must be finite");
        }
        (key == "lead" ? spec.orientation.lead : spec.orientation.rate) =
            value.get<double>();
      } else {
        throw ConfigError("orientation_target: unknown field '" + key + "'");
      }
    }
  }
  return spec;
}

nlohmann::json ToJson(const CostSpec& spec) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : spec.terms) {
    nlohmann::json jt;
    jt["name"] = std::string(TermName(t.kind));
    if (t.vector_weight) {
      jt["weight"] = JsonArray(t.weight);
    } else {
      jt["weight"] = t.weight[0];
    }
    jt["norm"] = t.norm == Norm::kSquaredL2 ? "squared_l2" : "abs";
    terms.push_back(jt);
  }
  nlohmann::json refs = nlohmann::json::object();
  const auto& r = spec.references;
  if (r.p_optimal) refs["p_optimal"] = JsonArray(*r.p_optimal);
  if (r.q_target) {
    refs["q_target"] = {r.q_target->w(), r.q_target->x(), r.q_target->y(),
                        r.q_target->z()};
  }
  if (r.h_desired) refs["h_desired"] = *r.h_desired;
  if (r.q_flat) refs["q_flat"] = JsonArray(*r.q_flat);
  if (r.q_hold) refs["q_hold"] = JsonArray(*r.q_hold);
  const auto& o = spec.orientation;
  return {{"terms", terms},
          {"references", refs},
          {"orientation_target",
           {{"mode", o.mode == OrientationTarget::Mode::kFixed ? "fixed"
                                                               : "relative"},
            {"axis", JsonArray(o.axis)},
            {"lead", o.lead},
            {"rate", o.rate}}}};
}

CostSpec ValidateSpec(const CostSpec& in, const DynamicsModel& model) {
  CostSpec spec = in;
  if (spec.terms.empty()) throw ConfigError("cost spec has no terms");
  for (const auto& t : spec.terms) {
    const std::string label(TermName(t.kind));
    const int dim = ResidualDim(t.kind, model);
    if (dim == 0) {
      throw ConfigError("cost term " + label + " needs state fields that " +
                        model.name() + " does not provide");
    }
    if (t.weight.size() == 0 || !t.weight.allFinite()) {
      throw ConfigError("cost term " + label + ": invalid weight");
    }
    if (t.vector_weight && t.weight.size() != dim) {
      throw ConfigError("cost term " + label + ": weight has " +
                        std::to_string(t.weight.size()) +
                        " components, residual has " + std::to_string(dim));
    }
    if (!t.vector_weight && t.weight.size() != 1) {
      throw ConfigError("cost term " + label + ": scalar weight expected");
    }
  }

  auto& r = spec.references;
  if (!r.p_optimal) r.p_optimal = model.PalmCenter();
  if (!r.q_target) r.q_target = Quat::Identity();
  if (r.q_target->norm() < 1e-12) throw ConfigError("q_target has zero norm");
  r.q_target = r.q_target->normalized();
  if (!r.q_flat) r.q_flat = Eigen::VectorXd::Zero(model.hand_dim());
  if (!r.q_hold) r.q_hold = model.HoldPosture();
  if (r.q_flat->size() != model.hand_dim() ||
      r.q_hold->size() != model.hand_dim()) {
    throw ConfigError("q_flat/q_hold must match the hand joint count " +
                      std::to_string(model.hand_dim()));
  }
  if (spec.has_term(TermKind::kBallHeight) && !r.h_desired) {
    throw ConfigError("BallHeight term requires references.h_desired");
  }
  if (!(spec.orientation.axis.norm() > 1e-12)) {
    throw ConfigError("orientation_target.axis must be non-zero");
  }
  spec.orientation.axis.normalize();
  return spec;
}

CostContext MakeContext(const CostSpec& spec, const SystemState& x0) {
  CostContext ctx;
  ctx.t0 = x0.sim_time;
  ctx.anchor = spec.orientation.mode == OrientationTarget::Mode::kRelative
                   ? x0.ball_orientation
                   : spec.references.q_target.value_or(Quat::Identity());
  return ctx;
}

Quat TargetOrientation(const CostSpec& spec, const CostContext& ctx,
                       double sim_time) {
  const OrientationTarget& o = spec.orientation;
  double angle = o.lead + o.rate * (sim_time - ctx.t0);
  if (o.mode == OrientationTarget::Mode::kFixed) {
    if (o.lead == 0.0 && o.rate == 0.0) return ctx.anchor;
    angle = o.lead + o.rate * sim_time;
  }
  return (Quat(Eigen::AngleAxisd(angle, o.axis)) * ctx.anchor).normalized();
}

double StepCost(const CostSpec& spec, const CostContext& ctx,
                const SystemState& state, const Control& /*control*/) {
  double total = 0.0;
  for (const auto& term : spec.terms) {
    total += TermCost(term, spec, ctx, state);
  }
  return total;
}

std::vector<double> TermCosts(const CostSpec& spec, const CostContext& ctx,
                              const SystemState& state,
                              const Control& /*control*/) {
  std::vector<double> out;
  out.reserve(spec.terms.size());
  for (const auto& term : spec.terms) {
    out.push_back(TermCost(term, spec, ctx, state));
  }
  return out;
}

double Objective(const CostSpec& spec, const CostContext& ctx,
                 const std::vector<std::pair<SystemState, Control>>& traj) {
  double total = 0.0;
  for (const auto& [x, u] : traj) {
    const double c = StepCost(spec, ctx, x, u);
    if (!std::isfinite(c)) return std::numeric_limits<double>::infinity();
    total += c;
  }
  return total;
}

Quat OrientationTargetAhead(const Quat& q_fixed, const Vec3& axis,
                            double angle) {
  const double n = axis.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) {
    throw ContractViolation("orientation target axis must be non-zero");
  }
  if (!std::isfinite(angle)) {
    throw ContractViolation("orientation target angle must be finite");
  }
  return (Quat(Eigen::AngleAxisd(angle, axis / n)) * q_fixed).normalized();
}

CostSpec ScaleWeights(const CostSpec& spec, double lambda) {
  CostSpec out = spec;
  for (auto& t : out.terms) t.weight *= lambda;
  return out;
}

CostSpec ConcatTerms(const CostSpec& a, const CostSpec& b) {
  CostSpec out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

}  // namespace dexmpc
