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
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dexmpc/errors.h"
#include "dexmpc/task.h"

namespace dexmpc {
namespace {

CostSpec Parse(const char* text) {
  return CostSpecFromJson(nlohmann::json::parse(text));
}

SystemState RandomState(const DynamicsModel& model, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 0.05);
  SystemState s = model.Reset();
  for (int i = 0; i < 3; ++i) {
    s.ball_position[i] += n(gen);
    s.ball_velocity[i] = 10 * n(gen);
  }
  s.ball_orientation = Quat(n(gen) + 1, n(gen), n(gen), n(gen)).normalized();
  for (int i = 0; i < s.hand_joints.size(); ++i) {
    s.hand_joints[i] += n(gen);
    s.hand_joint_velocities[i] = n(gen);
  }
  s.sim_time = std::abs(n(gen));
  return s;
}

TEST(CostTest, ZeroWeightsGiveZero) {
  auto model = MakeModel("ball_flipper_2d");
  const CostSpec spec = ValidateSpec(
      ScaleWeights(LoadTask("tasks/flipping.json").cost, 0.0), *model);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 20; ++i) {
    const SystemState s = RandomState(*model, gen);
    EXPECT_EQ(StepCost(spec, MakeContext(spec, s), s, model->HomeControl()),
              0.0);
  }
}

TEST(CostTest, BallHeightExample) {
  auto model = MakeModel("ball_flipper_2d");
  const CostSpec spec = ValidateSpec(
      Parse(R"({"terms": [{"name": "BallHeight", "weight": 140}],
                "references": {"h_desired": 0.15}})"),
      *model);
  SystemState s = model->Reset();
  s.ball_position.z() = 0.05;
  EXPECT_NEAR(StepCost(spec, MakeContext(spec, s), s, model->HomeControl()),
              14.0, 1e-12);
}

TEST(CostTest, VectorWeightAppliesPerComponent) {
  auto model = MakeModel("planar_ball_balancer");
  const CostSpec spec = ValidateSpec(
      Parse(R"({"terms": [{"name": "InHand", "weight": [1000, 1000, 1000]}],
                "references": {"p_optimal": [0, 0, 0]}})"),
      *model);
  SystemState s = model->Reset();
  s.ball_position = Vec3(0.01, 0.0, 0.0);
  // sum_j w_j * r_j^2 = 1000 * 1e-4
  EXPECT_NEAR(StepCost(spec, MakeContext(spec, s), s, model->HomeControl()),
              0.1, 1e-15);
}

TEST(CostTest, NegativeVelocityWeightRewardsSpeed) {
  auto model = MakeModel("ball_flipper_2d");
  const CostSpec spec = ValidateSpec(
      Parse(R"({"terms": [{"name": "BallLinearVelocity",
                           "weight": [40, 80, -120]}]})"),
      *model);
  SystemState s = model->Reset();
  s.ball_velocity = Vec3(0.5, 0.0, 2.0);
  const double expected = 40 * 0.25 - 120 * 4.0;
  EXPECT_DOUBLE_EQ(
      StepCost(spec, MakeContext(spec, s), s, model->HomeControl()), expected);
  s.ball_velocity.z() = 3.0;
  EXPECT_LT(StepCost(spec, MakeContext(spec, s), s, model->HomeControl()),
            expected);
}

TEST(CostTest, TermsMatchHandWrittenFormulas) {
  auto model = MakeModel("arm_flipper");
  const CostSpec spec = ValidateSpec(
      Parse(R"({"terms": [{"name": "FlatHand", "weight": 3},
                          {"name": "HoldBall", "weight": 5},
                          {"name": "FaiveActuator", "weight": 0.1},
                          {"name": "PandaActuator", "weight": 20}]})"),
      *model);
  std::mt19937_64 gen(7);
  SystemState s = RandomState(*model, gen);
  s.arm_joint_velocities = Eigen::Vector2d(0.3, -0.4);
  const std::vector<double> terms =
      TermCosts(spec, MakeContext(spec, s), s, model->HomeControl());
  ASSERT_EQ(terms.size(), 4u);
  EXPECT_NEAR(terms[0], 3 * s.hand_joints.squaredNorm(), 1e-14);
  EXPECT_NEAR(terms[1],
              5 * (s.hand_joints - model->HoldPosture()).squaredNorm(), 1e-14);
  EXPECT_NEAR(terms[2], 0.1 * s.hand_joint_velocities.squaredNorm(), 1e-14);
  EXPECT_NEAR(terms[3], 20 * 0.25, 1e-12);
}

TEST(CostTest, ObjectiveSumsStepCosts) {
  auto model = MakeModel("planar_ball_balancer");
  const CostSpec spec =
      ValidateSpec(LoadTask("tasks/rolling.json").cost, *model);
  std::mt19937_64 gen(3);
  const SystemState s = RandomState(*model, gen);
  const CostContext ctx = MakeContext(spec, s);
  const Control u = model->HomeControl();
  const double c = StepCost(spec, ctx, s, u);
  EXPECT_EQ(Objective(spec, ctx, {{s, u}}), c);
  std::vector<std::pair<SystemState, Control>> traj(26, {s, u});
  EXPECT_NEAR(Objective(spec, ctx, traj), 26 * c, 1e-10 * std::abs(26 * c));
}

// Independent re-summation over a recorded rollout, with every term written
// out by hand.
TEST(CostTest, RecordedRolloutMatchesOracle) {
  auto model = MakeModel("planar_ball_balancer");
  const CostSpec spec =
      ValidateSpec(LoadTask("tasks/rolling.json").cost, *model);
  SystemState s = model->Reset();
  const CostContext ctx = MakeContext(spec, s);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::pair<SystemState, Control>> traj;
  for (int t = 0; t <= 25; ++t) {
    Control u = model->HomeControl();
    for (int i = 0; i < u.size(); ++i) u[i] += 0.2 * uni(gen);
    u = model->control_bounds().Clamp(u);
    traj.emplace_back(s, u);
    AdvanceTick(*model, s, u);
  }
  const Vec3 p_opt = model->PalmCenter();
  long double oracle = 0.0;
  for (const auto& [x, u] : traj) {
    const Vec3 dp = x.ball_position - p_opt;
    for (int j = 0; j < 3; ++j) oracle += 1000.0L * dp[j] * dp[j];
    const Quat target(Eigen::AngleAxisd(x.sim_time, -Vec3::UnitY()));
    Eigen::Vector4d q = x.ball_orientation.coeffs();
    if (q.dot(target.coeffs()) < 0) q = -q;
    oracle += 20.0L * (q - target.coeffs()).squaredNorm();
    for (int j = 0; j < 3; ++j) {
      oracle += 10.0L * x.ball_velocity[j] * x.ball_velocity[j];
    }
    oracle += 10.0L * (x.hand_joints - model->HoldPosture()).squaredNorm();
    oracle += 0.1L * x.hand_joint_velocities.squaredNorm();
  }
  const double j = Objective(spec, ctx, traj);
  EXPECT_NEAR(j, static_cast<double>(oracle), 1e-10 * std::abs(j));
}

TEST(CostTest, NonFiniteStepMakesObjectiveInfinite) {
  auto model = MakeModel("point_mass_2d");
  const CostSpec spec =
      ValidateSpec(Parse(R"({"terms": [{"name": "InHand", "weight": 1}]})"),
                   *model);
  SystemState s = model->Reset();
  const Control u = model->HomeControl();
  SystemState bad = s;
  bad.ball_position.x() = std::nan("");
  EXPECT_TRUE(std::isinf(
      Objective(spec, MakeContext(spec, s), {{s, u}, {bad, u}})));
}

TEST(CostTest, OrientationTargetAheadExamples) {
  const Quat id = Quat::Identity();
  EXPECT_TRUE(OrientationTargetAhead(id, -Vec3::UnitY(), 0.0)
                  .coeffs()
                  .isApprox(id.coeffs(), 1e-15));
  const Quat half = OrientationTargetAhead(id, -Vec3::UnitY(), std::numbers::pi);
  EXPECT_NEAR(half.w(), 0.0, 1e-15);
  EXPECT_NEAR(half.x(), 0.0, 1e-15);
  EXPECT_NEAR(half.y(), -1.0, 1e-15);
  EXPECT_NEAR(half.z(), 0.0, 1e-15);
  const Quat sixty =
      OrientationTargetAhead(id, -Vec3::UnitY(), std::numbers::pi / 3);
  EXPECT_NEAR(sixty.w(), std::cos(std::numbers::pi / 6), 1e-15);
  EXPECT_NEAR(sixty.y(), -0.5, 1e-15);
  EXPECT_THROW(OrientationTargetAhead(id, Vec3::Zero(), 1.0), ContractViolation);
}

TEST(CostTest, FixedTargetTurnsWithTheClock) {
  auto model = MakeModel("planar_ball_balancer");
  const CostSpec spec =
      ValidateSpec(LoadTask("tasks/rolling.json").cost, *model);
  SystemState s = model->Reset();
  s.sim_time = 2.0;
  const CostContext ctx = MakeContext(spec, s);
  const Quat q = TargetOrientation(spec, ctx, 2.5);
  const Quat expected(Eigen::AngleAxisd(2.5, -Vec3::UnitY()));
  EXPECT_TRUE(q.coeffs().isApprox(expected.coeffs(), 1e-14));
}

TEST(CostTest, RelativeTargetAnchorsOnTickState) {
  auto model = MakeModel("planar_ball_balancer");
  CostSpec raw = Parse(R"({"terms": [{"name": "BallOrientation", "weight": 1}],
      "orientation_target": {"mode": "relative", "lead": 1.0471975511965976}})");
  const CostSpec spec = ValidateSpec(raw, *model);
  SystemState s = model->Reset();
  s.ball_orientation = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ()));
  const CostContext ctx = MakeContext(spec, s);
  const Quat q = TargetOrientation(spec, ctx, 5.0);
  const Quat expected =
      OrientationTargetAhead(s.ball_orientation, -Vec3::UnitY(),
                             std::numbers::pi / 3);
  EXPECT_TRUE(q.coeffs().isApprox(expected.coeffs(), 1e-14));
}

TEST(CostTest, QuaternionSignInvariance) {
  auto model = MakeModel("planar_ball_balancer");
  const CostSpec spec =
      ValidateSpec(LoadTask("tasks/rolling.json").cost, *model);
  std::mt19937_64 gen(11);
  for (int i = 0; i < 200; ++i) {
    SystemState s = RandomState(*model, gen);
    const CostContext ctx = MakeContext(spec, s);
    const double a = StepCost(spec, ctx, s, model->HomeControl());
    s.ball_orientation.coeffs() = -s.ball_orientation.coeffs();
    const double b = StepCost(spec, ctx, s, model->HomeControl());
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(CostTest, ScalingAndLinearity) {
  auto model = MakeModel("ball_flipper_2d");
  const CostSpec a =
      ValidateSpec(LoadTask("tasks/flipping.json").cost, *model);
  const CostSpec b =
      ValidateSpec(LoadTask("tasks/flipping_evolutionary.json").cost, *model);
  const CostSpec ab = ValidateSpec(ConcatTerms(a, b), *model);
  const CostSpec scaled = ScaleWeights(a, 3.5);
  std::mt19937_64 gen(13);
  for (int i = 0; i < 200; ++i) {
    const SystemState s = RandomState(*model, gen);
    const Control u = model->HomeControl();
    const double ca = StepCost(a, MakeContext(a, s), s, u);
    const double cb = StepCost(b, MakeContext(b, s), s, u);
    EXPECT_NEAR(StepCost(ab, MakeContext(ab, s), s, u), ca + cb,
                1e-10 * (std::abs(ca) + std::abs(cb)));
    EXPECT_NEAR(StepCost(scaled, MakeContext(scaled, s), s, u), 3.5 * ca,
                1e-12 * std::abs(ca));
  }
}

TEST(CostTest, ValidationRejectsBadSpecs) {
  auto balancer = MakeModel("planar_ball_balancer");
  EXPECT_THROW(Parse(R"({"terms": [{"name": "Bogus", "weight": 1}]})"),
               ConfigError);
  EXPECT_THROW(
      ValidateSpec(Parse(R"({"terms": [{"name": "PandaActuator", "weight": 1}]})"),
                   *balancer),
      ConfigError);
  EXPECT_THROW(
      ValidateSpec(Parse(R"({"terms": [{"name": "InHand", "weight": [1, 2]}]})"),
                   *balancer),
      ConfigError);
  EXPECT_THROW(
      ValidateSpec(Parse(R"({"terms": [{"name": "BallHeight", "weight": 1}]})"),
                   *balancer),
      ConfigError);
  EXPECT_THROW(ValidateSpec(Parse(R"({"terms": []})"), *balancer), ConfigError);
}

TEST(CostTest, JsonRoundTrip) {
  const CostSpec spec = LoadTask("tasks/arm_flipping.json").cost;
  const CostSpec back = CostSpecFromJson(ToJson(spec));
  EXPECT_EQ(ToJson(back), ToJson(spec));
}

}  // namespace
}  // namespace dexmpc
