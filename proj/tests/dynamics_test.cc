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

#include "dexmpc/dynamics.h"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dexmpc/errors.h"

namespace dexmpc {
namespace {

constexpr double kH = kPhysicsStep;

TEST(PointMassTest, SemiImplicitEulerStep) {
  PointMass2D model;
  SystemState s = model.Reset();
  const SystemState next = model.Step(s, Eigen::Vector2d(1.0, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(next.ball_velocity.x(), 0.1);
  EXPECT_DOUBLE_EQ(next.ball_position.x(), 0.01);
  EXPECT_EQ(next.ball_position.y(), 0.0);
  EXPECT_DOUBLE_EQ(next.sim_time, 0.1);
}

TEST(PointMassTest, RejectsBadInput) {
  PointMass2D model;
  SystemState s = model.Reset();
  EXPECT_THROW(model.Step(s, Eigen::Vector3d::Zero(), kH), ContractViolation);
  EXPECT_THROW(model.Step(s, Eigen::Vector2d::Zero(), 0.0), ContractViolation);
  EXPECT_THROW(
      model.Step(s, Eigen::Vector2d(std::nan(""), 0.0), kH),
      NumericalDomainError);
  s.ball_velocity.x() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(model.Step(s, Eigen::Vector2d::Zero(), kH),
               NumericalDomainError);
}

TEST(FlipperTest, FreeFallFromApex) {
  BallFlipper2D model;
  StateOverrides o;
  o.ball_position = Vec3(0.0, 0.0, 0.1);
  SystemState s = model.Reset(o);
  EXPECT_FALSE(s.ball_in_contact);
  const SystemState next = model.Step(s, model.HomeControl(), kH);
  EXPECT_DOUBLE_EQ(next.ball_velocity.z(), -kGravity * kH);
}

TEST(FlipperTest, FreeFlightConservesEnergy) {
  BallFlipper2D model;
  StateOverrides o;
  o.ball_position = Vec3(0.01, 0.0, 0.05);
  o.ball_velocity = Vec3(0.0, 0.0, 1.5);
  SystemState s = model.Reset(o);
  auto energy = [](const SystemState& x) {
    return 0.5 * x.ball_velocity.z() * x.ball_velocity.z() +
           kGravity * x.ball_position.z();
  };
  int airborne_steps = 0;
  while (true) {
    const SystemState next = model.Step(s, model.HomeControl(), kH);
    if (next.ball_in_contact) break;
    EXPECT_NEAR(energy(next), energy(s), 1e-6 * std::abs(energy(s)));
    s = next;
    ++airborne_steps;
  }
  EXPECT_GT(airborne_steps, 40);
}

TEST(FlipperTest, RestingBallStaysPut) {
  BallFlipper2D model;
  SystemState s = model.Reset();
  EXPECT_TRUE(s.ball_in_contact);
  for (int i = 0; i < 300; ++i) model.StepInPlace(s, model.HomeControl(), kH);
  EXPECT_TRUE(s.ball_in_contact);
  EXPECT_FALSE(s.ball_dropped);
  EXPECT_NEAR(s.ball_position.z(), 0.0, 1e-12);
}

TEST(FlipperTest, FullStrokeThrowClearsTargetHeight) {
  BallFlipper2D model;
  const ControlBounds b = model.control_bounds();
  StateOverrides o;
  o.hand_joints = Eigen::Vector2d(b.lo[0], 0.0);
  o.ball_position = Vec3(0.0, 0.0, model.params().stroke * b.lo[0]);
  SystemState s = model.Reset(o);
  ASSERT_TRUE(s.ball_in_contact);
  Control up(2);
  up << b.hi[0], 0.0;
  double apex = s.ball_position.z();
  for (int i = 0; i < 150; ++i) {
    model.StepInPlace(s, up, kH);
    apex = std::max(apex, s.ball_position.z());
  }
  EXPECT_GT(apex, 0.15);
  EXPECT_FALSE(s.ball_dropped);
}

TEST(FlipperTest, LateralExitDropsAndStaysDropped) {
  BallFlipper2D::Params p;
  p.cup_stiffness = 0.0;
  p.rolling_damping = 1.0;
  BallFlipper2D model(p);
  StateOverrides o;
  o.ball_velocity = Vec3(0.5, 0.0, 0.0);
  SystemState s = model.Reset(o);
  int steps = 0;
  while (!s.ball_dropped && steps < 1000) {
    model.StepInPlace(s, model.HomeControl(), kH);
    ++steps;
  }
  ASSERT_TRUE(s.ball_dropped);
  for (int i = 0; i < 100; ++i) {
    model.StepInPlace(s, model.HomeControl(), kH);
    EXPECT_TRUE(s.ball_dropped);
    EXPECT_FALSE(s.ball_in_contact);
  }
}

TEST(ArmFlipperTest, HasArmJoints) {
  ArmFlipper model;
  EXPECT_EQ(model.control_dim(), 4);
  const SystemState s = model.Reset();
  EXPECT_TRUE(s.has_arm());
  EXPECT_EQ(s.arm_joints.size(), 2);
  Control u = model.HomeControl();
  u[2] = 0.5;
  SystemState t = s;
  for (int i = 0; i < 600; ++i) model.StepInPlace(t, u, kH);
  EXPECT_NEAR(t.arm_joints[0], 0.5, 1e-4);
  EXPECT_NEAR(model.BaseX(t), 0.5 * model.params().arm_reach, 1e-5);
}

// Independent no-slip oracle: the ball's contact point moves with the palm
// surface and the spin has no component along the palm normal.
Vec3 NoSlipOracle(const Vec3& n, double radius, const Vec3& v_center,
                  const Vec3& v_surface) {
  Eigen::Matrix<double, 4, 3> a;
  Eigen::Vector4d b;
  // contact point velocity: v_center + w x (-radius n) = v_surface
  Eigen::Matrix3d skew;
  skew << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  a.topRows<3>() = radius * skew;  // radius (n x w)
  b.head<3>() = v_surface - v_center;
  a.row(3) = n.transpose();
  b[3] = 0.0;
  return a.colPivHouseholderQr().solve(b);
}

TEST(BalancerTest, CenteredBallSpinsAtNoSlipRate) {
  PlanarBallBalancer model;
  const auto& p = model.params();
  const double omega_s = 1.5;
  StateOverrides o;
  o.hand_joint_velocities = Eigen::Vector3d::Constant(omega_s);
  SystemState s = model.Reset(o);
  ASSERT_TRUE(s.ball_in_contact);
  // servo target that keeps the finger velocities constant
  const Control u = s.hand_joints.array() +
                    2.0 * omega_s / std::sqrt(p.servo_stiffness);
  const SystemState next = model.Step(s, u, kH);

  const Quat dq = next.ball_orientation * s.ball_orientation.conjugate();
  const Eigen::AngleAxisd aa(dq);
  const Vec3 measured = aa.axis() * aa.angle() / kH;

  const double a = p.incline_deg * std::numbers::pi / 180.0;
  const Vec3 n(-std::sin(a), 0.0, std::cos(a));
  const Vec3 along(std::cos(a), 0.0, std::sin(a));
  const Vec3 v_surface = p.finger_lever * 3.0 * omega_s * along;
  const Vec3 expected =
      NoSlipOracle(n, p.ball_radius, next.ball_velocity, v_surface);

  EXPECT_NEAR((measured - expected).norm(), 0.0, 1e-9 * expected.norm());
  // a surface moving along the incline spins the ball about -y
  EXPECT_LT(measured.y(), 0.0);
}

TEST(BalancerTest, OverridesApplyExactly) {
  PlanarBallBalancer model;
  const SystemState home = model.Reset();
  EXPECT_TRUE(home.ball_in_contact);
  EXPECT_EQ(home.ball_position, model.PalmCenter());
  StateOverrides o;
  const Vec3 p_star = model.PalmCenter() + Vec3(0.0, 0.012, 0.0);
  o.ball_position = p_star;
  const SystemState s = model.Reset(o);
  EXPECT_EQ(s.ball_position, p_star);
  EXPECT_EQ(s.hand_joints, home.hand_joints);
  EXPECT_EQ(s.ball_velocity, home.ball_velocity);

  StateOverrides bad;
  bad.hand_joints = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(model.Reset(bad), ContractViolation);
}

TEST(BalancerTest, LevelPalmIsInEquilibrium) {
  auto model = MakeModel("planar_ball_balancer", {{"incline_deg", 0.0}});
  SystemState s = model->Reset();
  const Vec3 start = s.ball_position;
  const Control zero = Control::Zero(model->control_dim());
  for (int i = 0; i < 100; ++i) {
    model->StepInPlace(s, zero, kH);
    EXPECT_NEAR(s.ball_orientation.norm(), 1.0, 1e-9);
  }
  EXPECT_NEAR((s.ball_position - start).norm(), 0.0, 1e-9);
  EXPECT_NEAR(s.sim_time, 100 * kH, 1e-12);
}

TEST(BalancerTest, OpenHandOnInclineDropsBall) {
  PlanarBallBalancer model;
  SystemState s = model.Reset();
  Control open = model.control_bounds().lo;
  int steps = 0;
  while (!s.ball_dropped && steps < 3000) {
    model.StepInPlace(s, open, kH);
    ++steps;
  }
  EXPECT_TRUE(s.ball_dropped);
  for (int i = 0; i < 50; ++i) model.StepInPlace(s, open, kH);
  EXPECT_TRUE(s.ball_dropped);
}

TEST(BalancerTest, HeldBallStaysOnPalm) {
  PlanarBallBalancer model;
  SystemState s = model.Reset();
  for (int i = 0; i < 1500; ++i) model.StepInPlace(s, model.HomeControl(), kH);
  EXPECT_FALSE(s.ball_dropped);
  EXPECT_TRUE(s.ball_in_contact);
}

TEST(BalancerTest, FallingBallLandsOnPalm) {
  PlanarBallBalancer model;
  StateOverrides o;
  o.ball_position = model.PalmCenter() + Vec3(0.0, 0.0, 0.1);
  SystemState s = model.Reset(o);
  EXPECT_FALSE(s.ball_in_contact);
  for (int i = 0; i < 60; ++i) model.StepInPlace(s, model.HomeControl(), kH);
  EXPECT_TRUE(s.ball_in_contact);
  EXPECT_FALSE(s.ball_dropped);
}

TEST(DynamicsTest, StepIsBitwiseDeterministic) {
  for (const char* name :
       {"point_mass_2d", "planar_ball_balancer", "ball_flipper_2d",
        "arm_flipper"}) {
    auto model = MakeModel(name);
    SystemState a = model->Reset(), b = model->Reset();
    const ControlBounds bounds = model->control_bounds();
    for (int i = 0; i < 200; ++i) {
      const double phase = 0.05 * i;
      Control u = bounds.lo + 0.5 * (1.0 + std::sin(phase)) *
                                  (bounds.hi - bounds.lo);
      model->StepInPlace(a, u, kH);
      model->StepInPlace(b, u, kH);
      ASSERT_TRUE(a == b) << name << " step " << i;
    }
  }
}

TEST(DynamicsTest, FactoryValidatesParameters) {
  EXPECT_THROW(MakeModel("no_such_model"), ConfigError);
  EXPECT_THROW(MakeModel("ball_flipper_2d", {{"bogus", 1.0}}), ConfigError);
  EXPECT_THROW(MakeModel("ball_flipper_2d", {{"half_width", "wide"}}),
               ConfigError);
  auto m = MakeModel("ball_flipper_2d", {{"half_width", 0.05}});
  EXPECT_EQ(m->ParamsJson()["half_width"], 0.05);
}

TEST(DynamicsTest, AdvanceTickTakesFiveSubsteps) {
  PointMass2D model;
  SystemState s = model.Reset();
  AdvanceTick(model, s, Eigen::Vector2d(1.0, 0.0));
  EXPECT_NEAR(s.sim_time, 1.0 / 30.0, 1e-15);
}

}  // namespace
}  // namespace dexmpc
