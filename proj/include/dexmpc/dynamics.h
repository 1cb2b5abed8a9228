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

#ifndef DEXMPC_DYNAMICS_H_
#define DEXMPC_DYNAMICS_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "dexmpc/spline.h"

namespace dexmpc {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// control tick of the planner and the physics step inside it
inline constexpr double kControlRate = 30.0;
inline constexpr int kSubstepsPerTick = 5;
inline constexpr double kPhysicsStep = 1.0 / (kControlRate * kSubstepsPerTick);
inline constexpr double kGravity = 9.81;
inline constexpr double kBallRadius = 0.0325;

struct SystemState {
  Vec3 ball_position = Vec3::Zero();
  Vec3 ball_velocity = Vec3::Zero();
  Quat ball_orientation = Quat::Identity();
  Eigen::VectorXd hand_joints;
  Eigen::VectorXd hand_joint_velocities;
  // empty for models without arm joints
  Eigen::VectorXd arm_joints;
  Eigen::VectorXd arm_joint_velocities;
  double sim_time = 0.0;
  bool ball_in_contact = false;
  bool ball_dropped = false;

  bool has_arm() const { return arm_joints.size() > 0; }
  bool IsFinite() const;
  // bitwise comparison of every field
  bool operator==(const SystemState& other) const;
};

// Partial state used by Reset; unset fields keep the model's home value.
struct StateOverrides {
  std::optional<Vec3> ball_position;
  std::optional<Vec3> ball_velocity;
  std::optional<Quat> ball_orientation;
  std::optional<Eigen::VectorXd> hand_joints;
  std::optional<Eigen::VectorXd> hand_joint_velocities;
  std::optional<Eigen::VectorXd> arm_joints;
  std::optional<Eigen::VectorXd> arm_joint_velocities;
  std::optional<double> sim_time;
};

StateOverrides OverridesFromJson(const nlohmann::json& j);

// Compact drawable summary of a state, projected onto the model's plane of
// motion; consumed by the frame digest sent to the critic.
struct FrameDigest {
  struct Point {
    std::string label;
    double x = 0.0;
    double y = 0.0;
  };
  struct Segment {
    double x0, y0, x1, y1;
  };
  double sim_time = 0.0;
  std::vector<Point> points;
  std::vector<Segment> segments;
};

// Discrete dynamics x' = f(x, u) over one physics step h. Models hold only
// immutable parameters; Step is a pure function of its arguments and may be
// called concurrently on distinct states.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::string name() const = 0;
  virtual int control_dim() const = 0;
  virtual int hand_dim() const = 0;
  virtual int arm_dim() const { return 0; }
  virtual ControlBounds control_bounds() const = 0;
  virtual Control HomeControl() const = 0;
  // ball center when resting at the middle of the palm (default p_optimal)
  virtual Vec3 PalmCenter() const = 0;
  // mid-curl reference posture (default q_hold)
  virtual Eigen::VectorXd HoldPosture() const = 0;
  // height of the resting ball center; flip heights are measured from here
  virtual double RestHeight() const { return 0.0; }
  // where a ball placed on the palm comes to rest given the hand/arm pose
  virtual Vec3 RestingBallPosition(const SystemState& state) const {
    (void)state;
    return PalmCenter();
  }
  virtual nlohmann::json ParamsJson() const = 0;
  virtual FrameDigest RenderDigest(const SystemState& state) const = 0;

  // home state with overrides applied; contact flags follow the geometry
  SystemState Reset(const StateOverrides& overrides = {}) const;

  // belief-state injection: overwrite the ball position (and optionally
  // velocity) of `state`, keep everything else, recompute contact flags
  SystemState InjectBall(const SystemState& state, const Vec3& position,
                         const std::optional<Vec3>& velocity = {}) const;

  // Throws NumericalDomainError on non-finite input or output and
  // ContractViolation on a control of the wrong dimension or h <= 0.
  SystemState Step(const SystemState& state, const Control& control,
                   double h) const;
  void StepInPlace(SystemState& state, const Control& control,
                   double h) const;

 protected:
  virtual SystemState Home() const = 0;
  virtual void UpdateContactFlags(SystemState& state) const = 0;
  virtual void Integrate(SystemState& state, const Control& control,
                         double h) const = 0;
};

// advances one control tick: `substeps` physics steps of tick_dt / substeps
void AdvanceTick(const DynamicsModel& model, SystemState& state,
                 const Control& control, double tick_dt = 1.0 / kControlRate,
                 int substeps = kSubstepsPerTick);

// Critically damped second-order servo tracking a position target:
// qdd = k (target - q) - 2 sqrt(k) qd, semi-implicit Euler.
void ServoStep(Eigen::Ref<Eigen::VectorXd> q, Eigen::Ref<Eigen::VectorXd> qd,
               const Eigen::Ref<const Eigen::VectorXd>& target,
               double stiffness, double h);

// Sanity model: planar double integrator, control is acceleration.
class PointMass2D final : public DynamicsModel {
 public:
  struct Params {
    double accel_limit = 1.0;
  };
  PointMass2D() = default;
  explicit PointMass2D(const Params& p) : params_(p) {}

  std::string name() const override { return "point_mass_2d"; }
  int control_dim() const override { return 2; }
  int hand_dim() const override { return 0; }
  ControlBounds control_bounds() const override;
  Control HomeControl() const override { return Control::Zero(2); }
  Vec3 PalmCenter() const override { return Vec3::Zero(); }
  Eigen::VectorXd HoldPosture() const override { return {}; }
  nlohmann::json ParamsJson() const override;
  FrameDigest RenderDigest(const SystemState& state) const override;

 protected:
  SystemState Home() const override;
  void UpdateContactFlags(SystemState& state) const override;
  void Integrate(SystemState& state, const Control& control,
                 double h) const override;

 private:
  Params params_;
};

// Rolling analog. A disc palm tilted about world y; three parallel fingers
// drive the palm surface along its long axis while flexing (they slide back
// freely while extending). The ball rolls without slipping, so a moving
// surface under a held ball spins it about -y. Finger flexion also deepens a
// cup that holds the ball against the incline; the ball drops once its
// center leaves the disc. A ball above the palm flies ballistically and lands
// inelastically (catching).
class PlanarBallBalancer final : public DynamicsModel {
 public:
  struct Params {
    double palm_radius = 0.08;
    double ball_radius = kBallRadius;
    double incline_deg = 20.0;
    // surface speed per unit flexion speed of one finger (m/rad)
    double finger_lever = 0.03;
    double servo_stiffness = 50.0;
    // cup stiffness k0 + k1 * mean(flexion) in 1/s^2, and viscous damping
    double cup_base = 20.0;
    double cup_per_flexion = 250.0;
    double cup_damping = 6.0;
    double joint_lo = -0.3;
    double joint_hi = 1.0;
    double hold_posture = 0.45;
  };
  PlanarBallBalancer() = default;
  explicit PlanarBallBalancer(const Params& p) : params_(p) {}

  std::string name() const override { return "planar_ball_balancer"; }
  int control_dim() const override { return 3; }
  int hand_dim() const override { return 3; }
  ControlBounds control_bounds() const override;
  Control HomeControl() const override { return HoldPosture(); }
  Vec3 PalmCenter() const override;
  Eigen::VectorXd HoldPosture() const override;
  nlohmann::json ParamsJson() const override;
  FrameDigest RenderDigest(const SystemState& state) const override;

  const Params& params() const { return params_; }
  Vec3 normal() const;
  Vec3 surface_axis() const;  // direction fingers move the surface
  Vec3 lateral_axis() const;  // world y
  // palm surface velocity produced by the given finger velocities
  Vec3 SurfaceVelocity(const Eigen::VectorXd& finger_velocities) const;

 protected:
  SystemState Home() const override;
  void UpdateContactFlags(SystemState& state) const override;
  void Integrate(SystemState& state, const Control& control,
                 double h) const override;

 private:
  Params params_;
};

// Flipping analog: a paddle with servoed vertical offset and tilt (the
// "hand" joints) throws a ball in the vertical x-z plane. Contact is a
// zero-restitution impulse; the ball separates with the paddle's velocity
// when the paddle decelerates faster than gravity. With arm joints enabled
// the paddle base also translates laterally and vertically.
class BallFlipper2D : public DynamicsModel {
 public:
  struct Params {
    double half_width = 0.06;
    double ball_radius = kBallRadius;
    double servo_stiffness = 4900.0;
    // the paddle joint spans [-paddle_limit, paddle_limit] and lifts the
    // paddle by `stroke` m per unit; tilt is in radians
    double stroke = 0.175;
    double paddle_limit = 0.2;
    double tilt_limit = 0.1;
    // lateral velocity decay rate while rolling on the paddle (1/s)
    double rolling_damping = 20.0;
    // concave palm: lateral pull toward the paddle center in contact (1/s^2)
    double cup_stiffness = 200.0;
    double drop_depth = 0.1;
    double hold_offset = 0.0;
    // arm joints (ArmFlipper only) span [-1, 1]; metres of base travel per
    // unit, lateral and vertical
    double arm_stiffness = 50.0;
    double arm_reach = 0.04;
    double arm_lift = 0.05;
  };
  BallFlipper2D() = default;
  explicit BallFlipper2D(const Params& p) : params_(p) {}

  std::string name() const override { return "ball_flipper_2d"; }
  int control_dim() const override { return 2 + arm_dim(); }
  int hand_dim() const override { return 2; }
  ControlBounds control_bounds() const override;
  Control HomeControl() const override;
  Vec3 PalmCenter() const override { return Vec3::Zero(); }
  Eigen::VectorXd HoldPosture() const override;
  nlohmann::json ParamsJson() const override;
  FrameDigest RenderDigest(const SystemState& state) const override;

  const Params& params() const { return params_; }
  Vec3 RestingBallPosition(const SystemState& state) const override;
  // height of the ball center when touching the paddle at lateral x
  double ContactHeight(const SystemState& state, double x) const;
  // paddle base position from the arm joints (zero without an arm)
  double BaseX(const SystemState& state) const;
  double BaseZ(const SystemState& state) const;

 protected:
  SystemState Home() const override;
  void UpdateContactFlags(SystemState& state) const override;
  void Integrate(SystemState& state, const Control& control,
                 double h) const override;

  Params params_;
};

class ArmFlipper final : public BallFlipper2D {
 public:
  using BallFlipper2D::BallFlipper2D;
  std::string name() const override { return "arm_flipper"; }
  int arm_dim() const override { return 2; }
};

// builds a model from its name and optional parameter overrides
std::unique_ptr<DynamicsModel> MakeModel(const std::string& name,
                                         const nlohmann::json& params = {});

std::vector<double> ToStdVector(const Eigen::VectorXd& v);
Eigen::VectorXd FromStdVector(const std::vector<double>& v);

}  // namespace dexmpc

#endif  // DEXMPC_DYNAMICS_H_
