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
#include <cstring>
#include <map>
#include <numbers>
#include <string>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace {

bool BitEqual(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool BitEqual(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!BitEqual(a[i], b[i])) return false;
  }
  return true;
}

Eigen::VectorXd Vec(const Vec3& v) { return Eigen::VectorXd(v); }

// exact constant-gravity flight over h
void Ballistic(SystemState& s, double h) {
  const Vec3 g(0.0, 0.0, -kGravity);
  s.ball_position += h * s.ball_velocity + 0.5 * h * h * g;
  s.ball_velocity += h * g;
}

void RequireSize(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n) {
    throw ContractViolation(std::string(what) + ": expected dimension " +
                            std::to_string(n) + ", got " +
                            std::to_string(v.size()));
  }
}

// Reads numeric overrides for a parameter struct. Unknown keys are rejected.
void ApplyParams(const nlohmann::json& j,
                 const std::map<std::string, double*>& fields,
                 const std::string& model) {
  if (j.is_null()) return;
  if (!j.is_object()) throw ConfigError(model + ": params must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError(model + ": unknown parameter '" + key + "'");
    }
    if (!value.is_number() || !std::isfinite(value.get<double>())) {
      throw ConfigError(model + ": parameter '" + key + "' must be a number");
    }
    *it->second = value.get<double>();
  }
}

nlohmann::json DumpParams(const std::map<std::string, double*>& fields) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, ptr] : fields) j[key] = *ptr;
  return j;
}

std::map<std::string, double*> Fields(PointMass2D::Params& p) {
  return {{"accel_limit", &p.accel_limit}};
}

std::map<std::string, double*> Fields(PlanarBallBalancer::Params& p) {
  return {{"palm_radius", &p.palm_radius},
          {"ball_radius", &p.ball_radius},
          {"incline_deg", &p.incline_deg},
          {"finger_lever", &p.finger_lever},
          {"servo_stiffness", &p.servo_stiffness},
          {"cup_base", &p.cup_base},
          {"cup_per_flexion", &p.cup_per_flexion},
          {"cup_damping", &p.cup_damping},
          {"joint_lo", &p.joint_lo},
          {"joint_hi", &p.joint_hi},
          {"hold_posture", &p.hold_posture}};
}

std::map<std::string, double*> Fields(BallFlipper2D::Params& p) {
  return {{"half_width", &p.half_width},
          {"ball_radius", &p.ball_radius},
          {"servo_stiffness", &p.servo_stiffness},
          {"stroke", &p.stroke},
          {"paddle_limit", &p.paddle_limit},
          {"tilt_limit", &p.tilt_limit},
          {"rolling_damping", &p.rolling_damping},
          {"cup_stiffness", &p.cup_stiffness},
          {"drop_depth", &p.drop_depth},
          {"hold_offset", &p.hold_offset},
          {"arm_stiffness", &p.arm_stiffness},
          {"arm_reach", &p.arm_reach},
          {"arm_lift", &p.arm_lift}};
}

}  // namespace

bool SystemState::IsFinite() const {
  return ball_position.allFinite() && ball_velocity.allFinite() &&
         ball_orientation.coeffs().allFinite() && hand_joints.allFinite() &&
         hand_joint_velocities.allFinite() && arm_joints.allFinite() &&
         arm_joint_velocities.allFinite() && std::isfinite(sim_time);
}

bool SystemState::operator==(const SystemState& o) const {
  return BitEqual(Vec(ball_position), Vec(o.ball_position)) &&
         BitEqual(Vec(ball_velocity), Vec(o.ball_velocity)) &&
         BitEqual(Eigen::VectorXd(ball_orientation.coeffs()),
                  Eigen::VectorXd(o.ball_orientation.coeffs())) &&
         BitEqual(hand_joints, o.hand_joints) &&
         BitEqual(hand_joint_velocities, o.hand_joint_velocities) &&
         BitEqual(arm_joints, o.arm_joints) &&
         BitEqual(arm_joint_velocities, o.arm_joint_velocities) &&
         BitEqual(sim_time, o.sim_time) &&
         ball_in_contact == o.ball_in_contact &&
         ball_dropped == o.ball_dropped;
}

StateOverrides OverridesFromJson(const nlohmann::json& j) {
  StateOverrides o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ConfigError("state overrides must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      const auto v = value.is_array() ? value.get<std::vector<double>>()
                                      : std::vector<double>{};
      if (key == "ball_position" || key == "ball_velocity") {
        if (v.size() != 3) throw ConfigError(key + " needs 3 components");
        (key == "ball_position" ? o.ball_position : o.ball_velocity) =
            Vec3(v[0], v[1], v[2]);
      } else if (key == "ball_orientation") {
        if (v.size() != 4) throw ConfigError(key + " needs (w, x, y, z)");
        o.ball_orientation = Quat(v[0], v[1], v[2], v[3]);
      } else if (key == "hand_joints") {
        o.hand_joints = FromStdVector(v);
      } else if (key == "hand_joint_velocities") {
        o.hand_joint_velocities = FromStdVector(v);
      } else if (key == "arm_joints") {
        o.arm_joints = FromStdVector(v);
      } else if (key == "arm_joint_velocities") {
        o.arm_joint_velocities = FromStdVector(v);
      } else if (key == "sim_time") {
        o.sim_time = value.get<double>();
      } else {
        throw ConfigError("unknown state override '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("state overrides: ") + e.what());
  }
  return o;
}

SystemState DynamicsModel::Reset(const StateOverrides& o) const {
  SystemState s = Home();
  auto check = [](bool finite, const char* what) {
    if (!finite) throw ContractViolation(std::string(what) + " is not finite");
  };
  if (o.ball_position) {
    check(o.ball_position->allFinite(), "ball_position");
    s.ball_position = *o.ball_position;
  }
  if (o.ball_velocity) {
    check(o.ball_velocity->allFinite(), "ball_velocity");
    s.ball_velocity = *o.ball_velocity;
  }
  if (o.ball_orientation) {
    check(o.ball_orientation->coeffs().allFinite(), "ball_orientation");
    if (o.ball_orientation->norm() < 1e-12) {
      throw ContractViolation("ball_orientation has zero norm");
    }
    s.ball_orientation = o.ball_orientation->normalized();
  }
  if (o.hand_joints) {
    RequireSize(*o.hand_joints, hand_dim(), "hand_joints");
    check(o.hand_joints->allFinite(), "hand_joints");
    s.hand_joints = *o.hand_joints;
  }
  if (o.hand_joint_velocities) {
    RequireSize(*o.hand_joint_velocities, hand_dim(), "hand_joint_velocities");
    check(o.hand_joint_velocities->allFinite(), "hand_joint_velocities");
    s.hand_joint_velocities = *o.hand_joint_velocities;
  }
  if (o.arm_joints) {
    RequireSize(*o.arm_joints, arm_dim(), "arm_joints");
    check(o.arm_joints->allFinite(), "arm_joints");
    s.arm_joints = *o.arm_joints;
  }
  if (o.arm_joint_velocities) {
    RequireSize(*o.arm_joint_velocities, arm_dim(), "arm_joint_velocities");
    check(o.arm_joint_velocities->allFinite(), "arm_joint_velocities");
    s.arm_joint_velocities = *o.arm_joint_velocities;
  }
  if (o.sim_time) {
    check(std::isfinite(*o.sim_time), "sim_time");
    s.sim_time = *o.sim_time;
  }
  UpdateContactFlags(s);
  return s;
}

SystemState DynamicsModel::InjectBall(const SystemState& state,
                                      const Vec3& position,
                                      const std::optional<Vec3>& velocity) const {
  if (!position.allFinite() || (velocity && !velocity->allFinite())) {
    throw ContractViolation("injected ball state is not finite");
  }
  SystemState s = state;
  s.ball_position = position;
  if (velocity) s.ball_velocity = *velocity;
  UpdateContactFlags(s);
  return s;
}

SystemState DynamicsModel::Step(const SystemState& state,
                                const Control& control, double h) const {
  SystemState next = state;
  StepInPlace(next, control, h);
  return next;
}

void DynamicsModel::StepInPlace(SystemState& state, const Control& control,
                                double h) const {
  RequireSize(control, control_dim(), "control");
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ContractViolation("step size must be finite and positive");
  }
  if (!control.allFinite()) {
    throw NumericalDomainError("non-finite control");
  }
  if (!state.IsFinite()) {
    throw NumericalDomainError("non-finite state");
  }
  RequireSize(state.hand_joints, hand_dim(), "state hand_joints");
  RequireSize(state.hand_joint_velocities, hand_dim(),
              "state hand_joint_velocities");
  RequireSize(state.arm_joints, arm_dim(), "state arm_joints");
  RequireSize(state.arm_joint_velocities, arm_dim(),
              "state arm_joint_velocities");

  const bool was_dropped = state.ball_dropped;
  Integrate(state, control, h);
  state.ball_orientation.normalize();
  state.sim_time += h;
  if (was_dropped) {
    state.ball_dropped = true;
    state.ball_in_contact = false;
  }
  if (!state.IsFinite()) {
    throw NumericalDomainError("dynamics produced a non-finite state");
  }
}

void AdvanceTick(const DynamicsModel& model, SystemState& state,
                 const Control& control, double tick_dt, int substeps) {
  if (substeps < 1) throw ContractViolation("substeps must be >= 1");
  const double h = tick_dt / substeps;
  for (int i = 0; i < substeps; ++i) model.StepInPlace(state, control, h);
}

void ServoStep(Eigen::Ref<Eigen::VectorXd> q, Eigen::Ref<Eigen::VectorXd> qd,
               const Eigen::Ref<const Eigen::VectorXd>& target,
               double stiffness, double h) {
  const double damping = 2.0 * std::sqrt(stiffness);
  qd += h * (stiffness * (target - q) - damping * qd);
  q += h * qd;
}

std::vector<double> ToStdVector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd FromStdVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

// ---------------- PointMass2D ----------------

ControlBounds PointMass2D::control_bounds() const {
  return {Eigen::VectorXd::Constant(2, -params_.accel_limit),
          Eigen::VectorXd::Constant(2, params_.accel_limit)};
}

nlohmann::json PointMass2D::ParamsJson() const {
  auto p = params_;
  return DumpParams(Fields(p));
}

SystemState PointMass2D::Home() const {
  SystemState s;
  s.hand_joints.resize(0);
  s.hand_joint_velocities.resize(0);
  return s;
}

void PointMass2D::UpdateContactFlags(SystemState& s) const {
  s.ball_in_contact = false;
  s.ball_dropped = false;
}

void PointMass2D::Integrate(SystemState& s, const Control& u, double h) const {
  s.ball_velocity.head<2>() += h * u;
  s.ball_position.head<2>() += h * s.ball_velocity.head<2>();
}

FrameDigest PointMass2D::RenderDigest(const SystemState& s) const {
  FrameDigest d;
  d.sim_time = s.sim_time;
  d.points.push_back({"mass", s.ball_position.x(), s.ball_position.y()});
  return d;
}

// ---------------- PlanarBallBalancer ----------------

Vec3 PlanarBallBalancer::normal() const {
  const double a = params_.incline_deg * std::numbers::pi / 180.0;
  return Vec3(-std::sin(a), 0.0, std::cos(a));
}

Vec3 PlanarBallBalancer::surface_axis() const {
  const double a = params_.incline_deg * std::numbers::pi / 180.0;
  return Vec3(std::cos(a), 0.0, std::sin(a));
}

Vec3 PlanarBallBalancer::lateral_axis() const { return Vec3::UnitY(); }

Vec3 PlanarBallBalancer::PalmCenter() const {
  return params_.ball_radius * normal();
}

Eigen::VectorXd PlanarBallBalancer::HoldPosture() const {
  return Eigen::VectorXd::Constant(3, params_.hold_posture);
}

ControlBounds PlanarBallBalancer::control_bounds() const {
  return {Eigen::VectorXd::Constant(3, params_.joint_lo),
          Eigen::VectorXd::Constant(3, params_.joint_hi)};
}

nlohmann::json PlanarBallBalancer::ParamsJson() const {
  auto p = params_;
  return DumpParams(Fields(p));
}

Vec3 PlanarBallBalancer::SurfaceVelocity(
    const Eigen::VectorXd& finger_velocities) const {
  // fingers push the surface only while flexing
  const double speed =
      params_.finger_lever * finger_velocities.cwiseMax(0.0).sum();
  return speed * surface_axis();
}

SystemState PlanarBallBalancer::Home() const {
  SystemState s;
  s.ball_position = PalmCenter();
  s.hand_joints = HoldPosture();
  s.hand_joint_velocities = Eigen::VectorXd::Zero(3);
  return s;
}

void PlanarBallBalancer::UpdateContactFlags(SystemState& s) const {
  const Vec3 n = normal();
  const double height = s.ball_position.dot(n) - params_.ball_radius;
  const double radial = (s.ball_position - s.ball_position.dot(n) * n).norm();
  const bool on_plane = height <= 1e-6;
  s.ball_dropped = radial > params_.palm_radius && on_plane;
  s.ball_in_contact = on_plane && !s.ball_dropped;
}

void PlanarBallBalancer::Integrate(SystemState& s, const Control& u,
                                   double h) const {
  const auto& p = params_;
  const Eigen::VectorXd target = u.cwiseMax(p.joint_lo).cwiseMin(p.joint_hi);
  ServoStep(s.hand_joints, s.hand_joint_velocities, target, p.servo_stiffness,
            h);

  if (s.ball_dropped) {
    Ballistic(s, h);
    return;
  }

  const Vec3 n = normal();
  const Vec3 eu = surface_axis();
  const Vec3 ev = lateral_axis();
  const double r = p.ball_radius;

  if (!s.ball_in_contact) {
    Ballistic(s, h);
    const double height = s.ball_position.dot(n) - r;
    if (height <= 0.0) {
      const Vec3 in_plane = s.ball_position - s.ball_position.dot(n) * n;
      if (in_plane.norm() <= p.palm_radius) {
        // inelastic landing
        s.ball_position -= height * n;
        s.ball_velocity -= s.ball_velocity.dot(n) * n;
        s.ball_in_contact = true;
      } else {
        s.ball_dropped = true;
      }
    }
    return;
  }

  // in-plane coordinates of the ball center
  Eigen::Vector2d x(s.ball_position.dot(eu), s.ball_position.dot(ev));
  Eigen::Vector2d v(s.ball_velocity.dot(eu), s.ball_velocity.dot(ev));
  const Vec3 g(0.0, 0.0, -kGravity);
  const Eigen::Vector2d g_t(g.dot(eu), g.dot(ev));
  const double cup = std::max(
      0.0, p.cup_base + p.cup_per_flexion * s.hand_joints.mean());
  // rolling sphere: gravity acts with factor 5/7
  const Eigen::Vector2d a = (5.0 / 7.0) * g_t - cup * x - p.cup_damping * v;
  v += h * a;
  x += h * v;
  s.ball_position = r * n + x[0] * eu + x[1] * ev;
  s.ball_velocity = v[0] * eu + v[1] * ev;

  // no slip at the contact point: v_ball + w x (-r n) = v_surface
  const Vec3 slip = s.ball_velocity - SurfaceVelocity(s.hand_joint_velocities);
  const Vec3 omega = n.cross(slip) / r;
  const double angle = omega.norm() * h;
  if (angle > 0.0) {
    s.ball_orientation =
        Quat(Eigen::AngleAxisd(angle, omega.normalized())) * s.ball_orientation;
  }

  if (x.norm() > p.palm_radius) {
    s.ball_dropped = true;
    s.ball_in_contact = false;
  }
}

FrameDigest PlanarBallBalancer::RenderDigest(const SystemState& s) const {
  FrameDigest d;
  d.sim_time = s.sim_time;
  const Vec3 eu = surface_axis();
  const Vec3 a = -params_.palm_radius * eu;
  const Vec3 b = params_.palm_radius * eu;
  d.segments.push_back({a.x(), a.z(), b.x(), b.z()});
  d.points.push_back({"ball", s.ball_position.x(), s.ball_position.z()});
  // a marker on the ball surface shows its spin
  const Vec3 mark =
      s.ball_position + s.ball_orientation * Vec3(params_.ball_radius, 0, 0);
  d.points.push_back({"ball_mark", mark.x(), mark.z()});
  for (int i = 0; i < 3; ++i) {
    // finger tips curl up from the palm edge as flexion grows
    const double q = s.hand_joints[i];
    const Vec3 n = normal();
    const Vec3 base = b - 0.02 * i * eu;
    const Vec3 tip = base + 0.04 * (std::cos(q) * eu + std::sin(q) * n);
    d.segments.push_back({base.x(), base.z(), tip.x(), tip.z()});
  }
  return d;
}

// ---------------- BallFlipper2D ----------------

ControlBounds BallFlipper2D::control_bounds() const {
  const int m = control_dim();
  ControlBounds b{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  b.lo.head<2>() << -params_.paddle_limit, -params_.tilt_limit;
  b.hi.head<2>() << params_.paddle_limit, params_.tilt_limit;
  if (arm_dim() == 2) {
    b.lo.tail<2>().setConstant(-1.0);
    b.hi.tail<2>().setConstant(1.0);
  }
  return b;
}

Control BallFlipper2D::HomeControl() const {
  return Control::Zero(control_dim());
}

Eigen::VectorXd BallFlipper2D::HoldPosture() const {
  Eigen::VectorXd q(2);
  q << params_.hold_offset, 0.0;
  return q;
}

nlohmann::json BallFlipper2D::ParamsJson() const {
  auto p = params_;
  return DumpParams(Fields(p));
}

SystemState BallFlipper2D::Home() const {
  SystemState s;
  s.hand_joints = Eigen::VectorXd::Zero(2);
  s.hand_joint_velocities = Eigen::VectorXd::Zero(2);
  s.arm_joints = Eigen::VectorXd::Zero(arm_dim());
  s.arm_joint_velocities = Eigen::VectorXd::Zero(arm_dim());
  return s;
}

double BallFlipper2D::BaseX(const SystemState& s) const {
  return arm_dim() ? params_.arm_reach * s.arm_joints[0] : 0.0;
}

double BallFlipper2D::BaseZ(const SystemState& s) const {
  return arm_dim() ? params_.arm_lift * s.arm_joints[1] : 0.0;
}

Vec3 BallFlipper2D::RestingBallPosition(const SystemState& s) const {
  const double bx = BaseX(s);
  return Vec3(bx, 0.0, ContactHeight(s, bx));
}

double BallFlipper2D::ContactHeight(const SystemState& s, double x) const {
  const double bx = BaseX(s);
  const double tilt = s.hand_joints[1];
  // the paddle surface sits one radius below the resting ball center
  return BaseZ(s) + params_.stroke * s.hand_joints[0] +
         (x - bx) * std::tan(tilt) +
         params_.ball_radius * (1.0 / std::cos(tilt) - 1.0);
}

void BallFlipper2D::UpdateContactFlags(SystemState& s) const {
  const double bx = BaseX(s);
  const double x = s.ball_position.x();
  const double z = s.ball_position.z();
  s.ball_dropped = std::abs(x - bx) > params_.half_width ||
                   z < RestHeight() - params_.drop_depth;
  s.ball_in_contact = !s.ball_dropped && z <= ContactHeight(s, x) + 1e-9;
}

void BallFlipper2D::Integrate(SystemState& s, const Control& u,
                              double h) const {
  const auto& p = params_;
  const ControlBounds bounds = control_bounds();
  const Eigen::VectorXd target = bounds.Clamp(u);
  ServoStep(s.hand_joints, s.hand_joint_velocities, target.head<2>(),
            p.servo_stiffness, h);
  if (arm_dim()) {
    ServoStep(s.arm_joints, s.arm_joint_velocities, target.tail<2>(),
              p.arm_stiffness, h);
  }

  if (s.ball_dropped) {
    Ballistic(s, h);
    return;
  }

  const double bx = BaseX(s);
  if (s.ball_in_contact) {
    // rolling down the tilted paddle, with some rolling resistance
    const double tilt = s.hand_joints[1];
    double& vx = s.ball_velocity.x();
    vx += -h * ((5.0 / 7.0) * kGravity * std::sin(tilt) +
                p.cup_stiffness * (s.ball_position.x() - bx));
    vx *= 1.0 / (1.0 + h * p.rolling_damping);
  }
  Ballistic(s, h);

  const double x = s.ball_position.x();
  s.ball_in_contact = false;
  if (std::abs(x - bx) <= p.half_width) {
    const double zc = ContactHeight(s, x);
    if (s.ball_position.z() <= zc) {
      const double tilt = s.hand_joints[1];
      const double tilt_rate = s.hand_joint_velocities[1];
      const double sec2 = 1.0 / (std::cos(tilt) * std::cos(tilt));
      double surface_vz = p.stroke * s.hand_joint_velocities[0] +
                          ((x - bx) * sec2 +
                           p.ball_radius * std::sin(tilt) * sec2) *
                              tilt_rate;
      if (arm_dim()) {
        surface_vz += p.arm_lift * s.arm_joint_velocities[1] -
                      p.arm_reach * s.arm_joint_velocities[0] * std::tan(tilt);
      }
      // zero restitution: the ball takes the surface's normal speed
      s.ball_position.z() = zc;
      s.ball_velocity.z() = std::max(s.ball_velocity.z(), surface_vz);
      s.ball_in_contact = true;
    }
  }
  if (std::abs(x - bx) > p.half_width ||
      s.ball_position.z() < RestHeight() - p.drop_depth) {
    s.ball_dropped = true;
    s.ball_in_contact = false;
  }
}

FrameDigest BallFlipper2D::RenderDigest(const SystemState& s) const {
  FrameDigest d;
  d.sim_time = s.sim_time;
  const double bx = BaseX(s);
  const double r = params_.ball_radius;
  const double x0 = bx - params_.half_width;
  const double x1 = bx + params_.half_width;
  d.segments.push_back({x0, ContactHeight(s, x0) - r, x1,
                        ContactHeight(s, x1) - r});
  d.points.push_back({"ball", s.ball_position.x(), s.ball_position.z()});
  if (arm_dim()) {
    d.points.push_back({"arm_base", bx, BaseZ(s) - r - 0.05});
  }
  return d;
}

std::unique_ptr<DynamicsModel> MakeModel(const std::string& name,
                                         const nlohmann::json& params) {
  if (name == "point_mass_2d") {
    PointMass2D::Params p;
    ApplyParams(params, Fields(p), name);
    if (!(p.accel_limit > 0.0)) throw ConfigError(name + ": accel_limit <= 0");
    return std::make_unique<PointMass2D>(p);
  }
  if (name == "planar_ball_balancer") {
    PlanarBallBalancer::Params p;
    ApplyParams(params, Fields(p), name);
    if (!(p.palm_radius > 0.0) || !(p.ball_radius > 0.0) ||
        !(p.servo_stiffness > 0.0) || !(p.joint_lo < p.joint_hi)) {
      throw ConfigError(name + ": invalid geometry or joint range");
    }
    return std::make_unique<PlanarBallBalancer>(p);
  }
  if (name == "ball_flipper_2d" || name == "arm_flipper") {
    BallFlipper2D::Params p;
    ApplyParams(params, Fields(p), name);
    if (!(p.half_width > 0.0) || !(p.servo_stiffness > 0.0) ||
        !(p.stroke > 0.0) || !(p.paddle_limit > 0.0) ||
        !(p.tilt_limit > 0.0) ||
        !(p.cup_stiffness >= 0.0) ||
        !(p.tilt_limit < 1.5) || !(p.arm_stiffness > 0.0)) {
      throw ConfigError(name + ": invalid paddle parameters");
    }
    if (name == "arm_flipper") return std::make_unique<ArmFlipper>(p);
    return std::make_unique<BallFlipper2D>(p);
  }
  throw ConfigError("unknown dynamics model '" + name + "'");
}

}  // namespace dexmpc
