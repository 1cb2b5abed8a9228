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

#ifndef DEXMPC_SPLINE_H_
#define DEXMPC_SPLINE_H_

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace dexmpc {

using Control = Eigen::VectorXd;

// Componentwise actuator limits.
struct ControlBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  // throws ConfigError unless lo <= hi componentwise and sizes match
  void Validate() const;
  Control Clamp(const Control& u) const;
  bool Contains(const Control& u) const;
};

// Control trajectory parameterized by S knots (the planner's decision
// variable). Order 0 is a zero-order hold on right-open intervals, order 1
// is piecewise linear and order 2 is a C1 quadratic spline through the
// knots with its breaks halfway between them. Immutable once constructed.
class ControlSpline {
 public:
  ControlSpline() = default;
  ControlSpline(int order, std::vector<double> knot_times,
                std::vector<Control> knot_values);

  // S knots spread uniformly over [t0, t0 + span], all holding `value`
  static ControlSpline Constant(int order, int num_knots, double t0,
                                double span, const Control& value);

  int order() const { return order_; }
  int num_knots() const { return static_cast<int>(times_.size()); }
  int dim() const { return dim_; }
  double start_time() const { return times_.front(); }
  double span() const { return times_.back() - times_.front(); }
  const std::vector<double>& knot_times() const { return times_; }
  const std::vector<Control>& knot_values() const { return values_; }

  // t is clamped to [first knot, last knot]
  Control Evaluate(double t) const;
  // allocation-free variant; out.size() must equal dim()
  void EvaluateInto(double t, Eigen::Ref<Eigen::VectorXd> out) const;

  bool operator==(const ControlSpline& other) const;

 private:
  int order_ = 0;
  int dim_ = 0;
  std::vector<double> times_;
  std::vector<Control> values_;
  // order 2 only: derivative at each knot
  std::vector<Control> slopes_;
};

ControlSpline ClampToBounds(const ControlSpline& spline,
                            const ControlBounds& bounds);

// Receding-horizon warm start: knots move to [t0 + dt, t0 + dt + span] and
// take the old spline's values there, holding the last knot past the end.
ControlSpline ShiftHorizon(const ControlSpline& spline, double dt);

nlohmann::json ToJson(const ControlSpline& spline);
ControlSpline SplineFromJson(const nlohmann::json& j);

}  // namespace dexmpc

#endif  // DEXMPC_SPLINE_H_
