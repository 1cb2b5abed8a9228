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

#include "dexmpc/spline.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dexmpc/errors.h"

namespace dexmpc {

void ControlBounds::Validate() const {
  if (lo.size() != hi.size()) {
    throw ConfigError("control bounds: lo and hi differ in dimension");
  }
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
      throw ConfigError("control bounds: need finite lo <= hi at component " +
                        std::to_string(i));
    }
  }
}

Control ControlBounds::Clamp(const Control& u) const {
  if (u.size() != lo.size()) {
    throw ContractViolation("clamp: control dimension does not match bounds");
  }
  return u.cwiseMax(lo).cwiseMin(hi);
}

bool ControlBounds::Contains(const Control& u) const {
  if (u.size() != lo.size()) return false;
  return ((u - lo).array() >= 0.0).all() && ((hi - u).array() >= 0.0).all();
}

ControlSpline::ControlSpline(int order, std::vector<double> knot_times,
                             std::vector<Control> knot_values)
    : order_(order), times_(std::move(knot_times)),
      values_(std::move(knot_values)) {
  if (order_ < 0 || order_ > 2) {
    throw ContractViolation("spline order must be 0, 1 or 2");
  }
  if (times_.size() != values_.size()) {
    throw ContractViolation("spline: knot time/value count mismatch");
  }
  if (static_cast<int>(times_.size()) < order_ + 1 || times_.empty()) {
    throw ContractViolation("spline: need at least order + 1 knots");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw ContractViolation("spline: knot times must strictly increase");
    }
  }
  dim_ = static_cast<int>(values_.front().size());
  for (const auto& v : values_) {
    if (v.size() != dim_) {
      throw ContractViolation("spline: knot values differ in dimension");
    }
  }

  if (order_ == 2) {
    // Quadratic pieces break at the midpoints between knots; the curve is
    // C2 at the knots and the first and last midpoints are not breaks, so
    // three knots give the parabola through them. Knot slopes s_k solve a
    // tridiagonal system (Thomas algorithm, one pass for all components).
    const std::size_t s = times_.size();
    std::vector<double> h(s - 1);
    std::vector<Control> delta(s - 1);
    for (std::size_t k = 0; k + 1 < s; ++k) {
      h[k] = times_[k + 1] - times_[k];
      delta[k] = (values_[k + 1] - values_[k]) / h[k];
    }
    std::vector<double> sub(s, 0.0), diag(s, 1.0), sup(s, 0.0);
    std::vector<Control> rhs(s);
    sup[0] = 1.0;
    rhs[0] = 2.0 * delta[0];
    for (std::size_t k = 1; k + 1 < s; ++k) {
      sub[k] = 1.0 / h[k - 1];
      diag[k] = 3.0 / h[k - 1] + 3.0 / h[k];
      sup[k] = 1.0 / h[k];
      rhs[k] = 4.0 * (delta[k - 1] / h[k - 1] + delta[k] / h[k]);
    }
    sub[s - 1] = 1.0;
    rhs[s - 1] = 2.0 * delta[s - 2];
    for (std::size_t k = 1; k < s; ++k) {
      const double m = sub[k] / diag[k - 1];
      diag[k] -= m * sup[k - 1];
      rhs[k] -= m * rhs[k - 1];
    }
    slopes_.resize(s);
    slopes_[s - 1] = rhs[s - 1] / diag[s - 1];
    for (std::size_t k = s - 1; k-- > 0;) {
      slopes_[k] = (rhs[k] - sup[k] * slopes_[k + 1]) / diag[k];
    }
  }
}

ControlSpline ControlSpline::Constant(int order, int num_knots, double t0,
                                      double span, const Control& value) {
  if (num_knots < 1 || (num_knots > 1 && !(span > 0.0))) {
    throw ContractViolation("spline: invalid knot count or span");
  }
  std::vector<double> times(num_knots);
  for (int k = 0; k < num_knots; ++k) {
    times[k] = num_knots == 1 ? t0 : t0 + span * k / (num_knots - 1);
  }
  return ControlSpline(order, std::move(times),
                       std::vector<Control>(num_knots, value));
}

void ControlSpline::EvaluateInto(double t,
                                 Eigen::Ref<Eigen::VectorXd> out) const {
  if (out.size() != dim_) {
    throw ContractViolation("spline evaluate: output dimension mismatch");
  }
  if (!(t > times_.front())) {
    out = values_.front();
    return;
  }
  if (t >= times_.back()) {
    out = values_.back();
    return;
  }
  // segment k with times_[k] <= t < times_[k+1]
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  switch (order_) {
    case 0:
      out = values_[k];
      return;
    case 1: {
      const double alpha = (t - times_[k]) / (times_[k + 1] - times_[k]);
      out = values_[k] + alpha * (values_[k + 1] - values_[k]);
      return;
    }
    default: {
      const double h = times_[k + 1] - times_[k];
      const double tau = t - times_[k];
      const auto delta4 = (4.0 / h) * (values_[k + 1] - values_[k]);
      if (tau <= 0.5 * h) {
        out = values_[k] + tau * slopes_[k] +
              (tau * tau / (2.0 * h)) *
                  (delta4 - 3.0 * slopes_[k] - slopes_[k + 1]);
      } else {
        const double sigma = t - times_[k + 1];
        out = values_[k + 1] + sigma * slopes_[k + 1] +
              (sigma * sigma / (2.0 * h)) *
                  (3.0 * slopes_[k + 1] + slopes_[k] - delta4);
      }
      return;
    }
  }
}

Control ControlSpline::Evaluate(double t) const {
  Control out(dim_);
  EvaluateInto(t, out);
  return out;
}

bool ControlSpline::operator==(const ControlSpline& other) const {
  if (order_ != other.order_ || times_ != other.times_ ||
      values_.size() != other.values_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (values_[k] != other.values_[k]) return false;
  }
  return true;
}

ControlSpline ClampToBounds(const ControlSpline& spline,
                            const ControlBounds& bounds) {
  if (bounds.dim() != spline.dim()) {
    throw ContractViolation("clamp_to_bounds: dimension mismatch");
  }
  std::vector<Control> values;
  values.reserve(spline.num_knots());
  for (const auto& v : spline.knot_values()) values.push_back(bounds.Clamp(v));
  return ControlSpline(spline.order(), spline.knot_times(), std::move(values));
}

ControlSpline ShiftHorizon(const ControlSpline& spline, double dt) {
  if (!(dt >= 0.0)) throw ContractViolation("shift_horizon: dt must be >= 0");
  const int s = spline.num_knots();
  const double t0 = spline.start_time() + dt;
  const double span = spline.span();
  std::vector<double> times(s);
  std::vector<Control> values(s);
  for (int k = 0; k < s; ++k) {
    times[k] = s == 1 ? t0 : t0 + span * k / (s - 1);
    values[k] = spline.Evaluate(times[k]);
  }
  return ControlSpline(spline.order(), std::move(times), std::move(values));
}

nlohmann::json ToJson(const ControlSpline& spline) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : spline.knot_values()) {
    values.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  return {{"order", spline.order()},
          {"knot_times", spline.knot_times()},
          {"knot_values", values}};
}

ControlSpline SplineFromJson(const nlohmann::json& j) {
  try {
    std::vector<Control> values;
    for (const auto& row : j.at("knot_values")) {
      const auto v = row.get<std::vector<double>>();
      values.push_back(Eigen::Map<const Eigen::VectorXd>(
          v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return ControlSpline(j.at("order").get<int>(),
                         j.at("knot_times").get<std::vector<double>>(),
                         std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("spline json: ") + e.what());
  }
}

}  // namespace dexmpc
