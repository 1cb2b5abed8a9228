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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dexmpc/errors.h"

namespace dexmpc {
namespace {

Control V(std::initializer_list<double> x) {
  Control v(x.size());
  int i = 0;
  for (double d : x) v[i++] = d;
  return v;
}

// Lagrange polynomial through (ts, ys), evaluated at t.
double Lagrange(const std::vector<double>& ts, const std::vector<double>& ys,
                double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double term = ys[i];
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (j != i) term *= (t - ts[j]) / (ts[i] - ts[j]);
    }
    sum += term;
  }
  return sum;
}

TEST(SplineTest, ZeroOrderHoldIsRightOpen) {
  ControlSpline s(0, {0.0, 1.0}, {V({0.5}), V({0.9})});
  EXPECT_EQ(s.Evaluate(0.99)[0], 0.5);
  EXPECT_EQ(s.Evaluate(0.0)[0], 0.5);
  EXPECT_EQ(s.Evaluate(1.0)[0], 0.9);
}

TEST(SplineTest, LinearInterpolates) {
  ControlSpline s(1, {0.0, 1.0}, {V({0.0}), V({1.0})});
  EXPECT_DOUBLE_EQ(s.Evaluate(0.25)[0], 0.25);
}

TEST(SplineTest, QuadraticMatchesParabolaThroughFirstTriple) {
  const std::vector<double> ts{0.0, 1.0, 2.0}, ys{0.0, 1.0, 0.0};
  ControlSpline s(2, ts, {V({0.0}), V({1.0}), V({0.0})});
  EXPECT_NEAR(s.Evaluate(0.5)[0], Lagrange(ts, ys, 0.5), 1e-12);
  EXPECT_NEAR(s.Evaluate(0.5)[0], 0.75, 1e-12);
  // a single parabola reproduces itself on both segments
  for (double t = 0.0; t <= 2.0; t += 0.05) {
    EXPECT_NEAR(s.Evaluate(t)[0], Lagrange(ts, ys, t), 1e-12) << t;
  }
}

TEST(SplineTest, QuadraticIsC1AtInteriorKnots) {
  ControlSpline s(2, {0.0, 0.3, 0.6, 0.9, 1.2},
                  {V({0.1}), V({-0.4}), V({0.7}), V({0.2}), V({0.5})});
  const double eps = 1e-7;
  for (double knot : {0.3, 0.6, 0.9}) {
    const double left =
        (s.Evaluate(knot)[0] - s.Evaluate(knot - eps)[0]) / eps;
    const double right =
        (s.Evaluate(knot + eps)[0] - s.Evaluate(knot)[0]) / eps;
    EXPECT_NEAR(left, right, 1e-5) << knot;
  }
}

TEST(SplineTest, QuadraticIsC1AtMidpointsAndC2AtKnots) {
  const std::vector<double> ts{0.0, 0.25, 0.6, 0.9, 1.2, 1.7};
  ControlSpline s(2, ts,
                  {V({0.1}), V({-0.4}), V({0.7}), V({0.2}), V({0.5}),
                   V({-0.3})});
  const double eps = 1e-7;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double m = 0.5 * (ts[k] + ts[k + 1]);
    const double left = (s.Evaluate(m)[0] - s.Evaluate(m - eps)[0]) / eps;
    const double right = (s.Evaluate(m + eps)[0] - s.Evaluate(m)[0]) / eps;
    EXPECT_NEAR(left, right, 1e-5) << m;
  }
  // second derivative from one-sided quadratic fits on either side of a knot
  for (std::size_t k = 1; k + 1 < ts.size(); ++k) {
    const double t = ts[k], e = 1e-3;
    const double left = (s.Evaluate(t)[0] - 2 * s.Evaluate(t - e)[0] +
                         s.Evaluate(t - 2 * e)[0]) / (e * e);
    const double right = (s.Evaluate(t + 2 * e)[0] - 2 * s.Evaluate(t + e)[0] +
                          s.Evaluate(t)[0]) / (e * e);
    EXPECT_NEAR(left, right, 1e-6 * std::max(1.0, std::abs(left))) << t;
  }
}

TEST(SplineTest, QuadraticReproducesParabolas) {
  const std::vector<double> ts{0.0, 0.3, 0.5, 0.9, 1.4};
  auto f = [](double t) { return 0.3 - 1.7 * t + 2.2 * t * t; };
  std::vector<Control> vs;
  for (double t : ts) vs.push_back(V({f(t)}));
  ControlSpline s(2, ts, vs);
  for (double t = 0.0; t <= 1.4; t += 0.01) {
    EXPECT_NEAR(s.Evaluate(t)[0], f(t), 1e-12) << t;
  }
}

TEST(SplineTest, RepeatedQuadraticShiftsStayBounded) {
  std::vector<double> ts;
  std::vector<Control> vs;
  const double zig[] = {0.0, 0.1, -0.05, 0.08, 0.0, -0.1, 0.05, 0.0};
  for (int k = 0; k < 8; ++k) {
    ts.push_back(k * (25.0 / 30.0) / 7.0);
    vs.push_back(V({zig[k]}));
  }
  ControlSpline s(2, ts, vs);
  for (int i = 0; i < 300; ++i) {
    s = ShiftHorizon(s, 1.0 / 30.0);
    for (const auto& v : s.knot_values()) ASSERT_LE(std::abs(v[0]), 0.2) << i;
  }
}

TEST(SplineTest, InterpolatesKnots) {
  const std::vector<double> ts{0.0, 0.2, 0.4, 0.6};
  const std::vector<Control> vs{V({1.0, -2.0}), V({0.3, 0.5}),
                                V({-0.7, 2.5}), V({4.0, 0.0})};
  for (int order : {1, 2}) {
    ControlSpline s(order, ts, vs);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const Control u = s.Evaluate(ts[k]);
      for (int j = 0; j < 2; ++j) {
        EXPECT_NEAR(u[j], vs[k][j], 1e-12 * std::max(1.0, std::abs(vs[k][j])));
      }
    }
  }
}

TEST(SplineTest, ZeroOrderIsPiecewiseConstantBitExact) {
  ControlSpline s(0, {0.0, 0.1, 0.2}, {V({0.123}), V({0.456}), V({0.789})});
  for (double t = 0.1; t < 0.2; t += 0.001) {
    EXPECT_EQ(s.Evaluate(t)[0], 0.456);
  }
}

TEST(SplineTest, EvaluateClampsTime) {
  ControlSpline s(1, {1.0, 2.0}, {V({3.0}), V({5.0})});
  EXPECT_EQ(s.Evaluate(-10.0)[0], 3.0);
  EXPECT_EQ(s.Evaluate(10.0)[0], 5.0);
}

TEST(SplineTest, EvaluateIntoRejectsWrongDimension) {
  ControlSpline s(1, {0.0, 1.0}, {V({0.0}), V({1.0})});
  Eigen::VectorXd out(2);
  EXPECT_THROW(s.EvaluateInto(0.5, out), ContractViolation);
}

TEST(SplineTest, ConstructorValidates) {
  EXPECT_THROW(ControlSpline(3, {0.0, 1.0, 2.0, 3.0},
                             {V({0}), V({0}), V({0}), V({0})}),
               ContractViolation);
  EXPECT_THROW(ControlSpline(2, {0.0, 1.0}, {V({0}), V({0})}),
               ContractViolation);
  EXPECT_THROW(ControlSpline(1, {0.0, 0.0}, {V({0}), V({0})}),
               ContractViolation);
  EXPECT_THROW(ControlSpline(1, {0.0, 1.0}, {V({0}), V({0, 1})}),
               ContractViolation);
}

TEST(SplineTest, ClampToBounds) {
  ControlBounds unit{V({0.0}), V({1.0})};
  ControlSpline s(0, {0.0, 1.0}, {V({1.5}), V({-0.2})});
  const ControlSpline c = ClampToBounds(s, unit);
  EXPECT_EQ(c.knot_values()[0][0], 1.0);
  EXPECT_EQ(c.knot_values()[1][0], 0.0);
  EXPECT_EQ(c.knot_times(), s.knot_times());

  ControlSpline inside(1, {0.0, 1.0}, {V({0.2}), V({0.8})});
  EXPECT_EQ(ClampToBounds(inside, unit), inside);

  ControlBounds box{V({0.0, 0.0}), V({1.0, 1.0})};
  ControlSpline wide(0, {0.0}, {V({0.5, 2.0})});
  const ControlSpline cw = ClampToBounds(wide, box);
  EXPECT_EQ(cw.knot_values()[0], V({0.5, 1.0}));
  EXPECT_EQ(ClampToBounds(cw, box), cw);

  EXPECT_THROW(ClampToBounds(wide, unit), ContractViolation);
}

TEST(SplineTest, ShiftByZeroIsIdentity) {
  ControlSpline s(2, {0.0, 0.4, 0.8}, {V({0.1}), V({0.9}), V({-0.3})});
  const ControlSpline shifted = ShiftHorizon(s, 0.0);
  for (double t = 0.0; t <= 0.8; t += 0.01) {
    EXPECT_NEAR(shifted.Evaluate(t)[0], s.Evaluate(t)[0], 1e-12);
  }
}

TEST(SplineTest, ShiftHoldsLastKnot) {
  ControlSpline s(0, {0.0, 1.0, 2.0}, {V({1.0}), V({2.0}), V({3.0})});
  const ControlSpline shifted = ShiftHorizon(s, 1.0);
  EXPECT_EQ(shifted.knot_times(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(shifted.knot_values()[0][0], 2.0);
  EXPECT_EQ(shifted.knot_values()[1][0], 3.0);
  EXPECT_EQ(shifted.knot_values()[2][0], 3.0);
}

TEST(SplineTest, LinearShiftByHalfIntervalTakesMidpoint) {
  ControlSpline s(1, {0.0, 1.0, 2.0}, {V({0.2}), V({1.0}), V({0.0})});
  const ControlSpline shifted = ShiftHorizon(s, 0.5);
  EXPECT_NEAR(shifted.knot_values()[0][0], 0.5 * (0.2 + 1.0), 1e-15);
  EXPECT_THROW(ShiftHorizon(s, -0.1), ContractViolation);
}

TEST(SplineTest, JsonRoundTrip) {
  ControlSpline s(2, {0.0, 0.5, 1.0}, {V({1, 2}), V({3, 4}), V({5, 6})});
  EXPECT_EQ(SplineFromJson(ToJson(s)), s);
  EXPECT_THROW(SplineFromJson(nlohmann::json{{"order", 1}}), ConfigError);
}

}  // namespace
}  // namespace dexmpc
