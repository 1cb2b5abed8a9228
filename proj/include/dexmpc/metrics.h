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

#ifndef DEXMPC_METRICS_H_
#define DEXMPC_METRICS_H_

#include <optional>

#include <nlohmann/json.hpp>

#include "dexmpc/trajectory.h"

namespace dexmpc {

struct EpisodeMetrics {
  double mean_rot_vel = 0.0;  // rad/s about the configured axis
  double drops_per_min = 0.0;
  double flips_per_min = 0.0;
  double mean_flip_height = 0.0;  // m above the rest plane
  std::optional<double> catch_success;
  double duration = 0.0;  // s
  int num_drops = 0;
  int num_flips = 0;
};

nlohmann::json ToJson(const EpisodeMetrics& m);
EpisodeMetrics MetricsFromJson(const nlohmann::json& j);

struct MetricsConfig {
  Vec3 axis = -Vec3::UnitY();
  double rest_height = 0.0;
  double apex_threshold = 0.02;
  bool catching = false;
  // catch: continuous contact for hold_time within window of first contact
  double catch_hold = 1.0;
  double catch_window = 2.0;
};

MetricsConfig MetricsConfigFromJson(const nlohmann::json& j);

// rotation vector of q1 * q0^-1 in the world frame, angle in [0, pi]
Vec3 LogMap(const Quat& q0, const Quat& q1);

// A log may hold several episodes back to back; a tick index that does not
// increase starts a new one. Every metric treats episodes independently.

// mean over consecutive tick pairs of the log-map angular velocity projected
// on `axis`; pairs across a ball reinitialization are skipped. Throws
// UndefinedMetric with fewer than two ticks.
double RotationalVelocity(const TrajectoryLog& log, const Vec3& axis);

struct FlipStats {
  int count = 0;
  double flips_per_min = 0.0;
  double mean_height = 0.0;
};
// a flip is an airborne interval that starts from contact, peaks more than
// apex_threshold above rest_height and ends in contact without a drop; time
// spent dropped is excluded from the rate
FlipStats CountFlips(const TrajectoryLog& log, double rest_height = 0.0,
                     double apex_threshold = 0.02);

int CountDropEvents(const TrajectoryLog& log);
// false -> true transitions of the drop flag per minute of log time
double DropsPerMinute(const TrajectoryLog& log);

// fraction of episodes in which the ball stayed in contact for `hold`
// seconds within `window` seconds of first contact
double CatchSuccess(const TrajectoryLog& log, double hold = 1.0,
                    double window = 2.0);

EpisodeMetrics ComputeMetrics(const TrajectoryLog& log,
                              const MetricsConfig& config);

// b appended to a (tick indices restart, marking a new episode)
TrajectoryLog ConcatLogs(const TrajectoryLog& a, const TrajectoryLog& b);

}  // namespace dexmpc

#endif  // DEXMPC_METRICS_H_
