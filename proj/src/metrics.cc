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

#include "dexmpc/metrics.h"

#include <cmath>
#include <vector>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace {

// [begin, end) tick ranges of the episodes in a log
std::vector<std::pair<std::size_t, std::size_t>> Episodes(
    const TrajectoryLog& log) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= log.ticks.size(); ++i) {
    if (i == log.ticks.size() || log.ticks[i].tick <= log.ticks[i - 1].tick) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

double Minutes(long ticks, double dt) { return ticks * dt / 60.0; }

}  // namespace

Vec3 LogMap(const Quat& q0, const Quat& q1) {
  Quat dq = q1 * q0.conjugate();
  if (dq.w() < 0.0) dq.coeffs() = -dq.coeffs();
  const Vec3 v = dq.vec();
  const double s = v.norm();
  if (s < 1e-300) return Vec3::Zero();
  return (2.0 * std::atan2(s, dq.w()) / s) * v;
}

nlohmann::json ToJson(const EpisodeMetrics& m) {
  nlohmann::json j = {{"mean_rot_vel", m.mean_rot_vel},
                      {"drops_per_min", m.drops_per_min},
                      {"flips_per_min", m.flips_per_min},
                      {"mean_flip_height", m.mean_flip_height},
                      {"duration", m.duration},
                      {"num_drops", m.num_drops},
                      {"num_flips", m.num_flips}};
  j["catch_success"] =
      m.catch_success ? nlohmann::json(*m.catch_success) : nlohmann::json();
  return j;
}

EpisodeMetrics MetricsFromJson(const nlohmann::json& j) {
  EpisodeMetrics m;
  try {
    m.mean_rot_vel = j.at("mean_rot_vel").get<double>();
    m.drops_per_min = j.at("drops_per_min").get<double>();
    m.flips_per_min = j.at("flips_per_min").get<double>();
    m.mean_flip_height = j.at("mean_flip_height").get<double>();
    m.duration = j.at("duration").get<double>();
    m.num_drops = j.value("num_drops", 0);
    m.num_flips = j.value("num_flips", 0);
    if (j.contains("catch_success") && !j["catch_success"].is_null()) {
      m.catch_success = j["catch_success"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics json: ") + e.what());
  }
  return m;
}

MetricsConfig MetricsConfigFromJson(const nlohmann::json& j) {
  MetricsConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("metrics config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "axis") {
        const auto v = value.get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("metrics.axis needs 3 components");
        c.axis = Vec3(v[0], v[1], v[2]);
        if (!(c.axis.norm() > 1e-12)) throw ConfigError("metrics.axis is zero");
        c.axis.normalize();
      } else if (key == "rest_height") {
        c.rest_height = value.get<double>();
      } else if (key == "apex_threshold") {
        c.apex_threshold = value.get<double>();
      } else if (key == "catching") {
        c.catching = value.get<bool>();
      } else if (key == "catch_hold") {
        c.catch_hold = value.get<double>();
      } else if (key == "catch_window") {
        c.catch_window = value.get<double>();
      } else {
        throw ConfigError("metrics: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics config: ") + e.what());
  }
  return c;
}

double RotationalVelocity(const TrajectoryLog& log, const Vec3& axis) {
  if (log.ticks.size() < 2) {
    throw UndefinedMetric("rotational velocity needs at least two ticks");
  }
  const Vec3 a = axis.normalized();
  double sum = 0.0;
  long pairs = 0;
  for (const auto& [begin, end] : Episodes(log)) {
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (log.ticks[i].reinitialized) continue;
      const Vec3 w = LogMap(log.ticks[i - 1].state.ball_orientation,
                            log.ticks[i].state.ball_orientation) /
                     log.tick_dt;
      sum += w.dot(a);
      ++pairs;
    }
  }
  if (pairs == 0) throw UndefinedMetric("no consecutive tick pairs");
  return sum / pairs;
}

FlipStats CountFlips(const TrajectoryLog& log, double rest_height,
                     double apex_threshold) {
  FlipStats stats;
  double height_sum = 0.0;
  long live_ticks = 0;
  for (const auto& [begin, end] : Episodes(log)) {
    bool in_flight = false;
    double apex = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const SystemState& s = log.ticks[i].state;
      if (!s.ball_dropped) ++live_ticks;
      if (s.ball_dropped || log.ticks[i].reinitialized) {
        in_flight = false;
        continue;
      }
      if (in_flight) {
        if (s.ball_in_contact) {
          if (apex - rest_height > apex_threshold) {
            ++stats.count;
            height_sum += apex - rest_height;
          }
          in_flight = false;
        } else {
          apex = std::max(apex, s.ball_position.z());
        }
      } else if (!s.ball_in_contact && i > begin &&
                 log.ticks[i - 1].state.ball_in_contact) {
        in_flight = true;
        apex = s.ball_position.z();
      }
    }
  }
  if (stats.count > 0) stats.mean_height = height_sum / stats.count;
  if (live_ticks > 0) {
    stats.flips_per_min = stats.count / Minutes(live_ticks, log.tick_dt);
  }
  return stats;
}

int CountDropEvents(const TrajectoryLog& log) {
  int drops = 0;
  for (const auto& [begin, end] : Episodes(log)) {
    bool previous = false;
    for (std::size_t i = begin; i < end; ++i) {
      const bool now = log.ticks[i].state.ball_dropped;
      if (now && !previous) ++drops;
      previous = now;
    }
  }
  return drops;
}

double DropsPerMinute(const TrajectoryLog& log) {
  if (log.ticks.empty()) return 0.0;
  return CountDropEvents(log) /
         Minutes(static_cast<long>(log.ticks.size()), log.tick_dt);
}

double CatchSuccess(const TrajectoryLog& log, double hold, double window) {
  const auto episodes = Episodes(log);
  if (episodes.empty()) throw UndefinedMetric("empty log");
  int caught = 0;
  for (const auto& [begin, end] : episodes) {
    std::optional<double> first_contact;
    std::optional<double> run_start;
    bool success = false;
    for (std::size_t i = begin; i < end && !success; ++i) {
      const SystemState& s = log.ticks[i].state;
      const double t = s.sim_time;
      if (first_contact && t - *first_contact > window + 1e-9) break;
      const bool held = s.ball_in_contact && !s.ball_dropped;
      if (!held) {
        run_start.reset();
        if (s.ball_dropped) break;
        continue;
      }
      if (!first_contact) first_contact = t;
      if (!run_start) run_start = t;
      if (t - *run_start >= hold - 1e-9) success = true;
    }
    if (success) ++caught;
  }
  return static_cast<double>(caught) / episodes.size();
}

EpisodeMetrics ComputeMetrics(const TrajectoryLog& log,
                              const MetricsConfig& config) {
  EpisodeMetrics m;
  m.duration = log.duration();
  m.mean_rot_vel =
      log.ticks.size() >= 2 ? RotationalVelocity(log, config.axis) : 0.0;
  m.num_drops = CountDropEvents(log);
  m.drops_per_min = DropsPerMinute(log);
  const FlipStats flips =
      CountFlips(log, config.rest_height, config.apex_threshold);
  m.num_flips = flips.count;
  m.flips_per_min = flips.flips_per_min;
  m.mean_flip_height = flips.mean_height;
  if (config.catching) {
    m.catch_success = CatchSuccess(log, config.catch_hold, config.catch_window);
  }
  return m;
}

TrajectoryLog ConcatLogs(const TrajectoryLog& a, const TrajectoryLog& b) {
  TrajectoryLog out = a;
  out.ticks.insert(out.ticks.end(), b.ticks.begin(), b.ticks.end());
  return out;
}

}  // namespace dexmpc
