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

#ifndef DEXMPC_TRAJECTORY_H_
#define DEXMPC_TRAJECTORY_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "dexmpc/dynamics.h"

namespace dexmpc {

// One control tick: the true state when the tick began and what the
// planner did with it.
struct TickRecord {
  int tick = 0;
  SystemState state;
  Control control;
  double best_objective = 0.0;
  int best_index = 0;
  bool degenerate = false;
  bool late = false;
  // the state feed had nothing newer than the previous tick
  bool stale = false;
  // ball reinitialized at the start of this tick after a drop
  bool reinitialized = false;
  double wall_time_ms = 0.0;
  std::vector<double> term_costs;
};

struct TrajectoryLog {
  std::string model;
  double tick_dt = 1.0 / kControlRate;
  std::vector<std::string> term_names;
  std::vector<TickRecord> ticks;

  double duration() const { return tick_dt * ticks.size(); }
};

// Deterministic per-tick CSV (no wall times); doubles use 17 significant
// digits so a log reads back bit-exactly.
void WriteTrajectoryCsv(const TrajectoryLog& log, std::ostream& out);
void WriteTrajectoryCsv(const TrajectoryLog& log, const std::string& path);
// tick, wall_time_ms, late
void WriteTimingCsv(const TrajectoryLog& log, const std::string& path);
// throws ParseError on malformed input
TrajectoryLog ReadTrajectoryCsv(std::istream& in);
TrajectoryLog ReadTrajectoryCsv(const std::string& path);

// shortest round-trip decimal for a double
std::string FormatDouble(double v);

}  // namespace dexmpc

#endif  // DEXMPC_TRAJECTORY_H_
