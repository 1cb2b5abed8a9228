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

#ifndef DEXMPC_RENDER_H_
#define DEXMPC_RENDER_H_

#include <string>
#include <vector>

#include "dexmpc/dynamics.h"
#include "dexmpc/trajectory.h"

namespace dexmpc {

// One digest drawn into a square SVG; `half_extent` metres around `center`.
std::string FrameToSvg(const FrameDigest& frame, double center_x = 0.0,
                       double center_y = 0.05, double half_extent = 0.15,
                       int pixels = 160);

struct Series {
  std::string label;
  std::vector<double> t;
  std::vector<double> y;
};

// Stacked line charts sharing the time axis, one panel per series.
std::string TracesToSvg(const std::vector<Series>& panels,
                        const std::string& title, int width = 900,
                        int panel_height = 160);

// ball height, rotational velocity about `axis` and (when logged) the
// per-term costs of a trajectory
std::vector<Series> TrajectorySeries(const TrajectoryLog& log,
                                     const Vec3& axis);

}  // namespace dexmpc

#endif  // DEXMPC_RENDER_H_
