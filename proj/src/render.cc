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

#include "dexmpc/render.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dexmpc/metrics.h"

namespace dexmpc {

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string FrameToSvg(const FrameDigest& frame, double center_x,
                       double center_y, double half_extent, int pixels) {
  const double scale = pixels / (2.0 * half_extent);
  auto px = [&](double x) { return (x - center_x + half_extent) * scale; };
  auto py = [&](double y) { return (center_y + half_extent - y) * scale; };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels
      << "\" height=\"" << pixels << "\">"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>";
  for (const auto& s : frame.segments) {
    svg << "<line x1=\"" << Num(px(s.x0)) << "\" y1=\"" << Num(py(s.y0))
        << "\" x2=\"" << Num(px(s.x1)) << "\" y2=\"" << Num(py(s.y1))
        << "\" stroke=\"black\" stroke-width=\"2\"/>";
  }
  for (const auto& p : frame.points) {
    const bool ball = p.label == "ball";
    const double r = ball ? kBallRadius * scale : 2.0;
    svg << "<circle cx=\"" << Num(px(p.x)) << "\" cy=\"" << Num(py(p.y))
        << "\" r=\"" << Num(r) << "\" fill=\""
        << (ball ? "none" : "#d62728") << "\" stroke=\"#1f77b4\"/>";
  }
  svg << "<text x=\"4\" y=\"14\" font-size=\"11\">t=" << Num(frame.sim_time)
      << "s</text></svg>";
  return svg.str();
}

std::string TracesToSvg(const std::vector<Series>& panels,
                        const std::string& title, int width,
                        int panel_height) {
  const int left = 70, right = 20, top = 30, gap = 30;
  const int height =
      top + static_cast<int>(panels.size()) * (panel_height + gap);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>"
      << "<text x=\"" << left << "\" y=\"18\" font-size=\"14\">"
      << Escape(title) << "</text>";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const Series& s = panels[k];
    const int y0 = top + static_cast<int>(k) * (panel_height + gap);
    const double plot_w = width - left - right;
    double t_min = 0, t_max = 1, v_min = 0, v_max = 1;
    if (!s.t.empty()) {
      t_min = s.t.front();
      t_max = std::max(s.t.back(), t_min + 1e-9);
      v_min = v_max = s.y.front();
      for (double v : s.y) {
        if (std::isfinite(v)) {
          v_min = std::min(v_min, v);
          v_max = std::max(v_max, v);
        }
      }
      if (v_max - v_min < 1e-12) {
        v_min -= 0.5;
        v_max += 0.5;
      }
    }
    auto px = [&](double t) {
      return left + (t - t_min) / (t_max - t_min) * plot_w;
    };
    auto py = [&](double v) {
      return y0 + panel_height - (v - v_min) / (v_max - v_min) * panel_height;
    };
    svg << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\""
        << plot_w << "\" height=\"" << panel_height
        << "\" fill=\"none\" stroke=\"#999\"/>"
        << "<text x=\"4\" y=\"" << y0 + 12 << "\" font-size=\"11\">"
        << Escape(s.label) << "</text>"
        << "<text x=\"4\" y=\"" << y0 + panel_height << "\" font-size=\"10\">"
        << Num(v_min) << "</text>"
        << "<text x=\"4\" y=\"" << y0 + 26 << "\" font-size=\"10\">"
        << Num(v_max) << "</text>"
        << "<text x=\"" << left << "\" y=\"" << y0 + panel_height + 12
        << "\" font-size=\"10\">" << Num(t_min) << " s</text>"
        << "<text x=\"" << width - right - 40 << "\" y=\""
        << y0 + panel_height + 12 << "\" font-size=\"10\">" << Num(t_max)
        << " s</text>";
    svg << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\""
        << kPalette[k % 8] << "\" points=\"";
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      svg << Num(px(s.t[i])) << "," << Num(py(s.y[i])) << " ";
    }
    svg << "\"/>";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<Series> TrajectorySeries(const TrajectoryLog& log,
                                     const Vec3& axis) {
  Series height{"ball height [m]", {}, {}};
  Series omega{"rotational velocity [rad/s]", {}, {}};
  std::vector<Series> terms;
  for (const auto& name : log.term_names) {
    terms.push_back({"cost " + name, {}, {}});
  }
  const Vec3 a = axis.normalized();
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    const TickRecord& r = log.ticks[i];
    const double t = r.state.sim_time;
    height.t.push_back(t);
    height.y.push_back(r.state.ball_position.z());
    if (i > 0 && !r.reinitialized && r.tick > log.ticks[i - 1].tick) {
      omega.t.push_back(t);
      omega.y.push_back(LogMap(log.ticks[i - 1].state.ball_orientation,
                               r.state.ball_orientation)
                            .dot(a) /
                        log.tick_dt);
    }
    for (std::size_t k = 0; k < terms.size() && k < r.term_costs.size(); ++k) {
      terms[k].t.push_back(t);
      terms[k].y.push_back(r.term_costs[k]);
    }
  }
  std::vector<Series> out{height, omega};
  out.insert(out.end(), terms.begin(), terms.end());
  return out;
}

}  // namespace dexmpc
