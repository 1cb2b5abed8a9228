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

#include "dexmpc/trajectory.h"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dexmpc/errors.h"

namespace dexmpc {

namespace {

constexpr char kMagic[] = "# dexmpc trajectory";

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("trajectory csv: bad number '" + s + "'");
  }
  return v;
}

int CountPrefix(const std::vector<std::string>& header,
                const std::string& prefix) {
  int n = 0;
  while (true) {
    bool found = false;
    for (const auto& h : header) {
      if (h == prefix + std::to_string(n)) found = true;
    }
    if (!found) return n;
    ++n;
  }
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void WriteTrajectoryCsv(const TrajectoryLog& log, std::ostream& out) {
  const int nh = log.ticks.empty() ? 0 : log.ticks[0].state.hand_joints.size();
  const int na = log.ticks.empty() ? 0 : log.ticks[0].state.arm_joints.size();
  const int nu = log.ticks.empty() ? 0 : log.ticks[0].control.size();
  out << kMagic << " model=" << log.model
      << " tick_dt=" << FormatDouble(log.tick_dt) << "\n";
  out << "tick,sim_time,px,py,pz,vx,vy,vz,qw,qx,qy,qz";
  for (int i = 0; i < nh; ++i) out << ",hand_q" << i;
  for (int i = 0; i < nh; ++i) out << ",hand_qd" << i;
  for (int i = 0; i < na; ++i) out << ",arm_q" << i;
  for (int i = 0; i < na; ++i) out << ",arm_qd" << i;
  for (int i = 0; i < nu; ++i) out << ",u" << i;
  out << ",in_contact,dropped,best_objective,best_index,degenerate,late,"
         "stale,reinit";
  for (const auto& name : log.term_names) out << ",cost_" << name;
  out << "\n";

  std::string row;
  for (const auto& r : log.ticks) {
    const SystemState& s = r.state;
    row.clear();
    auto put = [&row](double v) {
      row += ',';
      row += FormatDouble(v);
    };
    row += std::to_string(r.tick);
    put(s.sim_time);
    for (int i = 0; i < 3; ++i) put(s.ball_position[i]);
    for (int i = 0; i < 3; ++i) put(s.ball_velocity[i]);
    put(s.ball_orientation.w());
    put(s.ball_orientation.x());
    put(s.ball_orientation.y());
    put(s.ball_orientation.z());
    for (int i = 0; i < nh; ++i) put(s.hand_joints[i]);
    for (int i = 0; i < nh; ++i) put(s.hand_joint_velocities[i]);
    for (int i = 0; i < na; ++i) put(s.arm_joints[i]);
    for (int i = 0; i < na; ++i) put(s.arm_joint_velocities[i]);
    for (int i = 0; i < nu; ++i) put(r.control[i]);
    row += s.ball_in_contact ? ",1" : ",0";
    row += s.ball_dropped ? ",1" : ",0";
    put(r.best_objective);
    row += ',' + std::to_string(r.best_index);
    row += r.degenerate ? ",1" : ",0";
    row += r.late ? ",1" : ",0";
    row += r.stale ? ",1" : ",0";
    row += r.reinitialized ? ",1" : ",0";
    for (double c : r.term_costs) put(c);
    out << row << "\n";
  }
}

void WriteTrajectoryCsv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  WriteTrajectoryCsv(log, out);
}

void WriteTimingCsv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "tick,wall_time_ms,late\n";
  for (const auto& r : log.ticks) {
    out << r.tick << ',' << FormatDouble(r.wall_time_ms) << ','
        << (r.late ? 1 : 0) << "\n";
  }
}

TrajectoryLog ReadTrajectoryCsv(std::istream& in) {
  TrajectoryLog log;
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
    throw ParseError("trajectory csv: missing header comment");
  }
  {
    std::istringstream meta(line.substr(sizeof(kMagic) - 1));
    std::string kv;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "model") log.model = value;
      if (key == "tick_dt") log.tick_dt = ParseDouble(value);
    }
  }
  if (!std::getline(in, line)) throw ParseError("trajectory csv: no header");
  const std::vector<std::string> header = SplitCsv(line);
  std::map<std::string, int> col;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) col[header[i]] = i;
  const int nh = CountPrefix(header, "hand_q");
  const int na = CountPrefix(header, "arm_q");
  const int nu = CountPrefix(header, "u");
  for (const auto& h : header) {
    if (h.rfind("cost_", 0) == 0) log.term_names.push_back(h.substr(5));
  }
  auto at = [&col](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) {
      throw ParseError("trajectory csv: missing column " + name);
    }
    return it->second;
  };
  // resolve the fixed columns up front
  const int c_tick = at("tick"), c_time = at("sim_time"), c_px = at("px"),
            c_vx = at("vx"), c_qw = at("qw"), c_contact = at("in_contact"),
            c_drop = at("dropped"), c_obj = at("best_objective"),
            c_best = at("best_index"), c_deg = at("degenerate"),
            c_late = at("late"), c_stale = at("stale"),
            c_reinit = at("reinit");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw ParseError("trajectory csv: row has " + std::to_string(f.size()) +
                       " fields, header has " +
                       std::to_string(header.size()));
    }
    TickRecord r;
    r.tick = static_cast<int>(ParseDouble(f[c_tick]));
    SystemState& s = r.state;
    s.sim_time = ParseDouble(f[c_time]);
    for (int i = 0; i < 3; ++i) {
      s.ball_position[i] = ParseDouble(f[c_px + i]);
      s.ball_velocity[i] = ParseDouble(f[c_vx + i]);
    }
    s.ball_orientation = Quat(ParseDouble(f[c_qw]), ParseDouble(f[c_qw + 1]),
                              ParseDouble(f[c_qw + 2]),
                              ParseDouble(f[c_qw + 3]));
    s.hand_joints.resize(nh);
    s.hand_joint_velocities.resize(nh);
    for (int i = 0; i < nh; ++i) {
      s.hand_joints[i] = ParseDouble(f[at("hand_q" + std::to_string(i))]);
      s.hand_joint_velocities[i] =
          ParseDouble(f[at("hand_qd" + std::to_string(i))]);
    }
    s.arm_joints.resize(na);
    s.arm_joint_velocities.resize(na);
    for (int i = 0; i < na; ++i) {
      s.arm_joints[i] = ParseDouble(f[at("arm_q" + std::to_string(i))]);
      s.arm_joint_velocities[i] =
          ParseDouble(f[at("arm_qd" + std::to_string(i))]);
    }
    r.control.resize(nu);
    for (int i = 0; i < nu; ++i) {
      r.control[i] = ParseDouble(f[at("u" + std::to_string(i))]);
    }
    s.ball_in_contact = f[c_contact] == "1";
    s.ball_dropped = f[c_drop] == "1";
    r.best_objective = ParseDouble(f[c_obj]);
    r.best_index = static_cast<int>(ParseDouble(f[c_best]));
    r.degenerate = f[c_deg] == "1";
    r.late = f[c_late] == "1";
    r.stale = f[c_stale] == "1";
    r.reinitialized = f[c_reinit] == "1";
    for (const auto& name : log.term_names) {
      r.term_costs.push_back(ParseDouble(f[at("cost_" + name)]));
    }
    log.ticks.push_back(std::move(r));
  }
  return log;
}

TrajectoryLog ReadTrajectoryCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return ReadTrajectoryCsv(in);
}

}  // namespace dexmpc
