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

#include "dexmpc/estimation.h"

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dexmpc/errors.h"
#include "dexmpc/rng.h"
#include "dexmpc/thread_pool.h"

namespace dexmpc {

namespace {

constexpr uint32_t kRansacSubstream = 0x5a4e;
constexpr uint32_t kMocapSubstream = 0x30ca;

void CheckOptions(const RansacOptions& o) {
  if (!(o.radius > 0.0) || !std::isfinite(o.radius)) {
    throw ContractViolation("ransac: radius must be positive");
  }
  if (!(o.inlier_tol > 0.0)) {
    throw ContractViolation("ransac: inlier tolerance must be positive");
  }
  if (o.iterations < 1) throw ContractViolation("ransac: iterations < 1");
  if (o.min_inliers < 4) throw ContractViolation("ransac: min_inliers < 4");
  if (o.refine_iterations < 0) {
    throw ContractViolation("ransac: refine_iterations < 0");
  }
}

double Residual(const Vec3& p, const Vec3& c, double radius) {
  return (p - c).norm() - radius;
}

std::vector<int> Inliers(const std::vector<Vec3>& pts, const Vec3& c,
                         const RansacOptions& o, double* sum_sq) {
  std::vector<int> in;
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = Residual(pts[i], c, o.radius);
    if (std::abs(r) <= o.inlier_tol) {
      in.push_back(static_cast<int>(i));
      s += r * r;
    }
  }
  if (sum_sq != nullptr) *sum_sq = s;
  return in;
}

// least squares center with the radius held fixed
Vec3 Refine(const std::vector<Vec3>& pts, const std::vector<int>& idx,
            Vec3 c, const RansacOptions& o) {
  for (int it = 0; it < o.refine_iterations; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Vec3 jtr = Vec3::Zero();
    for (int i : idx) {
      const Vec3 d = pts[i] - c;
      const double n = d.norm();
      if (n == 0.0) continue;
      const Vec3 g = -d / n;
      jtj += g * g.transpose();
      jtr += g * (n - o.radius);
    }
    const Eigen::LDLT<Eigen::Matrix3d> ldlt(jtj);
    if (ldlt.info() != Eigen::Success) break;
    const Vec3 step = ldlt.solve(-jtr);
    if (!step.allFinite()) break;
    c += step;
    if (step.norm() < 1e-15) break;
  }
  return c;
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ToDouble(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ParseError("marker csv line " + std::to_string(line) +
                     ": bad number '" + s + "'");
  }
  return v;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::optional<std::pair<Vec3, double>> SphereThroughPoints(const Vec3& a,
                                                           const Vec3& b,
                                                           const Vec3& c,
                                                           const Vec3& d) {
  Eigen::Matrix3d m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = (d - a).transpose();
  const double scale = m.row(0).norm() * m.row(1).norm() * m.row(2).norm();
  const double det = m.determinant();
  if (!(scale > 0.0) || std::abs(det) <= 1e-6 * scale) return std::nullopt;
  const Vec3 rhs(0.5 * m.row(0).squaredNorm(), 0.5 * m.row(1).squaredNorm(),
                 0.5 * m.row(2).squaredNorm());
  const Vec3 x = m.partialPivLu().solve(rhs);
  if (!x.allFinite()) return std::nullopt;
  return std::make_pair(Vec3(a + x), x.norm());
}

SphereFit RansacSphereCenter(const MarkerCloud& cloud,
                             const RansacOptions& o, uint64_t stream) {
  CheckOptions(o);
  const auto& pts = cloud.points;
  for (const Vec3& p : pts) {
    if (!p.allFinite()) throw ContractViolation("marker cloud: non-finite point");
  }
  SphereFit fit;
  const uint32_t n = static_cast<uint32_t>(pts.size());
  if (n < 4) return fit;

  CounterRng rng(o.seed, stream, kRansacSubstream);
  std::size_t best_count = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  std::optional<Vec3> best;
  for (int it = 0; it < o.iterations; ++it) {
    uint32_t idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = rng.Below(n);
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
    }
    const auto s =
        SphereThroughPoints(pts[idx[0]], pts[idx[1]], pts[idx[2]], pts[idx[3]]);
    if (!s) continue;
    if (std::abs(s->second - o.radius) > o.radius_tolerance * o.radius) continue;
    double sq = 0.0;
    const std::size_t count = Inliers(pts, s->first, o, &sq).size();
    if (count > best_count || (count == best_count && sq < best_sq)) {
      best_count = count;
      best_sq = sq;
      best = s->first;
    }
  }
  if (!best || best_count < 4) return fit;

  std::vector<int> in = Inliers(pts, *best, o, nullptr);
  Vec3 c = Refine(pts, in, *best, o);
  // the refined center may pick up or shed borderline points
  std::vector<int> again = Inliers(pts, c, o, nullptr);
  if (again != in && again.size() >= 4) {
    in = std::move(again);
    c = Refine(pts, in, c, o);
  }
  double sq = 0.0;
  for (int i : in) sq += std::pow(Residual(pts[i], c, o.radius), 2);
  fit.center = c;
  fit.inliers = std::move(in);
  fit.rms_residual = std::sqrt(sq / static_cast<double>(fit.inliers.size()));
  fit.valid = static_cast<int>(fit.inliers.size()) >= o.min_inliers &&
              fit.rms_residual <= o.inlier_tol && c.allFinite();
  return fit;
}

std::vector<SphereFit> FitFrames(const std::vector<MarkerCloud>& frames,
                                 const RansacOptions& options,
                                 int num_workers) {
  std::vector<SphereFit> fits(frames.size());
  ThreadPool pool(std::max(1, num_workers));
  pool.ParallelFor(frames.size(), [&](std::size_t i) {
    fits[i] = RansacSphereCenter(frames[i], options, i);
  });
  return fits;
}

std::vector<Vec3> FibonacciDirections(int n) {
  if (n < 1) throw ContractViolation("need at least one marker");
  std::vector<Vec3> out;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * i;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

SyntheticMocap::SyntheticMocap(MocapOptions options)
    : options_(options), directions_(FibonacciDirections(kNumMarkers)) {
  if (!(options_.rate > 0.0)) throw ContractViolation("mocap rate must be > 0");
  if (!(options_.occlusion_rate >= 0.0 && options_.occlusion_rate <= 1.0)) {
    throw ContractViolation("occlusion rate must lie in [0, 1]");
  }
  if (!(options_.noise_std >= 0.0)) {
    throw ContractViolation("noise std must be >= 0");
  }
}

MarkerCloud SyntheticMocap::Frame(uint64_t index, double timestamp,
                                  const Vec3& center,
                                  const Quat& orientation) const {
  CounterRng rng(options_.seed, index, kMocapSubstream);
  MarkerCloud cloud;
  cloud.timestamp = timestamp;
  for (int i = 0; i < kNumMarkers; ++i) {
    // draw both numbers for every marker so streams stay aligned
    const bool hidden = rng.Uniform() < options_.occlusion_rate;
    const Vec3 noise(rng.Normal(), rng.Normal(), rng.Normal());
    if (hidden) continue;
    Vec3 p = center + options_.radius * (orientation * directions_[i]);
    if (options_.noise_std > 0.0) p += options_.noise_std * noise;
    cloud.points.push_back(p);
    cloud.ids.push_back(i);
  }
  return cloud;
}

std::vector<MarkerCloud> SyntheticStream(
    const std::function<Vec3(double)>& center, double duration,
    const MocapOptions& options) {
  SyntheticMocap mocap(options);
  std::vector<MarkerCloud> out;
  const auto frames =
      static_cast<uint64_t>(std::floor(duration * options.rate + 1e-9)) + 1;
  for (uint64_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / options.rate;
    out.push_back(mocap.Frame(k, t, center(t)));
  }
  return out;
}

// ---------------- ingest ----------------

std::vector<MarkerCloud> ReadMarkerCsv(std::istream& in) {
  std::vector<MarkerCloud> frames;
  std::string line;
  int number = 0;
  std::optional<double> current;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitComma(line);
    if (number == 1 && !f.empty() && f[0] == "timestamp") continue;
    if (f.size() != 6) {
      throw ParseError("marker csv line " + std::to_string(number) +
                       ": expected 6 fields");
    }
    const double t = ToDouble(f[0], number);
    const double id = ToDouble(f[1], number);
    const Vec3 p(ToDouble(f[2], number), ToDouble(f[3], number),
                 ToDouble(f[4], number));
    const double visible = ToDouble(f[5], number);
    if (!current || t != *current) {
      if (current && t < *current) {
        throw ParseError("marker csv line " + std::to_string(number) +
                         ": timestamps go backwards");
      }
      frames.push_back({});
      frames.back().timestamp = t;
      current = t;
    }
    if (visible != 0.0) {
      frames.back().points.push_back(p);
      frames.back().ids.push_back(static_cast<int>(id));
    }
  }
  return frames;
}

std::vector<MarkerCloud> ReadMarkerCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return ReadMarkerCsv(in);
}

void WriteMarkerCsv(const std::vector<MarkerCloud>& frames, std::ostream& out) {
  out << "timestamp,marker_id,x,y,z,visible\n";
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      const int id = i < f.ids.size() ? f.ids[i] : static_cast<int>(i);
      out << Num(f.timestamp) << "," << id << "," << Num(f.points[i].x())
          << "," << Num(f.points[i].y()) << "," << Num(f.points[i].z())
          << ",1\n";
    }
  }
}

MarkerCloud ParseMarkerLine(const std::string& line) {
  MarkerCloud cloud;
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ParseError("marker line must be an object");
    cloud.timestamp = j.at("t").get<double>();
    const auto& markers = j.at("markers");
    if (!markers.is_array()) throw ParseError("'markers' must be an array");
    const nlohmann::json ids = j.value("ids", nlohmann::json::array());
    for (std::size_t i = 0; i < markers.size(); ++i) {
      const auto& m = markers[i];
      Vec3 p;
      int id = i < ids.size() ? ids[i].get<int>() : static_cast<int>(i);
      if (m.is_array()) {
        if (m.size() != 3) throw ParseError("marker must have 3 coordinates");
        p = Vec3(m[0].get<double>(), m[1].get<double>(), m[2].get<double>());
      } else {
        if (!m.value("visible", true)) continue;
        p = Vec3(m.at("x").get<double>(), m.at("y").get<double>(),
                 m.at("z").get<double>());
        id = m.value("id", id);
      }
      if (!p.allFinite()) throw ParseError("non-finite marker");
      cloud.points.push_back(p);
      cloud.ids.push_back(id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("marker line: ") + e.what());
  }
  return cloud;
}

std::vector<FitRecord> MakeFitRecords(const std::vector<MarkerCloud>& frames,
                                      const std::vector<SphereFit>& fits) {
  if (frames.size() != fits.size()) {
    throw ContractViolation("frames and fits differ in length");
  }
  std::vector<FitRecord> out;
  std::optional<std::size_t> last_valid;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    FitRecord r{frames[i].timestamp, fits[i], std::nullopt};
    if (fits[i].valid) {
      if (last_valid) {
        const double dt = frames[i].timestamp - frames[*last_valid].timestamp;
        if (dt > 0.0) {
          r.velocity = (fits[i].center - fits[*last_valid].center) / dt;
        }
      }
      last_valid = i;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void WriteFitCsv(const std::vector<FitRecord>& records,
                 const std::vector<MarkerCloud>& frames, std::ostream& out,
                 const std::vector<Vec3>* truth) {
  out << "timestamp,valid,x,y,z,inliers,visible,rms,vx,vy,vz";
  if (truth != nullptr) out << ",true_x,true_y,true_z,error";
  out << "\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FitRecord& r = records[i];
    out << Num(r.timestamp) << "," << (r.fit.valid ? 1 : 0) << ","
        << Num(r.fit.center.x()) << "," << Num(r.fit.center.y()) << ","
        << Num(r.fit.center.z()) << "," << r.fit.inliers.size() << ","
        << (i < frames.size() ? frames[i].visible_count() : 0) << ","
        << Num(r.fit.rms_residual);
    for (int k = 0; k < 3; ++k) {
      out << "," << (r.velocity ? Num((*r.velocity)[k]) : std::string());
    }
    if (truth != nullptr) {
      const Vec3& t = (*truth)[i];
      out << "," << Num(t.x()) << "," << Num(t.y()) << "," << Num(t.z()) << ","
          << (r.fit.valid ? Num((r.fit.center - t).norm()) : std::string());
    }
    out << "\n";
  }
}

// ---------------- feeds ----------------

MocapFeed::MocapFeed(MocapOptions mocap, RansacOptions ransac,
                     bool extrapolate)
    : mocap_(mocap), ransac_(ransac), extrapolate_(extrapolate) {
  CheckOptions(ransac_);
}

void MocapFeed::Observe(const SystemState& truth) {
  const double t = truth.sim_time;
  const Vec3& p = truth.ball_position;
  const double rate = mocap_.options().rate;
  std::optional<std::pair<MarkerCloud, Vec3>> newest;
  uint64_t newest_index = 0;
  for (;;) {
    const double tf = static_cast<double>(next_frame_) / rate;
    if (tf > t + 1e-9) break;
    Vec3 center = p;
    if (previous_truth_ && previous_truth_->first < t) {
      const double a =
          std::clamp((tf - previous_truth_->first) / (t - previous_truth_->first),
                     0.0, 1.0);
      center = (1.0 - a) * previous_truth_->second + a * p;
    }
    newest = std::make_pair(mocap_.Frame(next_frame_, tf, center), center);
    newest_index = next_frame_;
    ++next_frame_;
    ++frames_emitted_;
  }
  previous_truth_ = std::make_pair(t, p);
  if (!newest) return;  // nothing due; the planner sees a stale tick

  const SphereFit fit = RansacSphereCenter(newest->first, ransac_, newest_index);
  ++frames_fitted_;
  if (!fit.valid) {
    ++invalid_fits_;
    return;
  }
  errors_.push_back((fit.center - newest->second).norm());
  const double stamp = newest->first.timestamp;
  std::optional<Vec3> velocity;
  if (last_fit_ && stamp > last_fit_->first) {
    velocity = (fit.center - last_fit_->second) / (stamp - last_fit_->first);
  }
  last_fit_ = std::make_pair(stamp, fit.center);
  if (extrapolate_ && velocity) {
    channel().Publish({t, fit.center + (t - stamp) * *velocity, velocity});
  } else {
    channel().Publish({stamp, fit.center, velocity});
  }
}

SocketMarkerFeed::SocketMarkerFeed(std::string host, int port,
                                   RansacOptions ransac)
    : host_(std::move(host)), port_(port), ransac_(ransac) {
  CheckOptions(ransac_);
  if (port_ <= 0 || port_ > 65535) throw ConfigError("bad marker port");
}

SocketMarkerFeed::~SocketMarkerFeed() { Stop(); }

void SocketMarkerFeed::Start() {
  if (fd_ >= 0) return;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = getaddrinfo(host_.c_str(), std::to_string(port_).c_str(),
                             &hints, &res);
  if (rc != 0) {
    throw TransportError("marker stream: " + std::string(gai_strerror(rc)));
  }
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    const int fd = socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    close(fd);
  }
  freeaddrinfo(res);
  if (fd_ < 0) {
    throw TransportError("marker stream: cannot connect to " + host_ + ":" +
                         std::to_string(port_));
  }
  stop_ = false;
  reader_ = std::thread([this] { ReadLoop(); });
}

void SocketMarkerFeed::Stop() {
  stop_ = true;
  if (fd_ >= 0) shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  if (fd_ >= 0) {
    close(fd_);
    fd_ = -1;
  }
}

void SocketMarkerFeed::ReadLoop() {
  std::string buffer;
  char chunk[4096];
  std::optional<std::pair<double, Vec3>> last;
  uint64_t index = 0;
  while (!stop_) {
    const ssize_t got = recv(fd_, chunk, sizeof(chunk), 0);
    if (got <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(got));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      MarkerCloud cloud;
      try {
        cloud = ParseMarkerLine(line);
      } catch (const ParseError&) {
        ++bad_lines_;
        continue;
      }
      ++frames_received_;
      FitRecord r{cloud.timestamp, RansacSphereCenter(cloud, ransac_, index++),
                  std::nullopt};
      if (r.fit.valid) {
        if (last && cloud.timestamp > last->first) {
          r.velocity = (r.fit.center - last->second) / (cloud.timestamp - last->first);
        }
        last = std::make_pair(cloud.timestamp, r.fit.center);
        channel().Publish({cloud.timestamp, r.fit.center, r.velocity});
      }
      if (on_fit) on_fit(r);
    }
  }
}

}  // namespace dexmpc
