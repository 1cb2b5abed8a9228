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

// Ball center from reflective markers: RANSAC sphere fitting with a known
// radius, a synthetic motion-capture source and marker file/socket ingest.

#ifndef DEXMPC_ESTIMATION_H_
#define DEXMPC_ESTIMATION_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dexmpc/dynamics.h"
#include "dexmpc/episode.h"

namespace dexmpc {

inline constexpr int kNumMarkers = 28;

// One motion-capture frame: the visible markers only.
struct MarkerCloud {
  double timestamp = 0.0;
  std::vector<Vec3> points;
  std::vector<int> ids;  // marker ids, parallel to points; may be empty
  int visible_count() const { return static_cast<int>(points.size()); }
};

struct SphereFit {
  Vec3 center = Vec3::Zero();
  std::vector<int> inliers;  // indices into the cloud's points
  double rms_residual = 0.0;
  bool valid = false;
};

struct RansacOptions {
  double radius = kBallRadius;
  int iterations = 64;
  double inlier_tol = 0.003;
  int min_inliers = 6;
  double radius_tolerance = 0.2;  // relative, for the 4-point hypotheses
  int refine_iterations = 10;
  uint64_t seed = 0;
};

// Sphere through four points; nullopt when they are (nearly) coplanar.
std::optional<std::pair<Vec3, double>> SphereThroughPoints(const Vec3& a,
                                                           const Vec3& b,
                                                           const Vec3& c,
                                                           const Vec3& d);

// `stream` separates the random draws of different frames fitted with the
// same seed.
SphereFit RansacSphereCenter(const MarkerCloud& cloud,
                             const RansacOptions& options,
                             uint64_t stream = 0);

// fits every frame; frame i uses stream i
std::vector<SphereFit> FitFrames(const std::vector<MarkerCloud>& frames,
                                 const RansacOptions& options,
                                 int num_workers = 1);

// n unit vectors spread evenly on the sphere (golden-angle spiral)
std::vector<Vec3> FibonacciDirections(int n = kNumMarkers);

struct MocapOptions {
  double rate = 100.0;  // Hz
  double occlusion_rate = 0.0;
  double noise_std = 0.0;  // m, per coordinate
  double radius = kBallRadius;
  uint64_t seed = 0;
};

// Markers rigidly attached to the ball; frame k draws its occlusion and
// noise from its own counter stream.
class SyntheticMocap {
 public:
  explicit SyntheticMocap(MocapOptions options);
  MarkerCloud Frame(uint64_t index, double timestamp, const Vec3& center,
                    const Quat& orientation = Quat::Identity()) const;
  const MocapOptions& options() const { return options_; }

 private:
  MocapOptions options_;
  std::vector<Vec3> directions_;
};

// Clouds at options.rate over [0, duration] of a center trajectory.
std::vector<MarkerCloud> SyntheticStream(
    const std::function<Vec3(double)>& center, double duration,
    const MocapOptions& options);

// ---- ingest ----

// Rows "timestamp,marker_id,x,y,z,visible" (header optional); consecutive
// rows with equal timestamps form one frame, invisible rows are dropped.
std::vector<MarkerCloud> ReadMarkerCsv(std::istream& in);
std::vector<MarkerCloud> ReadMarkerCsv(const std::string& path);
void WriteMarkerCsv(const std::vector<MarkerCloud>& frames, std::ostream& out);

// One frame per line:
//   {"t": 1.25, "markers": [[x, y, z], ...], "ids": [...]}
// Marker entries may also be objects {"id", "x", "y", "z", "visible"}.
MarkerCloud ParseMarkerLine(const std::string& line);

struct FitRecord {
  double timestamp = 0.0;
  SphereFit fit;
  std::optional<Vec3> velocity;  // finite difference of consecutive fits
};
// finite-difference velocities between consecutive valid fits
std::vector<FitRecord> MakeFitRecords(const std::vector<MarkerCloud>& frames,
                                      const std::vector<SphereFit>& fits);
// timestamp,valid,x,y,z,inliers,visible,rms,vx,vy,vz (+ truth error columns
// when `truth` is given)
void WriteFitCsv(const std::vector<FitRecord>& records,
                 const std::vector<MarkerCloud>& frames, std::ostream& out,
                 const std::vector<Vec3>* truth = nullptr);

// ---- planner feeds ----

// Simulation-driven feed: each Observe emits every motion-capture frame due
// since the previous call (ball positions interpolated between ticks), fits
// the newest one and publishes it. Velocity is the finite difference of the
// two newest valid fits. With `extrapolate` the published position is
// carried forward from the frame time to the tick time along that velocity.
class MocapFeed final : public StateFeed {
 public:
  MocapFeed(MocapOptions mocap, RansacOptions ransac, bool extrapolate = true);
  void Observe(const SystemState& truth) override;

  long frames_emitted() const { return frames_emitted_; }
  long frames_fitted() const { return frames_fitted_; }
  long invalid_fits() const { return invalid_fits_; }
  // |fit - true center| of every published fit
  const std::vector<double>& errors() const { return errors_; }

 private:
  SyntheticMocap mocap_;
  RansacOptions ransac_;
  bool extrapolate_;
  std::optional<std::pair<double, Vec3>> previous_truth_;
  uint64_t next_frame_ = 0;
  std::optional<std::pair<double, Vec3>> last_fit_;
  long frames_emitted_ = 0;
  long frames_fitted_ = 0;
  long invalid_fits_ = 0;
  std::vector<double> errors_;
};

// Reads line-delimited JSON marker frames from a TCP server on its own
// thread, fits each one and publishes it; the planner reads the newest fit
// without blocking.
class SocketMarkerFeed final : public StateFeed {
 public:
  SocketMarkerFeed(std::string host, int port, RansacOptions ransac);
  ~SocketMarkerFeed() override;
  // connects and starts the reader thread; throws TransportError
  void Start();
  void Stop();
  long frames_received() const { return frames_received_.load(); }
  long bad_lines() const { return bad_lines_.load(); }
  // invoked on the reader thread after every fitted frame
  std::function<void(const FitRecord&)> on_fit;

 private:
  void ReadLoop();

  std::string host_;
  int port_;
  RansacOptions ransac_;
  int fd_ = -1;
  std::thread reader_;
  std::atomic<bool> stop_{false};
  std::atomic<long> frames_received_{0};
  std::atomic<long> bad_lines_{0};
};

}  // namespace dexmpc

#endif  // DEXMPC_ESTIMATION_H_
