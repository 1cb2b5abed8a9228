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

// dexmpc command line: run, tune-grid, adapt, estimate, bench, plot.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "dexmpc/adaptation.h"
#include "dexmpc/errors.h"
#include "dexmpc/estimation.h"
#include "dexmpc/render.h"
#include "dexmpc/task.h"
#include "dexmpc/trajectory.h"
#include "dexmpc/tuner.h"

namespace fs = std::filesystem;
using namespace dexmpc;  // NOLINT

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitTransport = 4;

void WriteJson(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

nlohmann::json Manifest(const std::string& command, const TaskConfig& task) {
  return {{"command", command},
          {"task", task.source_path},
          {"task_hash", task.content_hash},
          {"task_name", task.name}};
}

Vec3 ParseAxis(const std::string& text) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> v;
  while (std::getline(ss, part, ',')) {
    try {
      v.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ConfigError("--axis wants three comma-separated numbers");
    }
  }
  if (v.size() != 3 || Vec3(v[0], v[1], v[2]).norm() == 0.0) {
    throw ConfigError("--axis wants three comma-separated numbers, not all 0");
  }
  return Vec3(v[0], v[1], v[2]);
}

double Percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  // nearest rank
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// ---------------- run ----------------

struct RunArgs {
  std::string task;
  double duration = 0.0;
  std::vector<uint64_t> seeds;
  int workers = 1;
  std::string out;
};

int CmdRun(const RunArgs& a) {
  const TaskConfig task = LoadTask(a.task);
  const fs::path out = fs::path(a.out.empty() ? task.output_dir : a.out);
  fs::create_directories(out);
  const auto seeds = a.seeds.empty() ? task.seeds : a.seeds;
  nlohmann::json summary = nlohmann::json::array();
  for (uint64_t seed : seeds) {
    const EpisodeOutcome r =
        RunTaskEpisode(task, seed, nullptr, a.duration, a.workers);
    const fs::path dir =
        seeds.size() == 1 ? out : out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    WriteTrajectoryCsv(r.log, (dir / "trajectory.csv").string());
    WriteTimingCsv(r.log, (dir / "timing.csv").string());
    WriteJson(dir / "metrics.json", ToJson(r.metrics));
    nlohmann::json m = Manifest("run", task);
    m["seed"] = seed;
    m["duration"] = a.duration > 0.0 ? a.duration : task.duration;
    m["workers"] = a.workers;
    WriteJson(dir / "manifest.json", m);
    nlohmann::json row = ToJson(r.metrics);
    row["seed"] = seed;
    summary.push_back(row);
    std::cout << row.dump() << "\n";
  }
  if (seeds.size() > 1) WriteJson(out / "summary.json", summary);
  return kExitOk;
}

// ---------------- tune-grid ----------------

struct GridArgs {
  std::string grid;
  double duration = 0.0;
  std::vector<uint64_t> seeds;
  int workers = 0;  // combinations in flight; 0 = grid file
  std::string out;
};

int CmdTuneGrid(const GridArgs& a) {
  GridSpec grid = LoadGridSpec(a.grid);
  const TaskConfig task = LoadTask(grid.task_path);
  if (a.duration > 0.0) grid.duration = a.duration;
  if (!a.seeds.empty()) grid.seeds = a.seeds;
  if (a.workers > 0) grid.workers = a.workers;
  if (!grid.score) grid.score = task.score;
  if (grid.seeds.empty()) grid.seeds = task.seeds;
  const fs::path out = a.out.empty() ? fs::path(grid.output_dir) : fs::path(a.out);
  fs::create_directories(out);

  GridRunOptions opts;
  opts.journal_path = (out / "journal.jsonl").string();
  const std::size_t total = grid.num_combinations();
  std::size_t done = 0;
  opts.on_row = [&](const GridRow& row) {
    ++done;
    std::cerr << "[" << done << "/" << total << "] row " << row.index
              << " score " << row.score << "\n";
  };
  const GridResult r = RunGrid(grid, task.cost, TaskRunner(task, grid.duration),
                               opts);
  WriteGridCsv(r, (out / "grid.csv").string());
  WriteJson(out / "grid.json", ToJson(r));
  nlohmann::json m = Manifest("tune-grid", task);
  m["grid"] = fs::path(a.grid).lexically_normal().string();
  m["grid_hash"] = GitBlobHash(ReadFile(a.grid));
  m["duration"] = grid.duration;
  m["seeds"] = grid.seeds;
  m["rows"] = r.rows.size();
  WriteJson(out / "manifest.json", m);

  nlohmann::json best = {{"row", r.best}, {"score", r.rows[r.best].score}};
  const auto values = r.best_values();
  for (std::size_t k = 0; k < r.labels.size(); ++k) best[r.labels[k]] = values[k];
  std::cout << best.dump() << "\n";
  return kExitOk;
}

// ---------------- adapt ----------------

struct AdaptArgs {
  std::string session;
  std::string endpoint;
  double frame_rate = 0.0;
  int workers = 0;
  std::string out;
};

int CmdAdapt(const AdaptArgs& a) {
  const nlohmann::json file = ReadJsonFile(a.session);
  const std::string base = fs::path(a.session).parent_path().string();
  SessionConfig config = SessionConfigFromJson(file, base.empty() ? "." : base);
  config.source_path = a.session;
  if (a.frame_rate > 0.0) config.frame_rate = a.frame_rate;
  if (a.workers > 0) config.workers = a.workers;
  const TaskConfig task = LoadTask(config.task_path);
  std::unique_ptr<Critic> critic = MakeCritic(config, task.cost, a.endpoint);

  std::optional<SessionState> restored;
  if (file.contains("state")) restored = SessionStateFromJson(file["state"]);

  std::unique_ptr<SessionClock> clock;
  if (config.test_mode) {
    clock = std::make_unique<VirtualClock>(restored ? restored->clock : 0.0);
  } else {
    clock = std::make_unique<SteadyClock>();
  }
  std::map<std::string, std::string> prompts;
  if (!config.prompts_dir.empty()) prompts = LoadPrompts(config.prompts_dir);

  AdaptationSession session(config, task, *critic, *clock, prompts);
  if (restored) session.Restore(*restored);
  const SessionReport report = session.Run();

  const fs::path out =
      a.out.empty() ? fs::path(task.output_dir) / "adapt" : fs::path(a.out);
  fs::create_directories(out);
  // the saved session keeps paths valid from its new location
  nlohmann::json saved = session.SessionJson(file);
  saved["task"] = fs::absolute(config.task_path).lexically_normal().string();
  if (!config.prompts_dir.empty()) {
    saved["prompts_dir"] =
        fs::absolute(config.prompts_dir).lexically_normal().string();
  }
  WriteJson(out / "session.json", saved);
  nlohmann::json rep = report.ToJson();
  rep["manifest"] = Manifest("adapt", task);
  rep["manifest"]["session"] = a.session;
  WriteJson(out / "report.json", rep);

  const SessionState& s = report.state;
  std::cout << nlohmann::json{{"status", s.status},
                              {"stop_reason", s.stop_reason},
                              {"iterations", s.history.size()},
                              {"best", report.best ? nlohmann::json(*report.best)
                                                   : nlohmann::json()}}
                   .dump()
            << "\n";
  if (s.status == "suspended") {
    std::cerr << "critic unreachable: " << s.error << "\nresume with: dexmpc adapt --session "
              << (out / "session.json").string() << "\n";
    return kExitTransport;
  }
  return kExitOk;
}

// ---------------- estimate ----------------

struct EstimateArgs {
  std::string markers;
  std::string socket;
  long frames = 0;
  std::string synthesize_from;
  double rate = 100.0;
  double noise = 0.0;
  double occlusion = 0.0;
  uint64_t seed = 0;
  int iterations = 64;
  double tolerance = 0.003;
  double radius = kBallRadius;
  int workers = 1;
  std::string out = "out/estimate";
};

int CmdEstimate(const EstimateArgs& a) {
  RansacOptions ro;
  ro.iterations = a.iterations;
  ro.inlier_tol = a.tolerance;
  ro.radius = a.radius;
  ro.seed = a.seed;
  const fs::path out(a.out);
  fs::create_directories(out);

  const int sources = !a.markers.empty() + !a.socket.empty() +
                      !a.synthesize_from.empty();
  if (sources != 1) {
    throw ConfigError(
        "give exactly one of --markers, --socket, --synthesize-from");
  }

  std::vector<MarkerCloud> frames;
  std::optional<std::vector<Vec3>> truth;
  if (!a.markers.empty()) {
    frames = ReadMarkerCsv(a.markers);
  } else if (!a.synthesize_from.empty()) {
    const TrajectoryLog log = ReadTrajectoryCsv(a.synthesize_from);
    if (log.ticks.empty()) throw ConfigError("trajectory has no ticks");
    auto center = [&](double t) {
      const auto& ticks = log.ticks;
      auto it = std::lower_bound(
          ticks.begin(), ticks.end(), t,
          [](const TickRecord& r, double v) { return r.state.sim_time < v; });
      if (it == ticks.begin()) return ticks.front().state.ball_position;
      if (it == ticks.end()) return ticks.back().state.ball_position;
      const auto& hi = it->state;
      const auto& lo = std::prev(it)->state;
      const double w = (t - lo.sim_time) / (hi.sim_time - lo.sim_time);
      return Vec3((1.0 - w) * lo.ball_position + w * hi.ball_position);
    };
    MocapOptions mo;
    mo.rate = a.rate;
    mo.noise_std = a.noise;
    mo.occlusion_rate = a.occlusion;
    mo.seed = a.seed;
    const double t0 = log.ticks.front().state.sim_time;
    const double t1 = log.ticks.back().state.sim_time;
    frames = SyntheticStream([&](double t) { return center(t0 + t); }, t1 - t0, mo);
    truth.emplace();
    for (auto& f : frames) {
      truth->push_back(center(t0 + f.timestamp));
      f.timestamp += t0;
    }
    std::ofstream m(out / "markers.csv");
    WriteMarkerCsv(frames, m);
  } else {
    const auto colon = a.socket.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--socket wants host:port");
    if (a.frames <= 0) throw ConfigError("--socket needs --frames > 0");
    int port = 0;
    try {
      port = std::stoi(a.socket.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("--socket wants host:port");
    }
    SocketMarkerFeed feed(a.socket.substr(0, colon), port, ro);
    std::mutex mu;
    std::vector<FitRecord> records;
    feed.on_fit = [&](const FitRecord& r) {
      std::lock_guard<std::mutex> lock(mu);
      records.push_back(r);
    };
    feed.Start();
    while (feed.frames_received() < a.frames) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      std::lock_guard<std::mutex> lock(mu);
      if (records.size() >= static_cast<std::size_t>(a.frames)) break;
    }
    feed.Stop();
    std::ofstream f(out / "fits.csv");
    WriteFitCsv(records, {}, f);
    std::cout << nlohmann::json{{"frames", records.size()}}.dump() << "\n";
    return kExitOk;
  }

  const auto fits = FitFrames(frames, ro, a.workers);
  const auto records = MakeFitRecords(frames, fits);
  {
    std::ofstream f(out / "fits.csv");
    WriteFitCsv(records, frames, f, truth ? &*truth : nullptr);
  }
  nlohmann::json summary = {{"frames", frames.size()}};
  long valid = 0;
  std::vector<double> err;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (!fits[i].valid) continue;
    ++valid;
    if (truth) err.push_back((fits[i].center - (*truth)[i]).norm());
  }
  summary["valid"] = valid;
  if (!err.empty()) {
    summary["median_error"] = Percentile(err, 0.5);
    summary["p99_error"] = Percentile(err, 0.99);
    summary["max_error"] = *std::max_element(err.begin(), err.end());
  }
  summary["ransac"] = {{"iterations", ro.iterations},
                       {"inlier_tol", ro.inlier_tol},
                       {"radius", ro.radius},
                       {"seed", ro.seed}};
  WriteJson(out / "estimate.json", summary);
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---------------- bench ----------------

struct BenchArgs {
  std::string task;
  long ticks = 10000;
  int workers = 1;
  int candidates = 0;
  uint64_t seed = 0;
  std::string out;
};

int CmdBench(const BenchArgs& a) {
  TaskConfig task = LoadTask(a.task);
  if (a.candidates > 0) task.planner_json["candidates"] = a.candidates;
  const TaskInstance inst = Instantiate(task, a.seed, a.workers);
  const double tick_dt = inst.planner.tick_dt();
  const double budget_ms = 1000.0 * tick_dt;

  const auto start = std::chrono::steady_clock::now();
  const EpisodeOutcome r =
      RunTaskEpisode(task, a.seed, nullptr, a.ticks * tick_dt, a.workers);
  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  std::vector<double> ms;
  long late = 0;
  double plan_ms = 0.0;
  for (const auto& t : r.log.ticks) {
    ms.push_back(t.wall_time_ms);
    plan_ms += t.wall_time_ms;
    late += t.wall_time_ms > budget_ms;
  }
  const double rollouts =
      static_cast<double>(ms.size()) * inst.planner.num_candidates;
  nlohmann::json rep = Manifest("bench", task);
  rep["seed"] = a.seed;
  rep["ticks"] = ms.size();
  rep["workers"] = a.workers;
  rep["candidates"] = inst.planner.num_candidates;
  rep["horizon_steps"] = inst.planner.horizon_steps;
  rep["hardware_threads"] = std::thread::hardware_concurrency();
  rep["budget_ms"] = budget_ms;
  rep["p50_ms"] = Percentile(ms, 0.50);
  rep["p95_ms"] = Percentile(ms, 0.95);
  rep["max_ms"] = ms.empty() ? 0.0 : *std::max_element(ms.begin(), ms.end());
  rep["mean_ms"] = ms.empty() ? 0.0 : plan_ms / ms.size();
  rep["late_fraction"] = ms.empty() ? 0.0 : static_cast<double>(late) / ms.size();
  rep["rollouts_per_s"] = plan_ms > 0.0 ? rollouts / (plan_ms / 1000.0) : 0.0;
  rep["total_wall_s"] = total_s;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    WriteJson(fs::path(a.out) / "bench.json", rep);
  }
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

// ---------------- plot ----------------

struct PlotArgs {
  std::string log;
  std::string axis = "0,-1,0";
  std::string out;
  std::string title;
};

int CmdPlot(const PlotArgs& a) {
  const TrajectoryLog log = ReadTrajectoryCsv(a.log);
  const std::string svg =
      TracesToSvg(TrajectorySeries(log, ParseAxis(a.axis)),
                  a.title.empty() ? log.model + " (" + a.log + ")" : a.title);
  const fs::path out = a.out.empty()
                           ? fs::path(a.log).replace_extension(".svg")
                           : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw ConfigError("cannot write " + out.string());
  f << svg;
  std::cout << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dexmpc: predictive sampling MPC toolkit"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run one episode per seed");
  run_cmd->add_option("--task", run.task, "task file")->required();
  run_cmd->add_option("--duration", run.duration, "seconds (default: task)");
  run_cmd->add_option("--seed", run.seeds, "seed(s) (default: task seeds)");
  run_cmd->add_option("--workers", run.workers, "rollout threads")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "output directory");

  GridArgs grid;
  auto* grid_cmd =
      app.add_subcommand("tune-grid", "exhaustive weight sweep (resumable)");
  grid_cmd->add_option("--grid", grid.grid, "grid file")->required();
  grid_cmd->add_option("--duration", grid.duration, "seconds per episode");
  grid_cmd->add_option("--seed", grid.seeds, "seed(s) per combination");
  grid_cmd->add_option("--workers", grid.workers, "combinations in flight")
      ->check(CLI::PositiveNumber);
  grid_cmd->add_option("--out", grid.out, "output directory");

  AdaptArgs adapt;
  auto* adapt_cmd =
      app.add_subcommand("adapt", "critic-driven weight adaptation session");
  adapt_cmd->add_option("--session", adapt.session, "session file")->required();
  adapt_cmd->add_option("--critic-endpoint", adapt.endpoint,
                        "remote critic URL (overrides session and env)");
  adapt_cmd->add_option("--frame-rate", adapt.frame_rate,
                        "frames per second shown to the critic")
      ->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--workers", adapt.workers, "rollout threads")
      ->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--out", adapt.out, "output directory");

  EstimateArgs est;
  auto* est_cmd =
      app.add_subcommand("estimate", "ball centers from marker frames");
  est_cmd->add_option("--markers", est.markers, "marker CSV");
  est_cmd->add_option("--socket", est.socket, "host:port of a JSON-lines stream");
  est_cmd->add_option("--frames", est.frames, "frames to read from --socket");
  est_cmd->add_option("--synthesize-from", est.synthesize_from,
                      "trajectory CSV to generate synthetic markers from");
  est_cmd->add_option("--rate", est.rate, "synthetic frame rate [Hz]");
  est_cmd->add_option("--noise", est.noise, "synthetic noise std [m]");
  est_cmd->add_option("--occlusion", est.occlusion, "synthetic occlusion rate");
  est_cmd->add_option("--seed", est.seed, "random seed");
  est_cmd->add_option("--iterations", est.iterations, "RANSAC iterations");
  est_cmd->add_option("--tolerance", est.tolerance, "inlier tolerance [m]");
  est_cmd->add_option("--radius", est.radius, "ball radius [m]");
  est_cmd->add_option("--workers", est.workers, "fitting threads")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--out", est.out, "output directory");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "planner tick timing");
  bench_cmd->add_option("--task", bench.task, "task file")->required();
  bench_cmd->add_option("--ticks", bench.ticks, "ticks to time")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", bench.workers, "rollout threads")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--candidates", bench.candidates,
                        "override the task's candidate count");
  bench_cmd->add_option("--seed", bench.seed, "seed");
  bench_cmd->add_option("--out", bench.out, "directory for bench.json");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "SVG traces of a trajectory CSV");
  plot_cmd->add_option("--log", plot.log, "trajectory CSV")->required();
  plot_cmd->add_option("--axis", plot.axis, "rotation axis, e.g. 0,-1,0");
  plot_cmd->add_option("--title", plot.title, "plot title");
  plot_cmd->add_option("--out", plot.out, "SVG path (default: next to the log)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return CmdRun(run);
    if (*grid_cmd) return CmdTuneGrid(grid);
    if (*adapt_cmd) return CmdAdapt(adapt);
    if (*est_cmd) return CmdEstimate(est);
    if (*bench_cmd) return CmdBench(bench);
    if (*plot_cmd) return CmdPlot(plot);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const DegenerateEpisode& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
