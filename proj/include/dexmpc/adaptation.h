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

// Critic-driven weight adaptation: propose weights, run them, show the critic
// what happened, install its revision, repeat.

#ifndef DEXMPC_ADAPTATION_H_
#define DEXMPC_ADAPTATION_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dexmpc/cost.h"
#include "dexmpc/metrics.h"
#include "dexmpc/task.h"

namespace dexmpc {

// ---- weight blocks ----

// Keys are the terms' weight keys ("w_InHand", ...); a vector weight takes an
// array of the template's length.
struct WeightBlock {
  CostSpec spec;
  bool degenerate = false;  // every weight zero
};

// `text` must contain exactly one ``` fenced block holding a JSON object.
// Unknown keys, wrong shapes and non-numeric values throw ParseError; terms
// the block leaves out get weight zero. References come from the template.
WeightBlock ParseWeightBlock(std::string_view text, const CostSpec& tmpl);
// the spec's weights as a fenced block
std::string FormatWeightBlock(const CostSpec& spec);
// every key of the template with zero weights, as JSON text
std::string WeightTemplate(const CostSpec& tmpl);
nlohmann::json WeightsJson(const CostSpec& spec);

// ---- success criteria ----

// Machine-checkable thresholds; unset bounds are not checked. Empty
// criteria never count as satisfied.
struct SuccessCriteria {
  std::optional<double> min_rot_vel, max_rot_vel;
  std::optional<double> min_flips_per_min, max_drops_per_min;
  std::optional<double> min_flip_height, max_flip_height;
  std::optional<double> min_catch_success;

  bool empty() const;
  bool Satisfied(const EpisodeMetrics& m) const;
};
SuccessCriteria CriteriaFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const SuccessCriteria& c);

// ---- feedback ----

struct FeedbackArtifact {
  EpisodeMetrics metrics;
  double window_start = 0.0;  // s, sim time
  double window_end = 0.0;
  std::vector<FrameDigest> frames;
  std::string transcript;
};

// Frames of the trailing `window` seconds at `frame_rate` frames/s, plus a
// text table of the same ticks.
FeedbackArtifact MakeFeedback(const TrajectoryLog& log,
                              const DynamicsModel& model,
                              const EpisodeMetrics& metrics, double window,
                              double frame_rate);

struct HistoryEntry {
  int iteration = 0;
  CostSpec weights;
  EpisodeMetrics metrics;
  double score = 0.0;
  std::string rationale;      // critic text that produced these weights
  bool degenerate_weights = false;
  bool reflection_failed = false;  // the revision after this run was rejected
};
nlohmann::json ToJson(const HistoryEntry& e);

// ---- critics ----

struct CriticReply {
  std::string text;  // prose with one fenced weight block
  bool done = false;
};

struct StrategyReply {
  std::string text;
  SuccessCriteria criteria;
};

// What the session hands the critic on each call. Prompts are the rendered
// templates; `retry_note` explains why the previous reply was rejected.
struct CriticRequest {
  std::string prompt;
  std::string retry_note;
  const CostSpec* weights = nullptr;
  const std::vector<HistoryEntry>* history = nullptr;
  const FeedbackArtifact* feedback = nullptr;
};

class Critic {
 public:
  virtual ~Critic() = default;
  virtual void Initialize(const std::string& context_prompt,
                          const std::string& weight_template) = 0;
  virtual CriticReply Propose(const CriticRequest& request) = 0;
  virtual StrategyReply Strategy(const CriticRequest& request) = 0;
  virtual CriticReply Reflect(const CriticRequest& request) = 0;
  // for critics with internal progress; persisted with the session
  virtual nlohmann::json SaveState() const { return nullptr; }
  virtual void LoadState(const nlohmann::json& state) { (void)state; }
};

// Replays canned replies in order; the last one of each list repeats.
// Layout:
//   {"proposals": [reply, ...], "reflections": [reply, ...],
//    "criteria": {...}}
// where a reply is {"weights": {...}, "rationale": "...", "done": bool} or
// {"text": "raw critic text", "done": bool}.
class ScriptedCritic final : public Critic {
 public:
  explicit ScriptedCritic(nlohmann::json script);
  void Initialize(const std::string&, const std::string&) override {}
  CriticReply Propose(const CriticRequest& request) override;
  StrategyReply Strategy(const CriticRequest& request) override;
  CriticReply Reflect(const CriticRequest& request) override;
  nlohmann::json SaveState() const override;
  void LoadState(const nlohmann::json& state) override;

 private:
  nlohmann::json script_;
  std::size_t proposals_ = 0;
  std::size_t reflections_ = 0;
};

// Coordinate search over a few weights. Each reflection looks at the best
// run so far and the run after it: a gain keeps the direction, a loss tries
// the opposite direction, then moves on to the next key. Steps multiply
// (or divide) by `factor`. Everything is derived from the history, so the
// critic has no state of its own. Layout:
//   {"start": {"w_Orientation": 2}, "keys": ["w_Orientation", "w_HoldBall"],
//    "factor": 4, "criteria": {...}}
class HillClimbCritic final : public Critic {
 public:
  HillClimbCritic(const CostSpec& tmpl, const nlohmann::json& config);
  void Initialize(const std::string&, const std::string&) override {}
  CriticReply Propose(const CriticRequest& request) override;
  StrategyReply Strategy(const CriticRequest& request) override;
  CriticReply Reflect(const CriticRequest& request) override;

 private:
  struct Key {
    TermKind term;
    int component;  // -1 for scalar weights
    std::string label;
  };
  CostSpec start_;
  std::vector<Key> keys_;
  double factor_ = 4.0;
  SuccessCriteria criteria_;
};

// ---- session clock and rate limiting ----

class SessionClock {
 public:
  virtual ~SessionClock() = default;
  virtual double Now() const = 0;  // seconds
  virtual void Sleep(double seconds) = 0;
  // work that took `seconds` of simulated time
  virtual void Advance(double seconds) { (void)seconds; }
};

// Time passes only through Sleep and Advance.
class VirtualClock final : public SessionClock {
 public:
  explicit VirtualClock(double start = 0.0) : now_(start) {}
  double Now() const override { return now_; }
  void Sleep(double seconds) override { now_ += std::max(0.0, seconds); }
  void Advance(double seconds) override { now_ += std::max(0.0, seconds); }

 private:
  double now_;
};

class SteadyClock final : public SessionClock {
 public:
  SteadyClock();
  double Now() const override;
  void Sleep(double seconds) override;

 private:
  double origin_;
};

// Spaces consecutive Acquire calls at least `interval` apart on a session
// clock. The session acquires before every critic call.
class RateLimiter {
 public:
  RateLimiter(SessionClock& clock, double interval)
      : clock_(clock), interval_(interval) {}
  void Acquire();
  double last() const { return last_.value_or(0.0); }

 private:
  SessionClock& clock_;
  double interval_;
  std::optional<double> last_;
};

// Posts each phase to an HTTP endpoint as JSON
//   {"phase", "role_context", "template", "prompt", "retry_note", "weights",
//    "history", "metrics", "transcript", "frames": [base64 SVG, ...]}
// and expects {"text": "...", "done": bool, "criteria": {...}} back.
class RemoteCritic final : public Critic {
 public:
  struct Options {
    std::string endpoint;  // http(s)://host[:port][/path]
    std::string token;     // sent as a bearer token when set
    double timeout = 120.0;
    std::size_t max_payload_bytes = 4u << 20;
  };
  explicit RemoteCritic(Options options);
  void Initialize(const std::string& context_prompt,
                  const std::string& weight_template) override;
  CriticReply Propose(const CriticRequest& request) override;
  StrategyReply Strategy(const CriticRequest& request) override;
  CriticReply Reflect(const CriticRequest& request) override;
  nlohmann::json SaveState() const override;
  void LoadState(const nlohmann::json& state) override;

  // body of a request, frames thinned until it fits the payload limit
  nlohmann::json Payload(const std::string& phase,
                         const CriticRequest& request) const;

 private:
  nlohmann::json Call(const std::string& phase, const CriticRequest& request);

  Options options_;
  std::string context_;
  std::string template_;
};

std::string Base64Encode(std::string_view bytes);

// ---- session ----

struct SessionTimings {
  double context = 15.0;     // nominal critic latencies, reported only
  double strategy = 15.0;
  double reflection = 15.0;
  double execution = 30.0;   // s of closed loop per iteration
  double recording = 10.0;   // trailing window shown to the critic
  double sleep = 60.0;       // between iterations and between critic calls
};

// A session file: configuration plus, once started, its persisted state.
//   {"task": "path relative to the session file", "description": "...",
//    "max_iterations": 4, "seed": 0, "workers": 1, "frame_rate": 2,
//    "test_mode": false, "prompts_dir": "...", "timings": {...},
//    "critic": {"kind": "scripted" | "hill_climb" | "remote", ...},
//    "state": {...}}
struct SessionConfig {
  std::string source_path;
  std::string task_path;
  std::string description;
  int max_iterations = 4;
  uint64_t seed = 0;
  int workers = 1;
  double frame_rate = 2.0;
  bool test_mode = false;  // virtual clock, no real sleeps
  std::string prompts_dir;
  SessionTimings timings;
  nlohmann::json critic = nlohmann::json::object();
  int max_retries = 3;
};
SessionConfig SessionConfigFromJson(const nlohmann::json& j,
                                    const std::string& base_dir);

// Everything needed to continue an interrupted session.
struct SessionState {
  enum class Phase { kStart, kExecute, kReflect, kFinished };
  Phase phase = Phase::kStart;
  std::string status = "running";  // running | suspended | finished
  std::string stop_reason;  // critic_done | criteria_met | budget | ...
  CostSpec spec;            // weights installed for the next execution
  bool spec_degenerate = false;
  std::string spec_rationale;
  SuccessCriteria criteria;
  std::string criteria_text;
  std::vector<HistoryEntry> history;
  int retries = 0;
  int failed_proposals = 0;
  double clock = 0.0;
  std::vector<double> critic_call_times;
  nlohmann::json critic_state;
  std::string error;
};
nlohmann::json ToJson(const SessionState& s);
SessionState SessionStateFromJson(const nlohmann::json& j);

struct SessionReport {
  SessionState state;
  std::optional<std::size_t> best;  // index into history
  std::vector<double> best_so_far;  // per iteration
  nlohmann::json ToJson() const;
};

class AdaptationSession {
 public:
  // `prompts` maps template names (context, weight_generation,
  // evaluation_strategy, reflection) to text; missing ones use built-ins.
  AdaptationSession(SessionConfig config, TaskConfig task, Critic& critic,
                    SessionClock& clock,
                    std::map<std::string, std::string> prompts = {});

  // continue from a persisted state instead of starting fresh
  void Restore(const SessionState& state);

  // Runs until the session finishes or the critic becomes unreachable; a
  // TransportError suspends the session (state().status == "suspended")
  // instead of propagating.
  SessionReport Run();

  const SessionState& state() const { return state_; }
  const SessionConfig& config() const { return config_; }
  // the current session file contents (config + state)
  nlohmann::json SessionJson(const nlohmann::json& original) const;

 private:
  void Start();
  void Execute();
  void ReflectPhase();
  // asks until a reply parses or retries run out; nullopt on failure
  std::optional<std::pair<WeightBlock, CriticReply>> AskForWeights(
      bool reflect, CriticRequest request);
  std::string Render(const std::string& name,
                     const std::map<std::string, std::string>& vars) const;
  std::pair<TrajectoryLog, EpisodeMetrics> RunWeights(const CostSpec& spec);
  void BeforeCall();

  SessionConfig config_;
  TaskConfig task_;
  Critic& critic_;
  SessionClock& clock_;
  RateLimiter limiter_;
  std::map<std::string, std::string> prompts_;
  std::unique_ptr<DynamicsModel> model_;
  SessionState state_;
  std::optional<FeedbackArtifact> last_feedback_;
};

std::map<std::string, std::string> LoadPrompts(const std::string& dir);

// Builds the critic named in config.critic. Remote critics read the
// endpoint and token from the session, then DEXMPC_CRITIC_ENDPOINT and
// DEXMPC_CRITIC_TOKEN; `endpoint_override` wins when non-empty.
std::unique_ptr<Critic> MakeCritic(const SessionConfig& config,
                                   const CostSpec& tmpl,
                                   const std::string& endpoint_override = "");

}  // namespace dexmpc

#endif  // DEXMPC_ADAPTATION_H_
