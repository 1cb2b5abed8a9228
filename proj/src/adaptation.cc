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

#include "dexmpc/adaptation.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "dexmpc/errors.h"
#include "dexmpc/trajectory.h"
#include "dexmpc/tuner.h"

namespace dexmpc {

namespace fs = std::filesystem;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

nlohmann::json OptionalNumber(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

const char* PhaseName(SessionState::Phase p) {
  switch (p) {
    case SessionState::Phase::kStart: return "start";
    case SessionState::Phase::kExecute: return "execute";
    case SessionState::Phase::kReflect: return "reflect";
    case SessionState::Phase::kFinished: return "finished";
  }
  return "start";
}

SessionState::Phase PhaseFromName(const std::string& s) {
  if (s == "start") return SessionState::Phase::kStart;
  if (s == "execute") return SessionState::Phase::kExecute;
  if (s == "reflect") return SessionState::Phase::kReflect;
  if (s == "finished") return SessionState::Phase::kFinished;
  throw ConfigError("session state: unknown phase '" + s + "'");
}

HistoryEntry HistoryFromJson(const nlohmann::json& j) {
  HistoryEntry e;
  e.iteration = j.at("iteration").get<int>();
  e.weights = CostSpecFromJson(j.at("spec"));
  e.metrics = MetricsFromJson(j.at("metrics"));
  e.score = j.at("score").is_null() ? kNegInf : j["score"].get<double>();
  e.rationale = j.value("rationale", "");
  e.degenerate_weights = j.value("degenerate_weights", false);
  e.reflection_failed = j.value("reflection_failed", false);
  return e;
}

const std::map<std::string, std::string>& BuiltinPrompts() {
  static const std::map<std::string, std::string> kPrompts = {
      {"context",
       "You tune the objective weights of a sampling-based model predictive "
       "controller. Reply with exactly one fenced block holding a JSON object "
       "of weights using these keys:\n{{template}}\n"},
      {"weight_generation",
       "Task: {{task}}\nPropose initial weights as one fenced JSON block.\n"},
      {"evaluation_strategy",
       "Task: {{task}}\nWeights:\n{{weights}}\nState how success will be "
       "judged, with numeric thresholds.\n"},
      {"reflection",
       "Task: {{task}}\nHistory:\n{{history}}\nLatest metrics: {{metrics}}\n"
       "Recording:\n{{transcript}}\nRevise the weights as one fenced JSON "
       "block, or say you are done.\n"}};
  return kPrompts;
}

}  // namespace

// ---------------- weight blocks ----------------

nlohmann::json WeightsJson(const CostSpec& spec) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& t : spec.terms) {
    const std::string key(TermWeightKey(t.kind));
    if (t.vector_weight) {
      j[key] = ToStdVector(t.weight);
    } else {
      j[key] = t.weight[0];
    }
  }
  return j;
}

std::string WeightTemplate(const CostSpec& tmpl) {
  return WeightsJson(ScaleWeights(tmpl, 0.0)).dump(2);
}

std::string FormatWeightBlock(const CostSpec& spec) {
  return "```json\n" + WeightsJson(spec).dump(2) + "\n```";
}

WeightBlock ParseWeightBlock(std::string_view text, const CostSpec& tmpl) {
  std::vector<std::size_t> fences;
  for (std::size_t p = text.find("```"); p != std::string_view::npos;
       p = text.find("```", p + 3)) {
    fences.push_back(p);
  }
  if (fences.size() != 2) {
    throw ParseError("expected exactly one fenced weight block, found " +
                     std::to_string(fences.size() / 2) +
                     (fences.size() % 2 ? " and an unclosed fence" : ""));
  }
  // skip the info string after the opening fence
  std::size_t body = text.find('\n', fences[0]);
  if (body == std::string_view::npos || body > fences[1]) body = fences[0] + 2;
  const std::string_view content =
      Trim(text.substr(body + 1, fences[1] - body - 1));

  WeightBlock out;
  out.spec = ScaleWeights(tmpl, 0.0);
  if (content.empty()) {
    out.degenerate = true;
    return out;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("weight block is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("weight block must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto kind = TermFromWeightKey(key);
    if (!kind) throw ParseError("unknown weight key '" + key + "'");
    CostTerm* term = out.spec.find(*kind);
    if (term == nullptr) {
      throw ParseError("weight key '" + key + "' is not in the template");
    }
    if (term->vector_weight) {
      if (!value.is_array() ||
          static_cast<Eigen::Index>(value.size()) != term->weight.size()) {
        throw ParseError(key + " needs an array of " +
                         std::to_string(term->weight.size()) + " numbers");
      }
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number()) {
          throw ParseError(key + " has a non-numeric component");
        }
        term->weight[i] = value[i].get<double>();
      }
    } else {
      if (!value.is_number()) throw ParseError(key + " must be a number");
      term->weight[0] = value.get<double>();
    }
  }
  out.degenerate = true;
  for (const auto& t : out.spec.terms) {
    if (!t.weight.isZero(0.0)) out.degenerate = false;
  }
  return out;
}

// ---------------- success criteria ----------------

bool SuccessCriteria::empty() const {
  return !min_rot_vel && !max_rot_vel && !min_flips_per_min &&
         !max_drops_per_min && !min_flip_height && !max_flip_height &&
         !min_catch_success;
}

bool SuccessCriteria::Satisfied(const EpisodeMetrics& m) const {
  if (empty()) return false;
  if (min_rot_vel && !(m.mean_rot_vel >= *min_rot_vel)) return false;
  if (max_rot_vel && !(m.mean_rot_vel <= *max_rot_vel)) return false;
  if (min_flips_per_min && !(m.flips_per_min >= *min_flips_per_min)) {
    return false;
  }
  if (max_drops_per_min && !(m.drops_per_min <= *max_drops_per_min)) {
    return false;
  }
  if (min_flip_height && !(m.mean_flip_height >= *min_flip_height)) {
    return false;
  }
  if (max_flip_height && !(m.mean_flip_height <= *max_flip_height)) {
    return false;
  }
  if (min_catch_success &&
      !(m.catch_success && *m.catch_success >= *min_catch_success)) {
    return false;
  }
  return true;
}

SuccessCriteria CriteriaFromJson(const nlohmann::json& j) {
  SuccessCriteria c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ParseError("criteria must be a JSON object");
  const std::map<std::string, std::optional<double> SuccessCriteria::*>
      fields = {{"min_rot_vel", &SuccessCriteria::min_rot_vel},
                {"max_rot_vel", &SuccessCriteria::max_rot_vel},
                {"min_flips_per_min", &SuccessCriteria::min_flips_per_min},
                {"max_drops_per_min", &SuccessCriteria::max_drops_per_min},
                {"min_flip_height", &SuccessCriteria::min_flip_height},
                {"max_flip_height", &SuccessCriteria::max_flip_height},
                {"min_catch_success", &SuccessCriteria::min_catch_success}};
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw ParseError("criteria: unknown threshold '" + key + "'");
    }
    if (!value.is_number()) throw ParseError("criteria." + key + ": not a number");
    c.*(it->second) = value.get<double>();
  }
  return c;
}

nlohmann::json ToJson(const SuccessCriteria& c) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) j[k] = *v;
  };
  put("min_rot_vel", c.min_rot_vel);
  put("max_rot_vel", c.max_rot_vel);
  put("min_flips_per_min", c.min_flips_per_min);
  put("max_drops_per_min", c.max_drops_per_min);
  put("min_flip_height", c.min_flip_height);
  put("max_flip_height", c.max_flip_height);
  put("min_catch_success", c.min_catch_success);
  return j;
}

// ---------------- feedback ----------------

FeedbackArtifact MakeFeedback(const TrajectoryLog& log,
                              const DynamicsModel& model,
                              const EpisodeMetrics& metrics, double window,
                              double frame_rate) {
  if (!(frame_rate > 0.0)) throw ConfigError("frame rate must be positive");
  FeedbackArtifact f;
  f.metrics = metrics;
  if (log.ticks.empty()) return f;
  f.window_end = log.ticks.back().state.sim_time;
  f.window_start =
      std::max(log.ticks.front().state.sim_time, f.window_end - window);
  std::ostringstream tx;
  tx << "t[s]   ball_x  ball_z   vel_z  contact dropped\n";
  // frames end on the last tick, window * frame_rate of them
  const double step = 1.0 / frame_rate;
  const int n = std::max(
      1, static_cast<int>(std::floor((f.window_end - f.window_start) *
                                         frame_rate + 1e-9)));
  std::size_t i = 0;
  for (int k = 0; k < n; ++k) {
    const double t = f.window_end - (n - 1 - k) * step;
    while (i + 1 < log.ticks.size() &&
           log.ticks[i + 1].state.sim_time <= t + 1e-9) {
      ++i;
    }
    const SystemState& s = log.ticks[i].state;
    f.frames.push_back(model.RenderDigest(s));
    char line[128];
    std::snprintf(line, sizeof(line), "%6.2f %7.3f %7.3f %7.3f %7d %7d\n",
                  s.sim_time, s.ball_position.x(), s.ball_position.z(),
                  s.ball_velocity.z(), s.ball_in_contact ? 1 : 0,
                  s.ball_dropped ? 1 : 0);
    tx << line;
  }
  f.transcript = tx.str();
  return f;
}

nlohmann::json ToJson(const HistoryEntry& e) {
  return {{"iteration", e.iteration},
          {"weights", WeightsJson(e.weights)},
          {"spec", ToJson(e.weights)},
          {"metrics", ToJson(e.metrics)},
          {"score", OptionalNumber(e.score)},
          {"rationale", e.rationale},
          {"degenerate_weights", e.degenerate_weights},
          {"reflection_failed", e.reflection_failed}};
}

// ---------------- session state ----------------

nlohmann::json ToJson(const SessionState& s) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : s.history) history.push_back(ToJson(e));
  return {{"phase", PhaseName(s.phase)},
          {"status", s.status},
          {"stop_reason", s.stop_reason},
          {"spec", ToJson(s.spec)},
          {"spec_degenerate", s.spec_degenerate},
          {"spec_rationale", s.spec_rationale},
          {"criteria", ToJson(s.criteria)},
          {"criteria_text", s.criteria_text},
          {"history", history},
          {"retries", s.retries},
          {"failed_proposals", s.failed_proposals},
          {"clock", s.clock},
          {"critic_call_times", s.critic_call_times},
          {"critic_state", s.critic_state},
          {"error", s.error}};
}

SessionState SessionStateFromJson(const nlohmann::json& j) {
  SessionState s;
  try {
    s.phase = PhaseFromName(j.at("phase").get<std::string>());
    s.status = j.at("status").get<std::string>();
    s.stop_reason = j.value("stop_reason", "");
    s.spec = CostSpecFromJson(j.at("spec"));
    s.spec_degenerate = j.value("spec_degenerate", false);
    s.spec_rationale = j.value("spec_rationale", "");
    s.criteria = CriteriaFromJson(j.value("criteria", nlohmann::json()));
    s.criteria_text = j.value("criteria_text", "");
    for (const auto& e : j.at("history")) s.history.push_back(HistoryFromJson(e));
    s.retries = j.value("retries", 0);
    s.failed_proposals = j.value("failed_proposals", 0);
    s.clock = j.value("clock", 0.0);
    s.critic_call_times =
        j.value("critic_call_times", std::vector<double>{});
    s.critic_state = j.value("critic_state", nlohmann::json());
    s.error = j.value("error", "");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("session state: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("session state: ") + e.what());
  }
  return s;
}

nlohmann::json SessionReport::ToJson() const {
  nlohmann::json j = dexmpc::ToJson(state);
  j.erase("critic_state");
  j["iterations"] = state.history.size();
  j["best_so_far"] = nlohmann::json::array();
  for (double v : best_so_far) j["best_so_far"].push_back(OptionalNumber(v));
  if (best) {
    j["best_index"] = *best;
    j["best_score"] = OptionalNumber(state.history[*best].score);
    j["best_weights"] = WeightsJson(state.history[*best].weights);
  } else {
    j["best_index"] = nullptr;
  }
  return j;
}

SessionConfig SessionConfigFromJson(const nlohmann::json& j,
                                    const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("session file must be a JSON object");
  SessionConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = fs::path(base_dir) / path;
    return path.lexically_normal().string();
  };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "task") {
        c.task_path = resolve(value.get<std::string>());
      } else if (key == "description") {
        c.description = value.get<std::string>();
      } else if (key == "max_iterations") {
        c.max_iterations = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else if (key == "workers") {
        c.workers = value.get<int>();
      } else if (key == "frame_rate") {
        c.frame_rate = value.get<double>();
      } else if (key == "test_mode") {
        c.test_mode = value.get<bool>();
      } else if (key == "prompts_dir") {
        c.prompts_dir = resolve(value.get<std::string>());
      } else if (key == "max_retries") {
        c.max_retries = value.get<int>();
      } else if (key == "critic") {
        if (!value.is_object() || !value.contains("kind")) {
          throw ConfigError("critic needs a 'kind'");
        }
        c.critic = value;
      } else if (key == "timings") {
        for (const auto& [tk, tv] : value.items()) {
          double* slot = tk == "context"      ? &c.timings.context
                         : tk == "strategy"   ? &c.timings.strategy
                         : tk == "reflection" ? &c.timings.reflection
                         : tk == "execution"  ? &c.timings.execution
                         : tk == "recording"  ? &c.timings.recording
                         : tk == "sleep"      ? &c.timings.sleep
                                              : nullptr;
          if (slot == nullptr) {
            throw ConfigError("timings: unknown field '" + tk + "'");
          }
          *slot = tv.get<double>();
          if (!(*slot >= 0.0) || !std::isfinite(*slot)) {
            throw ConfigError("timings." + tk + " must be >= 0");
          }
        }
      } else if (key == "state" || key == "comment") {
        // persisted progress, read separately
      } else {
        throw ConfigError("session: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("session file: ") + e.what());
  }
  if (c.task_path.empty()) throw ConfigError("session: 'task' is required");
  if (c.description.empty()) {
    throw ConfigError("session: a non-empty 'description' is required");
  }
  if (c.max_iterations < 0) throw ConfigError("session: max_iterations < 0");
  if (c.max_retries < 0) throw ConfigError("session: max_retries < 0");
  if (c.workers < 1) throw ConfigError("session: workers must be >= 1");
  if (!(c.frame_rate > 0.0)) throw ConfigError("session: frame_rate <= 0");
  if (!(c.timings.execution > 0.0)) {
    throw ConfigError("session: timings.execution must be positive");
  }
  if (c.critic.empty()) throw ConfigError("session: 'critic' is required");
  return c;
}

std::map<std::string, std::string> LoadPrompts(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& [name, _] : BuiltinPrompts()) {
    const fs::path p = fs::path(dir) / (name + ".md");
    if (fs::exists(p)) out[name] = ReadFile(p.string());
  }
  return out;
}

// ---------------- session ----------------

AdaptationSession::AdaptationSession(SessionConfig config, TaskConfig task,
                                     Critic& critic, SessionClock& clock,
                                     std::map<std::string, std::string> prompts)
    : config_(std::move(config)),
      task_(std::move(task)),
      critic_(critic),
      clock_(clock),
      limiter_(clock, config_.timings.sleep),
      prompts_(std::move(prompts)) {
  model_ = MakeModel(task_.model_name, task_.model_params);
  state_.spec = ValidateSpec(task_.cost, *model_);
}

void AdaptationSession::Restore(const SessionState& state) {
  state_ = state;
  state_.spec = ValidateSpec(state_.spec, *model_);
  if (state_.status == "suspended") state_.status = "running";
  state_.error.clear();
  critic_.LoadState(state_.critic_state);
  last_feedback_.reset();
}

std::string AdaptationSession::Render(
    const std::string& name,
    const std::map<std::string, std::string>& vars) const {
  auto it = prompts_.find(name);
  std::string text =
      it != prompts_.end() ? it->second : BuiltinPrompts().at(name);
  for (const auto& [key, value] : vars) {
    const std::string token = "{{" + key + "}}";
    for (std::size_t p = text.find(token); p != std::string::npos;
         p = text.find(token, p + value.size())) {
      text.replace(p, token.size(), value);
    }
  }
  return text;
}

void AdaptationSession::BeforeCall() {
  limiter_.Acquire();
  state_.critic_call_times.push_back(clock_.Now());
}

std::pair<TrajectoryLog, EpisodeMetrics> AdaptationSession::RunWeights(
    const CostSpec& spec) {
  EpisodeOutcome out = RunTaskEpisode(task_, config_.seed, &spec,
                                      config_.timings.execution,
                                      config_.workers);
  clock_.Advance(config_.timings.execution);
  return {std::move(out.log), out.metrics};
}

std::optional<std::pair<WeightBlock, CriticReply>>
AdaptationSession::AskForWeights(bool reflect, CriticRequest request) {
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    BeforeCall();
    CriticReply reply;
    try {
      reply = reflect ? critic_.Reflect(request) : critic_.Propose(request);
      WeightBlock block = ParseWeightBlock(reply.text, task_.cost);
      block.spec = ValidateSpec(block.spec, *model_);
      return std::make_pair(std::move(block), std::move(reply));
    } catch (const ParseError& e) {
      if (reflect && reply.done) {
        // finishing without new weights is fine
        return std::make_pair(WeightBlock{state_.spec, state_.spec_degenerate},
                              std::move(reply));
      }
      request.retry_note = e.what();
    } catch (const ConfigError& e) {
      request.retry_note = e.what();
    }
    if (attempt < config_.max_retries) ++state_.retries;
  }
  return std::nullopt;
}

void AdaptationSession::Start() {
  const std::string tmpl = WeightTemplate(task_.cost);
  critic_.Initialize(Render("context", {{"template", tmpl}}), tmpl);

  CriticRequest propose;
  propose.prompt = Render("weight_generation",
                          {{"task", config_.description}, {"template", tmpl}});
  auto got = AskForWeights(false, propose);
  if (got) {
    state_.spec = got->first.spec;
    state_.spec_degenerate = got->first.degenerate;
    state_.spec_rationale = got->second.text;
  } else {
    ++state_.failed_proposals;
    state_.spec = ValidateSpec(task_.cost, *model_);
    state_.spec_rationale = "proposal rejected; task weights kept";
  }

  CriticRequest strategy;
  strategy.weights = &state_.spec;
  strategy.prompt = Render(
      "evaluation_strategy",
      {{"task", config_.description},
       {"weights", WeightsJson(state_.spec).dump(2)}});
  BeforeCall();
  StrategyReply sr = critic_.Strategy(strategy);
  state_.criteria = sr.criteria;
  state_.criteria_text = sr.text;

  if (config_.max_iterations == 0) {
    state_.phase = SessionState::Phase::kFinished;
    state_.stop_reason = "budget";
  } else {
    state_.phase = SessionState::Phase::kExecute;
  }
}

void AdaptationSession::Execute() {
  HistoryEntry e;
  e.iteration = static_cast<int>(state_.history.size());
  e.weights = state_.spec;
  e.rationale = state_.spec_rationale;
  e.degenerate_weights = state_.spec_degenerate;
  try {
    auto [log, m] = RunWeights(state_.spec);
    e.metrics = m;
    e.score = Score(task_.score, m);
    last_feedback_ = MakeFeedback(log, *model_, m, config_.timings.recording,
                                  config_.frame_rate);
  } catch (const DegenerateEpisode& ex) {
    e.score = kNegInf;
    last_feedback_ = FeedbackArtifact{};
    last_feedback_->transcript = std::string("episode degenerated: ") + ex.what();
  }
  state_.history.push_back(e);

  if (state_.criteria.Satisfied(e.metrics) && std::isfinite(e.score)) {
    state_.phase = SessionState::Phase::kFinished;
    state_.stop_reason = "criteria_met";
  } else if (static_cast<int>(state_.history.size()) >=
             config_.max_iterations) {
    state_.phase = SessionState::Phase::kFinished;
    state_.stop_reason = "budget";
  } else {
    state_.phase = SessionState::Phase::kReflect;
  }
}

void AdaptationSession::ReflectPhase() {
  if (!last_feedback_) {
    // resumed between execution and reflection: the run is deterministic,
    // so rebuild its recording
    auto [log, m] = RunWeights(state_.history.back().weights);
    last_feedback_ = MakeFeedback(log, *model_, m, config_.timings.recording,
                                  config_.frame_rate);
  }
  std::ostringstream table;
  for (const auto& h : state_.history) {
    table << "run " << h.iteration << ": weights " << WeightsJson(h.weights).dump()
          << " metrics " << ToJson(h.metrics).dump() << " score "
          << (std::isfinite(h.score) ? FormatDouble(h.score) : "-inf") << "\n";
  }
  CriticRequest request;
  request.weights = &state_.spec;
  request.history = &state_.history;
  request.feedback = &*last_feedback_;
  request.prompt =
      Render("reflection",
             {{"task", config_.description},
              {"history", table.str()},
              {"metrics", ToJson(last_feedback_->metrics).dump()},
              {"transcript", last_feedback_->transcript},
              {"criteria", state_.criteria_text},
              {"weights", WeightsJson(state_.spec).dump(2)}});
  auto got = AskForWeights(true, request);
  last_feedback_.reset();
  if (!got) {
    state_.history.back().reflection_failed = true;
    state_.spec_rationale = "revision rejected; previous weights kept";
  } else {
    if (got->second.done) {
      state_.phase = SessionState::Phase::kFinished;
      state_.stop_reason = "critic_done";
      return;
    }
    state_.spec = got->first.spec;
    state_.spec_degenerate = got->first.degenerate;
    state_.spec_rationale = got->second.text;
  }
  clock_.Sleep(config_.timings.sleep);
  state_.phase = SessionState::Phase::kExecute;
}

SessionReport AdaptationSession::Run() {
  if (state_.status != "finished") state_.status = "running";
  while (state_.status == "running") {
    const SessionState checkpoint = state_;
    const nlohmann::json critic_checkpoint = critic_.SaveState();
    try {
      switch (state_.phase) {
        case SessionState::Phase::kStart:
          Start();
          break;
        case SessionState::Phase::kExecute:
          Execute();
          break;
        case SessionState::Phase::kReflect:
          ReflectPhase();
          break;
        case SessionState::Phase::kFinished:
          state_.status = "finished";
          break;
      }
    } catch (const TransportError& e) {
      // redo the interrupted phase on resume
      state_ = checkpoint;
      critic_.LoadState(critic_checkpoint);
      state_.status = "suspended";
      state_.error = e.what();
    }
  }
  state_.clock = clock_.Now();
  state_.critic_state = critic_.SaveState();

  SessionReport report;
  report.state = state_;
  double best = kNegInf;
  for (std::size_t i = 0; i < state_.history.size(); ++i) {
    const double s = state_.history[i].score;
    if (!report.best || s > best) {
      best = s;
      report.best = i;
    }
    report.best_so_far.push_back(best);
  }
  return report;
}

nlohmann::json AdaptationSession::SessionJson(
    const nlohmann::json& original) const {
  nlohmann::json j = original;
  SessionState s = state_;
  s.clock = clock_.Now();
  j["state"] = ToJson(s);
  return j;
}

}  // namespace dexmpc
