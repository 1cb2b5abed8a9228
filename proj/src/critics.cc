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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "dexmpc/adaptation.h"
#include "dexmpc/errors.h"
#include "dexmpc/render.h"
#include "dexmpc/trajectory.h"

// after Eigen: resolv.h defines _res
#include <httplib.h>
#include <openssl/evp.h>

namespace dexmpc {

namespace {

const nlohmann::json& Pick(const nlohmann::json& list, std::size_t i) {
  static const nlohmann::json kEmpty = nlohmann::json::object();
  if (!list.is_array() || list.empty()) return kEmpty;
  return list[std::min(i, list.size() - 1)];
}

CriticReply ScriptedReply(const nlohmann::json& entry) {
  CriticReply r;
  r.done = entry.value("done", false);
  if (entry.contains("text")) {
    r.text = entry["text"].get<std::string>();
  } else if (entry.contains("weights")) {
    r.text = entry.value("rationale", std::string("scripted weights")) +
             "\n```json\n" + entry["weights"].dump(2) + "\n```\n";
  }
  return r;
}

}  // namespace

// ---------------- scripted ----------------

ScriptedCritic::ScriptedCritic(nlohmann::json script)
    : script_(std::move(script)) {
  if (!script_.is_object()) throw ConfigError("critic script must be an object");
  for (const auto& [key, value] : script_.items()) {
    if (key != "proposals" && key != "reflections" && key != "criteria" &&
        key != "strategy_text") {
      throw ConfigError("critic script: unknown field '" + key + "'");
    }
    if ((key == "proposals" || key == "reflections") && !value.is_array()) {
      throw ConfigError("critic script: " + key + " must be an array");
    }
  }
  try {
    CriteriaFromJson(script_.value("criteria", nlohmann::json()));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("critic script: ") + e.what());
  }
}

CriticReply ScriptedCritic::Propose(const CriticRequest&) {
  return ScriptedReply(Pick(script_.value("proposals", nlohmann::json()),
                            proposals_++));
}

StrategyReply ScriptedCritic::Strategy(const CriticRequest&) {
  StrategyReply r;
  r.criteria = CriteriaFromJson(script_.value("criteria", nlohmann::json()));
  r.text = script_.value("strategy_text", "scripted criteria " +
                                              ToJson(r.criteria).dump());
  return r;
}

CriticReply ScriptedCritic::Reflect(const CriticRequest&) {
  return ScriptedReply(Pick(script_.value("reflections", nlohmann::json()),
                            reflections_++));
}

nlohmann::json ScriptedCritic::SaveState() const {
  return {{"proposals", proposals_}, {"reflections", reflections_}};
}

void ScriptedCritic::LoadState(const nlohmann::json& state) {
  if (!state.is_object()) return;
  proposals_ = state.value("proposals", std::size_t{0});
  reflections_ = state.value("reflections", std::size_t{0});
}

// ---------------- hill climbing ----------------

HillClimbCritic::HillClimbCritic(const CostSpec& tmpl,
                                 const nlohmann::json& config) {
  start_ = tmpl;
  try {
    for (const auto& [key, value] : config.items()) {
      if (key == "kind") continue;
      if (key == "start") {
        // partial override of the template weights
        CostSpec base = tmpl;
        const WeightBlock partial =
            ParseWeightBlock("```\n" + value.dump() + "\n```", tmpl);
        for (const auto& [k, _] : value.items()) {
          const TermKind kind = *TermFromWeightKey(k);
          base.find(kind)->weight = partial.spec.find(kind)->weight;
        }
        start_ = base;
      } else if (key == "keys") {
        for (const auto& k : value) {
          const std::string label = k.get<std::string>();
          const auto dot = label.find('.');
          const auto kind = TermFromWeightKey(label.substr(0, dot));
          if (!kind || tmpl.find(*kind) == nullptr) {
            throw ConfigError("hill climb: unknown key '" + label + "'");
          }
          int component = -1;
          if (dot != std::string::npos) {
            const std::string c = label.substr(dot + 1);
            component = c == "x" ? 0 : c == "y" ? 1 : c == "z" ? 2 : std::atoi(c.c_str());
          }
          const CostTerm* t = tmpl.find(*kind);
          if (t->vector_weight != (component >= 0) ||
              component >= t->weight.size()) {
            throw ConfigError("hill climb: key '" + label +
                              "' does not match the weight's shape");
          }
          keys_.push_back({*kind, component, label});
        }
      } else if (key == "factor") {
        factor_ = value.get<double>();
      } else if (key == "criteria") {
        criteria_ = CriteriaFromJson(value);
      } else {
        throw ConfigError("hill climb: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hill climb config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("hill climb config: ") + e.what());
  }
  if (keys_.empty()) throw ConfigError("hill climb: 'keys' must not be empty");
  if (!(factor_ > 1.0)) throw ConfigError("hill climb: factor must be > 1");
}

CriticReply HillClimbCritic::Propose(const CriticRequest&) {
  return {"Starting point for the coordinate search.\n" +
              FormatWeightBlock(start_),
          false};
}

StrategyReply HillClimbCritic::Strategy(const CriticRequest&) {
  return {"success when the run meets " + ToJson(criteria_).dump(), criteria_};
}

CriticReply HillClimbCritic::Reflect(const CriticRequest& request) {
  if (request.history == nullptr || request.history->empty()) {
    return Propose(request);
  }
  const auto& h = *request.history;
  const std::size_t n_keys = keys_.size();
  std::size_t best = 0;
  std::size_t coord = 0;
  int dir = 1;
  bool flipped = false;
  // replay the search over the history to find where it stands
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i].score > h[best].score) {
      best = i;
      flipped = false;
    } else if (!flipped) {
      dir = -dir;
      flipped = true;
    } else {
      coord = (coord + 1) % n_keys;
      dir = 1;
      flipped = false;
    }
  }
  CostSpec next = h[best].weights;
  const Key& k = keys_[coord];
  CostTerm* t = next.find(k.term);
  double& w = t->weight[std::max(k.component, 0)];
  const double before = w;
  if (dir > 0) {
    w = w == 0.0 ? 1.0 : w * factor_;
  } else {
    w /= factor_;
  }
  char text[512];
  std::snprintf(text, sizeof(text),
                "Best run so far is run %zu (score %s). %s %s from %g to %g.\n",
                best,
                std::isfinite(h[best].score) ? FormatDouble(h[best].score).c_str()
                                             : "-inf",
                dir > 0 ? "Raising" : "Lowering", k.label.c_str(), before, w);
  return {std::string(text) + FormatWeightBlock(next), false};
}

// ---------------- clocks ----------------

namespace {
double SteadySeconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

SteadyClock::SteadyClock() : origin_(SteadySeconds()) {}

double SteadyClock::Now() const { return SteadySeconds() - origin_; }

void SteadyClock::Sleep(double seconds) {
  if (seconds > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }
}

void RateLimiter::Acquire() {
  if (last_) {
    const double wait = *last_ + interval_ - clock_.Now();
    if (wait > 0.0) clock_.Sleep(wait);
  }
  last_ = clock_.Now();
}

// ---------------- remote ----------------

std::string Base64Encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(
      reinterpret_cast<unsigned char*>(out.data()),
      reinterpret_cast<const unsigned char*>(bytes.data()),
      static_cast<int>(bytes.size()));
  out.resize(n);
  return out;
}

RemoteCritic::RemoteCritic(Options options) : options_(std::move(options)) {
  const auto scheme = options_.endpoint.find("://");
  if (options_.endpoint.empty() || scheme == std::string::npos) {
    throw ConfigError("critic endpoint must look like http://host:port/path");
  }
  if (!(options_.timeout > 0.0)) throw ConfigError("critic timeout must be > 0");
}

void RemoteCritic::Initialize(const std::string& context_prompt,
                              const std::string& weight_template) {
  context_ = context_prompt;
  template_ = weight_template;
}

nlohmann::json RemoteCritic::Payload(const std::string& phase,
                                     const CriticRequest& request) const {
  nlohmann::json body = {{"phase", phase},
                         {"role_context", context_},
                         {"template", template_},
                         {"prompt", request.prompt},
                         {"retry_note", request.retry_note}};
  if (request.weights != nullptr) body["weights"] = WeightsJson(*request.weights);
  nlohmann::json history = nlohmann::json::array();
  if (request.history != nullptr) {
    for (const auto& h : *request.history) {
      nlohmann::json e = ToJson(h);
      e.erase("spec");
      history.push_back(e);
    }
  }
  body["history"] = history;
  body["frames"] = nlohmann::json::array();
  if (request.feedback == nullptr) return body;
  body["metrics"] = ToJson(request.feedback->metrics);
  body["transcript"] = request.feedback->transcript;
  body["window"] = {request.feedback->window_start,
                    request.feedback->window_end};
  std::vector<std::string> frames;
  for (const auto& f : request.feedback->frames) {
    frames.push_back(Base64Encode(FrameToSvg(f)));
  }
  // thin the frames until the body fits
  for (;;) {
    body["frames"] = frames;
    if (body.dump().size() <= options_.max_payload_bytes || frames.empty()) {
      break;
    }
    std::vector<std::string> half;
    for (std::size_t i = 0; i < frames.size(); i += 2) half.push_back(frames[i]);
    if (half.size() == frames.size()) half.clear();
    frames = std::move(half);
  }
  body["frame_count"] = frames.size();
  return body;
}

nlohmann::json RemoteCritic::Call(const std::string& phase,
                                  const CriticRequest& request) {
  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://") + 3;
  const auto slash = url.find('/', scheme_end);
  const std::string host = url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : url.substr(slash);

  httplib::Client client(host);
  if (!client.is_valid()) throw ConfigError("bad critic endpoint " + url);
  const auto usec = static_cast<long>(options_.timeout * 1e6);
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);
  httplib::Headers headers;
  if (!options_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.token);
  }
  auto res = client.Post(path, headers, Payload(phase, request).dump(),
                         "application/json");
  if (!res) {
    throw TransportError("critic " + url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("critic " + url + ": HTTP " +
                         std::to_string(res->status));
  }
  try {
    nlohmann::json j = nlohmann::json::parse(res->body);
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw ParseError("critic reply lacks a 'text' string");
    }
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("critic reply is not JSON: ") + e.what());
  }
}

CriticReply RemoteCritic::Propose(const CriticRequest& request) {
  const nlohmann::json j = Call("weight_generation", request);
  return {j["text"].get<std::string>(), j.value("done", false)};
}

StrategyReply RemoteCritic::Strategy(const CriticRequest& request) {
  StrategyReply r;
  try {
    const nlohmann::json j = Call("evaluation_strategy", request);
    r.text = j["text"].get<std::string>();
    r.criteria = CriteriaFromJson(j.value("criteria", nlohmann::json()));
  } catch (const ParseError& e) {
    // prose without thresholds cannot end a session; run on the budget
    r.text = std::string("no usable criteria: ") + e.what();
  }
  return r;
}

CriticReply RemoteCritic::Reflect(const CriticRequest& request) {
  const nlohmann::json j = Call("reflection", request);
  return {j["text"].get<std::string>(), j.value("done", false)};
}

nlohmann::json RemoteCritic::SaveState() const {
  return {{"context", context_}, {"template", template_}};
}

void RemoteCritic::LoadState(const nlohmann::json& state) {
  if (!state.is_object()) return;
  context_ = state.value("context", "");
  template_ = state.value("template", "");
}

std::unique_ptr<Critic> MakeCritic(const SessionConfig& config,
                                   const CostSpec& tmpl,
                                   const std::string& endpoint_override) {
  const nlohmann::json& c = config.critic;
  const std::string kind = c.value("kind", "");
  if (kind == "scripted") {
    return std::make_unique<ScriptedCritic>(
        c.value("script", nlohmann::json::object()));
  }
  if (kind == "hill_climb") return std::make_unique<HillClimbCritic>(tmpl, c);
  if (kind == "remote") {
    RemoteCritic::Options o;
    auto env = [](const char* name) {
      const char* v = std::getenv(name);
      return v != nullptr ? std::string(v) : std::string();
    };
    o.endpoint = endpoint_override;
    if (o.endpoint.empty()) o.endpoint = env("DEXMPC_CRITIC_ENDPOINT");
    if (o.endpoint.empty()) o.endpoint = c.value("endpoint", "");
    o.token = env("DEXMPC_CRITIC_TOKEN");
    o.timeout = c.value("timeout", o.timeout);
    o.max_payload_bytes = c.value("max_payload_bytes", o.max_payload_bytes);
    return std::make_unique<RemoteCritic>(o);
  }
  throw ConfigError("critic.kind must be scripted, hill_climb or remote");
}

}  // namespace dexmpc
