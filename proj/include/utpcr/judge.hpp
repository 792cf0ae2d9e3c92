#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/reward.hpp"

namespace utpcr {

enum class RequestKind { CheckpointVerdict, PlanEvaluation, ReflectionQuality };
enum class ReflectionLabel { Under, Good, Over };
enum class ParsePolicy { Strict, RefuseOnMalformed };
enum class JudgeBackend { Mock, Scripted, Remote };

inline std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::CheckpointVerdict: return "checkpoint";
    case RequestKind::PlanEvaluation: return "plan";
    case RequestKind::ReflectionQuality: return "reflection";
  }
  return "?";
}

inline std::string_view to_string(ReflectionLabel l) {
  switch (l) {
    case ReflectionLabel::Under: return "under";
    case ReflectionLabel::Good: return "good";
    case ReflectionLabel::Over: return "over";
  }
  return "?";
}

/// Version tag carried by every statistic derived from reflection labels.
inline constexpr std::string_view kReflectionRubricVersion = "reflection-rubric-v1-experimental";

struct JudgeRequest {
  std::uint64_t id = 0;
  RequestKind kind = RequestKind::CheckpointVerdict;
  std::string query_id;
  std::string query;
  std::string key;  // checkpoint id, "plan", or reflection instance id
  std::string payload;
  std::vector<std::string> artifact_refs;
  int scale = 6;  // N, plan evaluations only
};

struct JudgeResponse {
  std::uint64_t request_id = 0;
  std::optional<Verdict> verdict;
  std::optional<int> integer_score;
  std::optional<ReflectionLabel> quality_label;
  std::string raw;
};

// ---------------------------------------------------------------------------
// Reply parsing

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Position of the first whole-word, case-insensitive occurrence of `word`.
inline std::size_t find_word(const std::string& haystack_lower, std::string_view word) {
  auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  std::size_t pos = haystack_lower.find(word);
  while (pos != std::string::npos) {
    bool left = pos == 0 || !is_alpha(haystack_lower[pos - 1]);
    std::size_t end = pos + word.size();
    bool right = end >= haystack_lower.size() || !is_alpha(haystack_lower[end]);
    if (left && right) return pos;
    pos = haystack_lower.find(word, pos + 1);
  }
  return std::string::npos;
}

template <typename T, std::size_t N>
std::optional<T> first_token(std::string_view reply, const std::pair<std::string_view, T> (&tokens)[N]) {
  const std::string text = lower(reply);
  std::optional<T> best;
  std::size_t best_pos = std::string::npos;
  for (const auto& [word, value] : tokens) {
    std::size_t p = find_word(text, word);
    if (p < best_pos) {
      best_pos = p;
      best = value;
    }
  }
  return best;
}

}  // namespace detail

/// Earliest ACCEPT/REFUSE token, case-insensitive, whole word.
inline std::optional<Verdict> parse_verdict(std::string_view reply) {
  static constexpr std::pair<std::string_view, Verdict> kTokens[] = {{"accept", Verdict::Accept},
                                                                     {"refuse", Verdict::Refuse}};
  return detail::first_token(reply, kTokens);
}

inline std::optional<ReflectionLabel> parse_reflection_label(std::string_view reply) {
  static constexpr std::pair<std::string_view, ReflectionLabel> kTokens[] = {
      {"under", ReflectionLabel::Under}, {"good", ReflectionLabel::Good}, {"over", ReflectionLabel::Over}};
  return detail::first_token(reply, kTokens);
}

/// First integer in the reply, if it lies in 0..scale. A leading minus sign
/// counts as part of the number.
inline std::optional<int> parse_score(std::string_view reply, int scale) {
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
    bool negative = i > 0 && reply[i - 1] == '-';
    long long value = 0;
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j])) && value < 1'000'000'000) {
      value = value * 10 + (reply[j] - '0');
      ++j;
    }
    if (negative) value = -value;
    if (value < 0 || value > scale) return std::nullopt;
    return static_cast<int>(value);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Prompts

inline std::string checkpoint_prompt(const JudgeRequest& r) {
  return "You are judging generated images against one requirement of a user request.\n"
         "User request: " + r.query + "\n"
         "Checkpoint: " + r.payload + "\n"
         "Inspect the attached images. Reply with exactly one word: ACCEPT if the images satisfy "
         "the checkpoint, REFUSE otherwise.";
}

inline std::string plan_prompt(const JudgeRequest& r) {
  return "You are evaluating an agent's plan for a visual creation request.\n"
         "User request: " + r.query + "\n"
         "Plan:\n" + r.payload + "\n"
         "Score the plan on (i) requirement completeness, (ii) logical coherence of the sub-task "
         "sequence, and (iii) tool-goal matching. Reply with a single integer from 0 to " +
         std::to_string(r.scale) + ", higher is better.";
}

/// EXPERIMENTAL rubric; see docs/reflection_rubric.md.
inline std::string reflection_prompt(const JudgeRequest& r) {
  return "You are auditing one reflection step of an image-generation agent "
         "(rubric " + std::string(kReflectionRubricVersion) + ").\n"
         "User request: " + r.query + "\n"
         "Reflection step with its surrounding context:\n" + r.payload + "\n"
         "Classify the reflection:\n"
         "UNDER - the intermediate result needed a correction and the reflection did not identify it.\n"
         "OVER - the reflection demanded a correction the result did not need.\n"
         "GOOD - otherwise: needed corrections were identified and none were invented.\n"
         "Reply with exactly one word: UNDER, GOOD or OVER.";
}

inline std::string prompt_for(const JudgeRequest& r) {
  switch (r.kind) {
    case RequestKind::CheckpointVerdict: return checkpoint_prompt(r);
    case RequestKind::PlanEvaluation: return plan_prompt(r);
    case RequestKind::ReflectionQuality: return reflection_prompt(r);
  }
  return {};
}

/// Chat-completion request body sent by the remote backend.
inline nlohmann::json wire_request(const JudgeRequest& r, const std::string& model) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt_for(r)}});
  for (const auto& ref : r.artifact_refs) content.push_back({{"type", "image_ref"}, {"ref", ref}});
  return {{"model", model}, {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
}

// ---------------------------------------------------------------------------
// Backends

struct JudgeBackendSpec {
  JudgeBackend backend = JudgeBackend::Mock;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_name;
  std::chrono::milliseconds timeout{10'000};
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{200};
  ParsePolicy parse_policy = ParsePolicy::Strict;
  std::string token_env;  // name of the environment variable holding a bearer token
  int max_in_flight = 4;
  // Mock constants.
  Verdict mock_verdict = Verdict::Accept;
  int mock_score = 6;
  ReflectionLabel mock_label = ReflectionLabel::Good;
  // Scripted replay file.
  std::optional<std::string> script_path;

  void validate() const {
    if (backend == JudgeBackend::Remote && (!endpoint || endpoint->empty())) {
      throw Error(ErrorCode::InvalidConfig, "remote judge requires an endpoint");
    }
    if (backend == JudgeBackend::Scripted && !script_path) {
      throw Error(ErrorCode::InvalidConfig, "scripted judge requires a script path");
    }
    if (max_retries < 0 || max_in_flight < 1 || timeout.count() <= 0) {
      throw Error(ErrorCode::InvalidConfig, "judge retry/in-flight/timeout settings out of range");
    }
  }

  static JudgeBackendSpec from_json(const nlohmann::json& j) {
    JudgeBackendSpec s;
    if (j.is_null()) return s;
    const std::string backend = j.value("backend", "mock");
    if (backend == "mock") s.backend = JudgeBackend::Mock;
    else if (backend == "scripted") s.backend = JudgeBackend::Scripted;
    else if (backend == "remote") s.backend = JudgeBackend::Remote;
    else throw Error(ErrorCode::InvalidConfig, "unknown judge backend '" + backend + "'");
    if (j.contains("endpoint")) s.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model")) s.model_name = j.at("model").get<std::string>();
    if (j.contains("timeout_ms")) s.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<int>());
    if (j.contains("retry_backoff_ms")) s.retry_backoff = std::chrono::milliseconds(j.at("retry_backoff_ms").get<int>());
    s.max_retries = j.value("max_retries", s.max_retries);
    s.max_in_flight = j.value("max_in_flight", s.max_in_flight);
    s.token_env = j.value("token_env", s.token_env);
    const std::string policy = j.value("parse_policy", "strict");
    if (policy == "strict") s.parse_policy = ParsePolicy::Strict;
    else if (policy == "refuse_on_malformed") s.parse_policy = ParsePolicy::RefuseOnMalformed;
    else throw Error(ErrorCode::InvalidConfig, "unknown parse policy '" + policy + "'");
    if (j.contains("mock")) {
      const auto& m = j.at("mock");
      if (m.contains("verdict")) {
        auto v = parse_verdict(m.at("verdict").get<std::string>());
        if (!v) throw Error(ErrorCode::InvalidConfig, "mock verdict must be accept or refuse");
        s.mock_verdict = *v;
      }
      s.mock_score = m.value("score", s.mock_score);
      if (m.contains("label")) {
        auto l = parse_reflection_label(m.at("label").get<std::string>());
        if (!l) throw Error(ErrorCode::InvalidConfig, "mock label must be under, good or over");
        s.mock_label = *l;
      }
    }
    if (j.contains("script")) s.script_path = j.at("script").get<std::string>();
    s.validate();
    return s;
  }

  /// Environment overrides: UTPCR_JUDGE_ENDPOINT, UTPCR_JUDGE_TOKEN_ENV, UTPCR_JUDGE_TIMEOUT_MS.
  void apply_env() {
    if (const char* e = std::getenv("UTPCR_JUDGE_ENDPOINT"); e && *e) endpoint = e;
    if (const char* e = std::getenv("UTPCR_JUDGE_TOKEN_ENV"); e && *e) token_env = e;
    if (const char* e = std::getenv("UTPCR_JUDGE_TIMEOUT_MS"); e && *e) {
      try {
        timeout = std::chrono::milliseconds(std::stoi(e));
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "UTPCR_JUDGE_TIMEOUT_MS is not an integer");
      }
    }
  }
};

/// Evaluator interface. `evaluate` is synchronous; `submit` runs requests
/// concurrently, at most `max_in_flight` at a time, and results correlate by
/// request id.
class Judge {
 public:
  explicit Judge(int max_in_flight = 4)
      : slots_(std::make_shared<std::counting_semaphore<>>(std::max(1, max_in_flight))) {}
  virtual ~Judge() = default;
  Judge(const Judge&) = delete;
  Judge& operator=(const Judge&) = delete;

  virtual JudgeResponse evaluate(const JudgeRequest& request) = 0;

  virtual std::future<JudgeResponse> submit(JudgeRequest request) {
    if (!concurrent()) {
      std::promise<JudgeResponse> p;
      try {
        p.set_value(evaluate(request));
      } catch (...) {
        p.set_exception(std::current_exception());
      }
      return p.get_future();
    }
    slots_->acquire();
    auto slots = slots_;
    return std::async(std::launch::async, [this, slots, req = std::move(request)]() {
      struct Release {
        std::shared_ptr<std::counting_semaphore<>> s;
        ~Release() { s->release(); }
      } release{slots};
      return evaluate(req);
    });
  }

  std::uint64_t next_request_id() { return ++request_counter_; }

  std::function<void(const std::string&)> on_diagnostic = [](const std::string& msg) {
    std::cerr << "[judge] " << msg << "\n";
  };

 protected:
  virtual bool concurrent() const { return false; }

 private:
  std::shared_ptr<std::counting_semaphore<>> slots_;
  std::atomic<std::uint64_t> request_counter_{0};
};

class MockJudge : public Judge {
 public:
  MockJudge(Verdict verdict = Verdict::Accept, int score = 6, ReflectionLabel label = ReflectionLabel::Good)
      : verdict_(verdict), score_(score), label_(label) {}

  JudgeResponse evaluate(const JudgeRequest& r) override {
    JudgeResponse out;
    out.request_id = r.id;
    switch (r.kind) {
      case RequestKind::CheckpointVerdict: out.verdict = verdict_; out.raw = std::string(to_string(verdict_)); break;
      case RequestKind::PlanEvaluation: out.integer_score = score_; out.raw = std::to_string(score_); break;
      case RequestKind::ReflectionQuality: out.quality_label = label_; out.raw = std::string(to_string(label_)); break;
    }
    return out;
  }

 private:
  Verdict verdict_;
  int score_;
  ReflectionLabel label_;
};

/// Replays recorded judgements keyed by (kind, query_id, key).
///
/// Script file: {"entries": [{"kind": "checkpoint"|"plan"|"reflection",
/// "query_id": ..., "key": ..., "reply": "<raw judge text>"}],
///  "defaults": {"checkpoint": ..., "plan": ..., "reflection": ...}, "default": {"reply": ...}}
/// `key` is the checkpoint id, "plan", or the reflection instance id. Lookup
/// falls back to the per-kind default, then to the global default.
class ScriptedJudge : public Judge {
 public:
  explicit ScriptedJudge(const nlohmann::json& script) {
    if (!script.is_object() || !script.contains("entries") || !script.at("entries").is_array()) {
      throw Error(ErrorCode::InvalidConfig, "judge script needs an 'entries' array");
    }
    for (const auto& e : script.at("entries")) {
      auto kind = kind_from_string(e.at("kind").get<std::string>());
      entries_[{kind, e.at("query_id").get<std::string>(), e.at("key").get<std::string>()}] =
          e.at("reply").get<std::string>();
    }
    if (script.contains("defaults")) {
      for (const auto& [k, v] : script.at("defaults").items()) kind_defaults_[kind_from_string(k)] = v.get<std::string>();
    }
    if (script.contains("default")) default_reply_ = script.at("default").at("reply").get<std::string>();
  }

  static ScriptedJudge from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read judge script '" + path + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "judge script is not JSON: '" + path + "'");
    return ScriptedJudge(j);
  }

  ScriptedJudge(ScriptedJudge&& other) noexcept
      : Judge(),
        entries_(std::move(other.entries_)),
        kind_defaults_(std::move(other.kind_defaults_)),
        default_reply_(std::move(other.default_reply_)) {}

  JudgeResponse evaluate(const JudgeRequest& r) override {
    auto it = entries_.find({r.kind, r.query_id, r.key});
    std::string reply;
    auto kd = kind_defaults_.find(r.kind);
    if (it != entries_.end()) {
      reply = it->second;
    } else if (kd != kind_defaults_.end()) {
      reply = kd->second;
    } else if (default_reply_) {
      reply = *default_reply_;
    } else {
      throw Error(ErrorCode::JudgeUnavailable, "no scripted reply for " + std::string(to_string(r.kind)) + " '" +
                                                   r.query_id + "/" + r.key + "'");
    }
    JudgeResponse out;
    out.request_id = r.id;
    out.raw = reply;
    bool ok = true;
    switch (r.kind) {
      case RequestKind::CheckpointVerdict: out.verdict = parse_verdict(reply); ok = out.verdict.has_value(); break;
      case RequestKind::PlanEvaluation: out.integer_score = parse_score(reply, r.scale); ok = out.integer_score.has_value(); break;
      case RequestKind::ReflectionQuality: out.quality_label = parse_reflection_label(reply); ok = out.quality_label.has_value(); break;
    }
    if (!ok) throw Error(ErrorCode::MalformedReply, "scripted reply '" + reply + "' does not parse");
    return out;
  }

  static RequestKind kind_from_string(const std::string& s) {
    if (s == "checkpoint") return RequestKind::CheckpointVerdict;
    if (s == "plan") return RequestKind::PlanEvaluation;
    if (s == "reflection") return RequestKind::ReflectionQuality;
    throw Error(ErrorCode::InvalidConfig, "unknown request kind '" + s + "'");
  }

 private:
  std::map<std::tuple<RequestKind, std::string, std::string>, std::string> entries_;
  std::map<RequestKind, std::string> kind_defaults_;
  std::optional<std::string> default_reply_;
};

/// JSON-over-HTTP chat backend. POSTs `wire_request` to the endpoint and
/// expects `{"content": "<text>"}` back. Transport errors, 429 and 5xx are
/// retried up to max_retries times.
class RemoteJudge : public Judge {
 public:
  explicit RemoteJudge(JudgeBackendSpec spec) : Judge(spec.max_in_flight), spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.backend != JudgeBackend::Remote) throw Error(ErrorCode::InvalidConfig, "not a remote judge spec");
    split_endpoint(*spec_.endpoint, base_, path_);
  }

  JudgeResponse evaluate(const JudgeRequest& r) override {
    if (r.kind == RequestKind::CheckpointVerdict && r.artifact_refs.empty()) {
      throw Error(ErrorCode::InvalidRequest, "checkpoint request without artifacts");
    }
    const std::string body = wire_request(r, spec_.model_name.value_or("")).dump();
    httplib::Headers headers;
    if (!spec_.token_env.empty()) {
      if (const char* tok = std::getenv(spec_.token_env.c_str()); tok && *tok) {
        headers.emplace("Authorization", std::string("Bearer ") + tok);
      }
    }
    std::string last_error;
    for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
      if (attempt > 0 && spec_.retry_backoff.count() > 0) std::this_thread::sleep_for(spec_.retry_backoff * attempt);
      httplib::Client client(base_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout).count();
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(spec_.timeout).count() % 1'000'000;
      client.set_connection_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
      client.set_read_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
      client.set_write_timeout(static_cast<time_t>(secs), static_cast<time_t>(usecs));
      auto res = client.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::JudgeUnavailable, "HTTP " + std::to_string(res->status) + " from judge");
      }
      return interpret(r, res->body);
    }
    throw Error(ErrorCode::JudgeUnavailable,
                "gave up after " + std::to_string(spec_.max_retries + 1) + " attempts: " + last_error);
  }

  const JudgeBackendSpec& spec() const { return spec_; }

 protected:
  bool concurrent() const override { return true; }

 private:
  JudgeBackendSpec spec_;
  std::string base_;
  std::string path_;

  static void split_endpoint(const std::string& url, std::string& base, std::string& path) {
    auto scheme = url.find("://");
    auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      base = url;
      path = "/";
    } else {
      base = url.substr(0, path_start);
      path = url.substr(path_start);
    }
  }

  JudgeResponse interpret(const JudgeRequest& r, const std::string& body) {
    JudgeResponse out;
    out.request_id = r.id;
    auto j = nlohmann::json::parse(body, nullptr, false);
    bool ok = false;
    if (j.is_object() && j.contains("content") && j["content"].is_string()) {
      out.raw = j["content"].get<std::string>();
      switch (r.kind) {
        case RequestKind::CheckpointVerdict: out.verdict = parse_verdict(out.raw); ok = out.verdict.has_value(); break;
        case RequestKind::PlanEvaluation: out.integer_score = parse_score(out.raw, r.scale); ok = out.integer_score.has_value(); break;
        case RequestKind::ReflectionQuality: out.quality_label = parse_reflection_label(out.raw); ok = out.quality_label.has_value(); break;
      }
    } else {
      out.raw = body;
    }
    if (ok) return out;
    if (spec_.parse_policy == ParsePolicy::RefuseOnMalformed) {
      if (r.kind == RequestKind::CheckpointVerdict) {
        on_diagnostic("malformed verdict reply mapped to refuse: '" + out.raw + "'");
        out.verdict = Verdict::Refuse;
        return out;
      }
      if (r.kind == RequestKind::PlanEvaluation) {
        on_diagnostic("malformed plan score reply mapped to 0: '" + out.raw + "'");
        out.integer_score = 0;
        return out;
      }
    }
    throw Error(ErrorCode::MalformedReply, "cannot parse judge reply '" + out.raw + "'");
  }
};

inline std::unique_ptr<Judge> make_judge(const JudgeBackendSpec& spec) {
  spec.validate();
  switch (spec.backend) {
    case JudgeBackend::Mock: return std::make_unique<MockJudge>(spec.mock_verdict, spec.mock_score, spec.mock_label);
    case JudgeBackend::Scripted: return std::make_unique<ScriptedJudge>(ScriptedJudge::from_file(*spec.script_path));
    case JudgeBackend::Remote: return std::make_unique<RemoteJudge>(spec);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown judge backend");
}

// ---------------------------------------------------------------------------
// Typed operations

inline Verdict judge_checkpoint(Judge& judge, JudgeRequest req) {
  if (req.kind != RequestKind::CheckpointVerdict) throw Error(ErrorCode::InvalidRequest, "not a checkpoint request");
  if (req.payload.empty()) throw Error(ErrorCode::InvalidRequest, "empty checkpoint description");
  if (req.artifact_refs.empty()) throw Error(ErrorCode::InvalidRequest, "checkpoint request without artifacts");
  if (req.id == 0) req.id = judge.next_request_id();
  auto resp = judge.evaluate(req);
  if (!resp.verdict) throw Error(ErrorCode::MalformedReply, "judge returned no verdict");
  return *resp.verdict;
}

inline JudgeRequest plan_request(std::string query_id, std::string query, std::string plan_text, int scale) {
  JudgeRequest req;
  req.kind = RequestKind::PlanEvaluation;
  req.query_id = std::move(query_id);
  req.query = std::move(query);
  req.key = "plan";
  req.payload = std::move(plan_text);
  req.scale = scale;
  return req;
}

inline int evaluate_plan(Judge& judge, std::string query_id, std::string query, std::string plan_text, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidConfig, "plan scale must be positive");
  if (plan_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::InvalidRequest, "empty plan text");
  }
  auto req = plan_request(std::move(query_id), std::move(query), std::move(plan_text), scale);
  req.id = judge.next_request_id();
  auto resp = judge.evaluate(req);
  if (!resp.integer_score || *resp.integer_score < 0 || *resp.integer_score > scale) {
    throw Error(ErrorCode::MalformedReply, "plan score missing or outside 0.." + std::to_string(scale));
  }
  return *resp.integer_score;
}

inline ReflectionLabel classify_reflection(Judge& judge, JudgeRequest req) {
  if (req.kind != RequestKind::ReflectionQuality) throw Error(ErrorCode::InvalidRequest, "not a reflection request");
  if (req.payload.empty()) throw Error(ErrorCode::InvalidRequest, "empty reflection payload");
  if (req.id == 0) req.id = judge.next_request_id();
  auto resp = judge.evaluate(req);
  if (!resp.quality_label) throw Error(ErrorCode::MalformedReply, "judge returned no reflection label");
  return *resp.quality_label;
}

}  // namespace utpcr
