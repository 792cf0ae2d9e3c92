#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/rational.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/trajectory.hpp"
#include "utpcr/validate.hpp"

namespace utpcr {

enum class Dimension { reflection, plan, format, tool, result };

inline constexpr Dimension kAllDimensions[] = {Dimension::reflection, Dimension::plan, Dimension::format,
                                               Dimension::tool, Dimension::result};

inline std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::reflection: return "reflection";
    case Dimension::plan: return "plan";
    case Dimension::format: return "format";
    case Dimension::tool: return "tool";
    case Dimension::result: return "result";
  }
  return "?";
}

inline Dimension dimension_from_string(std::string_view s) {
  for (Dimension d : kAllDimensions) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown reward dimension '" + std::string(s) + "'");
}

/// Per-dimension sub-rewards. Values are exact; `value()` converts to double.
struct RewardVector {
  std::optional<Rational> reflection;
  std::optional<Rational> plan;
  std::optional<Rational> format;
  std::optional<Rational> tool;
  std::optional<Rational> result;
  Rational total;

  std::optional<Rational>& at(Dimension d) {
    switch (d) {
      case Dimension::reflection: return reflection;
      case Dimension::plan: return plan;
      case Dimension::format: return format;
      case Dimension::tool: return tool;
      case Dimension::result: return result;
    }
    return result;
  }
  const std::optional<Rational>& at(Dimension d) const { return const_cast<RewardVector*>(this)->at(d); }

  std::optional<double> value(Dimension d) const {
    const auto& r = at(d);
    return r ? std::optional<double>(r->to_double()) : std::nullopt;
  }

  friend bool operator==(const RewardVector&, const RewardVector&) = default;

  /// {"reflection": 0.75, ..., "total": 0.9375, "exact": {"reflection": "3/4", ...}}
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    nlohmann::json exact = nlohmann::json::object();
    for (Dimension d : kAllDimensions) {
      if (const auto& r = at(d)) {
        j[std::string(to_string(d))] = r->to_double();
        exact[std::string(to_string(d))] = r->to_string();
      }
    }
    j["total"] = total.to_double();
    exact["total"] = total.to_string();
    j["exact"] = std::move(exact);
    return j;
  }

  /// Reads the exact strings when present, else approximates the doubles.
  static RewardVector from_json(const nlohmann::json& j) {
    RewardVector v;
    const nlohmann::json* exact = j.contains("exact") ? &j.at("exact") : nullptr;
    auto read = [&](const std::string& key) -> std::optional<Rational> {
      if (exact && exact->contains(key)) return Rational::parse(exact->at(key).get<std::string>());
      if (j.contains(key) && !j.at(key).is_null()) return Rational::approximate(j.at(key).get<double>());
      return std::nullopt;
    };
    for (Dimension d : kAllDimensions) v.at(d) = read(std::string(to_string(d)));
    if (auto t = read("total")) v.total = *t;
    return v;
  }
};

struct RewardConfig {
  std::vector<Dimension> dimensions = {Dimension::reflection, Dimension::format, Dimension::tool,
                                       Dimension::result};
  std::map<Dimension, Rational> weights;
  int plan_scale = 6;
  bool allow_unnormalized = false;
  bool tools_expected = true;

  Rational weight(Dimension d) const {
    auto it = weights.find(d);
    return it == weights.end() ? Rational(1) : it->second;
  }

  bool includes(Dimension d) const { return std::find(dimensions.begin(), dimensions.end(), d) != dimensions.end(); }

  void validate() const {
    if (dimensions.empty()) throw Error(ErrorCode::InvalidConfig, "reward dimensions are empty");
    std::set<Dimension> seen(dimensions.begin(), dimensions.end());
    if (seen.size() != dimensions.size()) throw Error(ErrorCode::InvalidConfig, "duplicate reward dimension");
    if (plan_scale < 1) throw Error(ErrorCode::InvalidConfig, "plan_scale must be positive");
    Rational sum;
    for (Dimension d : dimensions) {
      if (weight(d) < Rational(0)) throw Error(ErrorCode::InvalidConfig, "negative weight");
      sum += weight(d);
    }
    for (const auto& [d, w] : weights) {
      if (!includes(d)) throw Error(ErrorCode::InvalidConfig, "weight for unused dimension " + std::string(to_string(d)));
    }
    // total <= sum(w)/|W|, so anything above |W| can leave the unit interval.
    if (!allow_unnormalized && sum > Rational(static_cast<std::int64_t>(dimensions.size()))) {
      throw Error(ErrorCode::InvalidConfig, "weights sum above |W| can push the total past 1; set allow_unnormalized");
    }
  }

  static RewardConfig from_json(const nlohmann::json& j) {
    RewardConfig c;
    if (j.is_null()) return c;
    if (j.contains("dimensions")) {
      c.dimensions.clear();
      for (const auto& d : j.at("dimensions")) c.dimensions.push_back(dimension_from_string(d.get<std::string>()));
    }
    if (j.contains("weights")) {
      for (const auto& [k, v] : j.at("weights").items()) {
        c.weights[dimension_from_string(k)] =
            v.is_string() ? Rational::parse(v.get<std::string>()) : Rational::approximate(v.get<double>());
      }
    }
    c.plan_scale = j.value("plan_scale", c.plan_scale);
    c.allow_unnormalized = j.value("allow_unnormalized", c.allow_unnormalized);
    c.tools_expected = j.value("tools_expected", c.tools_expected);
    c.validate();
    return c;
  }
};

enum class Verdict { Accept, Refuse };

inline std::string_view to_string(Verdict v) { return v == Verdict::Accept ? "accept" : "refuse"; }

struct Checkpoint {
  std::string id;
  std::string description;
  std::optional<std::string> category;  // subject | style | attribute | scene | action | text
};

inline bool is_checkpoint_category(std::string_view c) {
  for (std::string_view k : {"subject", "style", "attribute", "scene", "action", "text"}) {
    if (c == k) return true;
  }
  return false;
}

struct JudgeDecision {
  std::string checkpoint_id;
  Verdict verdict = Verdict::Refuse;
};

/// (n_valid + [order_ok]) / (n_required + 1)
inline Rational turn_format_score(const TurnValidation& v) {
  if (v.n_required < 1 || v.n_valid < 0 || v.n_valid > v.n_required) {
    throw Error(ErrorCode::InvalidRequest, "TurnValidation out of range");
  }
  return Rational(v.n_valid + (v.order_ok ? 1 : 0), v.n_required + 1);
}

/// Minimum turn score: one malformed turn caps the whole trajectory.
inline Rational format_reward(const Trajectory& t, const TagSchema& schema = TagSchema::defaults()) {
  if (t.turns.empty()) throw Error(ErrorCode::InvalidRequest, "trajectory has no turns");
  Rational best = Rational(1);
  for (const auto& turn : t.turns) best = std::min(best, turn_format_score(validate_turn(turn, schema)));
  return best;
}

inline const Rational kToolAll = Rational(1);
inline const Rational kToolSelfCorrected = Rational(4, 5);
inline const Rational kToolPartial = Rational(1, 10);
inline const Rational kToolNone = Rational(0);

/// Piecewise tool schedule over (all intermediate ok, final ok, any ok).
/// An empty call list scores 0 when tools were expected, else 1.
inline Rational tool_reward(std::span<const ToolOutcome> outcomes, bool tools_expected = true) {
  if (outcomes.empty()) return tools_expected ? kToolNone : kToolAll;
  bool intermediate_ok = true;
  bool any_ok = false;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    any_ok = any_ok || outcomes[i].success();
    if (i + 1 < outcomes.size()) intermediate_ok = intermediate_ok && outcomes[i].success();
  }
  const bool final_ok = outcomes.back().success();
  if (intermediate_ok && final_ok) return kToolAll;
  if (final_ok) return kToolSelfCorrected;
  if (any_ok) return kToolPartial;
  return kToolNone;
}

inline Rational result_reward(const OutputManifest& actual, int expected_images, int expected_videos) {
  if (expected_images < 0 || expected_videos < 0 || actual.image_count < 0 || actual.video_count < 0) {
    throw Error(ErrorCode::InvalidRequest, "negative output count");
  }
  return (actual.image_count == expected_images && actual.video_count == expected_videos) ? Rational(1)
                                                                                           : Rational(0);
}

/// Fraction of checkpoints the judge accepted.
inline Rational reflect_reward(std::span<const JudgeDecision> decisions, std::span<const Checkpoint> checkpoints) {
  if (checkpoints.empty()) throw Error(ErrorCode::InvalidRequest, "no checkpoints");
  std::map<std::string, Verdict> by_id;
  for (const auto& d : decisions) {
    if (!by_id.emplace(d.checkpoint_id, d.verdict).second) {
      throw Error(ErrorCode::DuplicateDecision, "checkpoint '" + d.checkpoint_id + "' judged twice");
    }
  }
  std::int64_t accepted = 0;
  for (const auto& c : checkpoints) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingDecision, "no verdict for checkpoint '" + c.id + "'");
    accepted += it->second == Verdict::Accept ? 1 : 0;
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw Error(ErrorCode::InvalidRequest, "verdict for unknown checkpoint '" + by_id.begin()->first + "'");
  }
  return Rational(accepted, static_cast<std::int64_t>(checkpoints.size()));
}

inline Rational plan_reward(int evaluator_score, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidConfig, "plan scale must be positive");
  if (evaluator_score < 0 || evaluator_score > scale) {
    throw Error(ErrorCode::ScoreOutOfRange,
                "plan score " + std::to_string(evaluator_score) + " outside 0.." + std::to_string(scale));
  }
  return Rational(evaluator_score, scale);
}

/// (1/|W|) * sum_i w_i * R_i over the configured dimensions.
inline Rational total_reward(const RewardVector& v, const RewardConfig& config) {
  config.validate();
  Rational sum;
  for (Dimension d : config.dimensions) {
    const auto& r = v.at(d);
    if (!r) throw Error(ErrorCode::MissingDimension, "dimension '" + std::string(to_string(d)) + "' not scored");
    sum += config.weight(d) * *r;
  }
  return sum / Rational(static_cast<std::int64_t>(config.dimensions.size()));
}

}  // namespace utpcr
