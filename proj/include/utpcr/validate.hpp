#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "utpcr/error.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr {

namespace detail {

inline int count_kind(const std::vector<TagKind>& seq, const TagKind& k) {
  int c = 0;
  for (const auto& x : seq) c += (x == k) ? 1 : 0;
  return c;
}

/// The pattern with its trailing (tool_call, tool_result) pair repeated to
/// match the number of calls in the turn, when repetition is allowed.
inline std::vector<TagKind> expand_pattern(const Turn& turn, const std::vector<TagKind>& pattern,
                                           bool repeat_tool_pairs) {
  std::vector<TagKind> expanded = pattern;
  const TagKind call = TagKind::known(Tag::tool_call);
  const TagKind result = TagKind::known(Tag::tool_result);
  const std::size_t n = pattern.size();
  if (!repeat_tool_pairs || n < 2 || pattern[n - 2] != call || pattern[n - 1] != result) return expanded;
  if (count_kind(pattern, call) != 1 || count_kind(pattern, result) != 1) return expanded;
  int calls = 0, results = 0;
  for (const auto& tag : turn.tags) {
    calls += tag.kind == call ? 1 : 0;
    results += tag.kind == result ? 1 : 0;
  }
  if (calls != results || calls < 2) return expanded;
  for (int i = 1; i < calls; ++i) {
    expanded.push_back(call);
    expanded.push_back(result);
  }
  return expanded;
}

struct KindCheck {
  int required = 0;
  int found = 0;
  int empty = 0;
  bool ok() const { return found == required && empty == 0; }
};

inline std::map<std::string, KindCheck> check_kinds(const Turn& turn, const std::vector<TagKind>& expanded) {
  std::map<std::string, KindCheck> checks;
  auto key = [](const TagKind& k) { return k.is_unknown() ? "?" + k.name : std::string(canonical_name(k.kind)); };
  for (const auto& k : expanded) checks[key(k)].required++;
  for (const auto& tag : turn.tags) {
    auto it = checks.find(key(tag.kind));
    if (it == checks.end()) continue;
    it->second.found++;
    if (tag.empty_content()) it->second.empty++;
  }
  return checks;
}

inline std::vector<TagKind> pattern_subsequence(const Turn& turn, const std::vector<TagKind>& pattern) {
  std::vector<TagKind> sub;
  for (const auto& tag : turn.tags) {
    if (count_kind(pattern, tag.kind) > 0) sub.push_back(tag.kind);
  }
  return sub;
}

}  // namespace detail

/// Slot validity and order check of one turn against a tag pattern.
///
/// A kind's slots are valid iff the kind occurs exactly as many times as the
/// pattern demands and none of its occurrences is blank. Tags of kinds outside
/// the pattern are ignored for both counts and order.
inline TurnValidation validate_turn(const Turn& turn, const std::vector<TagKind>& pattern,
                                    bool repeat_tool_pairs = false) {
  if (pattern.empty()) throw Error(ErrorCode::InvalidRequest, "empty tag pattern");
  const auto expanded = detail::expand_pattern(turn, pattern, repeat_tool_pairs);
  const auto checks = detail::check_kinds(turn, expanded);
  TurnValidation v;
  v.n_required = static_cast<int>(pattern.size());
  for (const auto& k : pattern) {
    auto key = k.is_unknown() ? "?" + k.name : std::string(canonical_name(k.kind));
    if (checks.at(key).ok()) v.n_valid++;
  }
  v.order_ok = detail::pattern_subsequence(turn, expanded) == expanded;
  return v;
}

inline TurnValidation validate_turn(const Turn& turn, const TagSchema& schema) {
  return validate_turn(turn, schema.pattern(turn.kind), schema.repeat_tool_pairs);
}

/// Human-readable defects of a turn; empty iff the turn is fully conforming.
inline std::vector<std::string> describe_defects(const Turn& turn, const TagSchema& schema) {
  const auto& pattern = schema.pattern(turn.kind);
  const auto expanded = detail::expand_pattern(turn, pattern, schema.repeat_tool_pairs);
  const auto checks = detail::check_kinds(turn, expanded);
  std::vector<std::string> out;
  std::vector<std::string> seen;
  for (const auto& k : expanded) {
    const std::string name = schema.name_of(k);
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) continue;
    seen.push_back(name);
    const auto& c = checks.at(k.is_unknown() ? "?" + k.name : std::string(canonical_name(k.kind)));
    if (c.found == 0) {
      out.push_back("missing <" + name + ">");
    } else if (c.found < c.required) {
      out.push_back("expected " + std::to_string(c.required) + " <" + name + "> tags, found " +
                    std::to_string(c.found));
    } else if (c.found > c.required) {
      out.push_back("duplicate <" + name + "> (" + std::to_string(c.found) + " found, " +
                    std::to_string(c.required) + " allowed)");
    }
    if (c.empty > 0) out.push_back("empty <" + name + ">");
  }
  if (detail::pattern_subsequence(turn, expanded) != expanded) out.push_back("tag order");
  return out;
}

}  // namespace utpcr
