#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace utpcr {

enum class Tag {
  understanding,
  thinking,
  planning,
  tool_call,
  tool_result,
  reflection,
  final_answer,
  unknown,
};

inline constexpr Tag kKnownTags[] = {Tag::understanding, Tag::thinking,   Tag::planning,
                                     Tag::tool_call,     Tag::tool_result, Tag::reflection,
                                     Tag::final_answer};

inline std::string_view canonical_name(Tag tag) {
  switch (tag) {
    case Tag::understanding: return "understanding";
    case Tag::thinking: return "thinking";
    case Tag::planning: return "planning";
    case Tag::tool_call: return "tool_call";
    case Tag::tool_result: return "tool_result";
    case Tag::reflection: return "reflection";
    case Tag::final_answer: return "final_answer";
    case Tag::unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<Tag> tag_from_canonical_name(std::string_view name) {
  for (Tag t : kKnownTags) {
    if (canonical_name(t) == name) return t;
  }
  return std::nullopt;
}

/// A tag kind; unrecognised names are kept verbatim in `name` with kind unknown.
struct TagKind {
  Tag kind = Tag::unknown;
  std::string name;  // only meaningful for Tag::unknown

  static TagKind known(Tag t) { return {t, {}}; }
  static TagKind unknown(std::string n) { return {Tag::unknown, std::move(n)}; }

  bool is_unknown() const { return kind == Tag::unknown; }
  friend bool operator==(const TagKind&, const TagKind&) = default;
};

struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct TagInstance {
  TagKind kind;
  std::string content;
  ByteSpan span;  // open marker start .. close marker end

  bool empty_content() const {
    return content.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
  }
};

enum class TurnKind { First, Middle, Final };

inline std::string_view to_string(TurnKind k) {
  switch (k) {
    case TurnKind::First: return "first";
    case TurnKind::Middle: return "middle";
    case TurnKind::Final: return "final";
  }
  return "final";
}

enum class ToolStatus { Success, Failure };

struct ToolOutcome {
  ToolStatus status = ToolStatus::Failure;
  std::optional<std::string> detail;

  bool success() const { return status == ToolStatus::Success; }
  friend bool operator==(const ToolOutcome&, const ToolOutcome&) = default;
};

struct ToolInvocation {
  std::string tool_name;
  nlohmann::json arguments;
  ToolOutcome outcome;

  friend bool operator==(const ToolInvocation&, const ToolInvocation&) = default;
};

struct Turn {
  int index = 1;
  TurnKind kind = TurnKind::Final;
  std::vector<TagInstance> tags;
  std::vector<ToolInvocation> tool_invocations;
};

struct OutputManifest {
  int image_count = 0;
  int video_count = 0;
  std::vector<std::string> artifact_ids;

  friend bool operator==(const OutputManifest&, const OutputManifest&) = default;
};

/// A problem found while parsing; the parser reports and moves on.
struct Diagnostic {
  std::string code;
  std::string message;
  ByteSpan span;
};

struct Trajectory {
  std::string id;
  std::string query_id;
  std::vector<Turn> turns;
  OutputManifest outputs;
  std::optional<std::string> raw_text;
  std::vector<Diagnostic> diagnostics;

  std::vector<ToolOutcome> tool_outcomes() const {
    std::vector<ToolOutcome> out;
    for (const auto& turn : turns) {
      for (const auto& inv : turn.tool_invocations) out.push_back(inv.outcome);
    }
    return out;
  }
};

/// Equality ignoring byte spans, raw text and diagnostics.
inline bool structurally_equal(const Trajectory& a, const Trajectory& b) {
  if (a.id != b.id || a.query_id != b.query_id || a.outputs != b.outputs) return false;
  if (a.turns.size() != b.turns.size()) return false;
  for (std::size_t i = 0; i < a.turns.size(); ++i) {
    const Turn& x = a.turns[i];
    const Turn& y = b.turns[i];
    if (x.index != y.index || x.kind != y.kind) return false;
    if (x.tool_invocations != y.tool_invocations) return false;
    if (x.tags.size() != y.tags.size()) return false;
    for (std::size_t j = 0; j < x.tags.size(); ++j) {
      if (x.tags[j].kind != y.tags[j].kind || x.tags[j].content != y.tags[j].content) return false;
    }
  }
  return true;
}

struct TurnValidation {
  int n_valid = 0;
  int n_required = 1;
  bool order_ok = false;

  friend bool operator==(const TurnValidation&, const TurnValidation&) = default;
};

}  // namespace utpcr
