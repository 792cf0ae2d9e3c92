#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr {

inline TurnKind classify_turn(int index, int total) {
  if (total < 1 || index < 1 || index > total) {
    throw Error(ErrorCode::InvalidRequest,
                "turn index " + std::to_string(index) + " outside 1.." + std::to_string(total));
  }
  if (index == total) return TurnKind::Final;
  if (index == 1) return TurnKind::First;
  return TurnKind::Middle;
}

inline const std::vector<TagKind>& canonical_pattern(TurnKind kind, const TagSchema& schema) {
  return schema.pattern(kind);
}

namespace detail {

inline ToolOutcome outcome_from_result(const std::string& content) {
  auto j = nlohmann::json::parse(content, nullptr, /*allow_exceptions=*/false);
  if (j.is_object() && j.contains("status") && j["status"].is_string()) {
    std::string status = j["status"].get<std::string>();
    std::optional<std::string> detail;
    if (j.contains("detail") && j["detail"].is_string()) detail = j["detail"].get<std::string>();
    if (status == "success") return {ToolStatus::Success, detail};
    if (status == "failure") return {ToolStatus::Failure, detail};
  }
  return {ToolStatus::Failure, std::string("unparseable tool_result")};
}

}  // namespace detail

/// Pairs every tool_call tag with the next tool_result tag of the same turn.
inline std::vector<ToolInvocation> derive_invocations(const std::vector<TagInstance>& tags) {
  std::vector<ToolInvocation> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != TagKind::known(Tag::tool_call)) continue;
    ToolInvocation inv;
    auto call = nlohmann::json::parse(tags[i].content, nullptr, false);
    if (call.is_object() && call.contains("name") && call["name"].is_string() &&
        !call["name"].get<std::string>().empty()) {
      inv.tool_name = call["name"].get<std::string>();
      if (call.contains("arguments")) inv.arguments = call["arguments"];
    } else {
      inv.tool_name = "<malformed>";
      inv.outcome = {ToolStatus::Failure, std::string("unparseable tool_call")};
      out.push_back(std::move(inv));
      continue;
    }
    inv.outcome = {ToolStatus::Failure, std::string("no tool_result")};
    for (std::size_t k = i + 1; k < tags.size(); ++k) {
      if (tags[k].kind == TagKind::known(Tag::tool_call)) break;
      if (tags[k].kind == TagKind::known(Tag::tool_result)) {
        inv.outcome = detail::outcome_from_result(tags[k].content);
        break;
      }
    }
    out.push_back(std::move(inv));
  }
  return out;
}

/// Builds a trajectory from per-turn tag lists: assigns indices, kinds and
/// tool invocations.
inline Trajectory assemble_trajectory(std::string id, std::string query_id,
                                      std::vector<std::vector<TagInstance>> turn_tags,
                                      OutputManifest outputs) {
  if (turn_tags.empty()) throw Error(ErrorCode::EmptyDocument, "trajectory has no turns");
  Trajectory t;
  t.id = std::move(id);
  t.query_id = std::move(query_id);
  t.outputs = std::move(outputs);
  const int total = static_cast<int>(turn_tags.size());
  for (int i = 0; i < total; ++i) {
    Turn turn;
    turn.index = i + 1;
    turn.kind = classify_turn(i + 1, total);
    turn.tags = std::move(turn_tags[static_cast<std::size_t>(i)]);
    turn.tool_invocations = derive_invocations(turn.tags);
    t.turns.push_back(std::move(turn));
  }
  return t;
}

enum class SegmentKind { Meta, Separator, OpenMarker, Content, CloseMarker, Interstitial, Skipped };

struct Segment {
  SegmentKind kind;
  ByteSpan span;
};

/// Lexical view of a flat transcript. `segments` tile the whole input.
struct ScanResult {
  std::vector<Segment> segments;
  std::vector<std::vector<TagInstance>> turns;
  std::vector<Diagnostic> diagnostics;
  nlohmann::json meta;
  bool has_content = false;
};

inline ScanResult scan_transcript(std::string_view doc, const TagSchema& schema) {
  ScanResult r;
  r.turns.emplace_back();
  std::size_t pos = 0;
  const std::size_t n = doc.size();

  auto push = [&](SegmentKind kind, std::size_t start, std::size_t end) {
    if (end <= start) return;
    if (kind == SegmentKind::Interstitial && !r.segments.empty() &&
        r.segments.back().kind == SegmentKind::Interstitial && r.segments.back().span.end == start) {
      r.segments.back().span.end = end;
      return;
    }
    r.segments.push_back({kind, {start, end}});
  };
  auto line_end = [&](std::size_t from) {
    std::size_t e = doc.find('\n', from);
    return e == std::string_view::npos ? n : e;
  };

  if (!schema.meta_prefix.empty() && doc.substr(0, schema.meta_prefix.size()) == schema.meta_prefix) {
    std::size_t e = line_end(0);
    std::size_t stop = e < n ? e + 1 : n;
    auto meta = nlohmann::json::parse(doc.substr(schema.meta_prefix.size(), e - schema.meta_prefix.size()),
                                      nullptr, false);
    if (meta.is_object()) {
      r.meta = std::move(meta);
      push(SegmentKind::Meta, 0, stop);
    } else {
      r.diagnostics.push_back({"BadMeta", "metadata line is not a JSON object", {0, stop}});
      push(SegmentKind::Skipped, 0, stop);
    }
    pos = stop;
  }

  while (pos < n) {
    const bool at_line_start = pos == 0 || doc[pos - 1] == '\n';
    if (at_line_start) {
      std::size_t e = line_end(pos);
      std::string_view line = doc.substr(pos, e - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line == schema.turn_separator) {
        std::size_t stop = e < n ? e + 1 : n;
        push(SegmentKind::Separator, pos, stop);
        r.turns.emplace_back();
        r.has_content = true;
        pos = stop;
        continue;
      }
    }
    const char c = doc[pos];
    if (c == '<') {
      std::size_t close = doc.find('>', pos + 1);
      std::string_view name =
          close == std::string_view::npos ? std::string_view{} : doc.substr(pos + 1, close - pos - 1);
      if (close != std::string_view::npos && TagSchema::is_identifier(name)) {
        const std::size_t content_start = close + 1;
        const std::string close_marker = "</" + std::string(name) + ">";
        std::size_t close_at = doc.find(close_marker, content_start);
        r.has_content = true;
        if (close_at == std::string_view::npos) {
          r.diagnostics.push_back({"UnterminatedTag", "no closing marker for <" + std::string(name) + ">",
                                   {pos, content_start}});
          push(SegmentKind::Skipped, pos, content_start);
          pos = content_start;
          continue;
        }
        TagInstance tag;
        tag.kind = schema.kind_of(std::string(name));
        tag.content = std::string(doc.substr(content_start, close_at - content_start));
        tag.span = {pos, close_at + close_marker.size()};
        push(SegmentKind::OpenMarker, pos, content_start);
        push(SegmentKind::Content, content_start, close_at);
        push(SegmentKind::CloseMarker, close_at, tag.span.end);
        pos = tag.span.end;
        r.turns.back().push_back(std::move(tag));
        continue;
      }
      if (pos + 1 < n && doc[pos + 1] == '/' && close != std::string_view::npos &&
          TagSchema::is_identifier(doc.substr(pos + 2, close - pos - 2))) {
        r.diagnostics.push_back({"StrayCloseMarker", "closing marker without an open marker", {pos, close + 1}});
      }
    }
    // Plain text up to the next candidate marker or line start.
    std::size_t next = pos + 1;
    while (next < n && doc[next] != '<' && doc[next - 1] != '\n') ++next;
    for (std::size_t i = pos; i < next; ++i) {
      if (!std::isspace(static_cast<unsigned char>(doc[i]))) {
        r.has_content = true;
        break;
      }
    }
    push(SegmentKind::Interstitial, pos, next);
    pos = next;
  }
  return r;
}

/// Parses a flat tagged transcript. Malformed regions become diagnostics.
inline Trajectory parse_trajectory(std::string_view document, const TagSchema& schema = TagSchema::defaults()) {
  ScanResult scan = scan_transcript(document, schema);
  if (!scan.has_content) throw Error(ErrorCode::EmptyDocument, "no turns found");

  std::string id, query_id;
  OutputManifest outputs;
  std::vector<Diagnostic> diags = std::move(scan.diagnostics);
  if (scan.meta.is_object()) {
    try {
      id = scan.meta.value("id", "");
      query_id = scan.meta.value("query_id", "");
      if (scan.meta.contains("outputs")) {
        const auto& o = scan.meta.at("outputs");
        outputs.image_count = o.value("image_count", 0);
        outputs.video_count = o.value("video_count", 0);
        outputs.artifact_ids = o.value("artifact_ids", std::vector<std::string>{});
      }
    } catch (const nlohmann::json::exception& e) {
      diags.push_back({"BadMeta", e.what(), {0, 0}});
    }
  }
  Trajectory t = assemble_trajectory(std::move(id), std::move(query_id), std::move(scan.turns), std::move(outputs));
  t.raw_text = std::string(document);
  t.diagnostics = std::move(diags);
  return t;
}

inline std::string serialize_trajectory(const Trajectory& t, const TagSchema& schema = TagSchema::defaults()) {
  nlohmann::json meta = {{"id", t.id},
                         {"query_id", t.query_id},
                         {"outputs",
                          {{"image_count", t.outputs.image_count},
                           {"video_count", t.outputs.video_count},
                           {"artifact_ids", t.outputs.artifact_ids}}}};
  std::string out = schema.meta_prefix + meta.dump() + "\n";
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (i > 0) out += schema.turn_separator + "\n";
    for (const auto& tag : t.turns[i].tags) {
      const std::string name = schema.name_of(tag.kind);
      if (!TagSchema::is_identifier(name)) {
        throw Error(ErrorCode::InvalidRequest, "tag name is not serializable: '" + name + "'");
      }
      const std::string close = "</" + name + ">";
      if (tag.content.find(close) != std::string::npos) {
        throw Error(ErrorCode::InvalidRequest, "tag content contains its own closing marker");
      }
      out += "<" + name + ">" + tag.content + close + "\n";
    }
  }
  return out;
}

}  // namespace utpcr
