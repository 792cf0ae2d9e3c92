#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr {

/// Surface syntax and turn patterns of the tagged transcript format.
///
/// Tags are written `<name>content</name>`. Turns in a flat transcript are
/// separated by a line consisting solely of `turn_separator`.
struct TagSchema {
  int version = 1;
  std::map<Tag, std::string> tag_names;
  std::vector<TagKind> first_pattern;
  std::vector<TagKind> middle_pattern;
  std::vector<TagKind> final_pattern;
  std::string turn_separator = "<|turn|>";
  std::string meta_prefix = "@meta ";
  bool repeat_tool_pairs = true;

  static TagSchema defaults() {
    TagSchema s;
    for (Tag t : kKnownTags) s.tag_names[t] = std::string(canonical_name(t));
    auto k = [](Tag t) { return TagKind::known(t); };
    s.first_pattern = {k(Tag::thinking), k(Tag::planning), k(Tag::thinking), k(Tag::tool_call),
                       k(Tag::tool_result)};
    s.middle_pattern = {k(Tag::reflection), k(Tag::thinking), k(Tag::tool_call), k(Tag::tool_result)};
    s.final_pattern = {k(Tag::reflection), k(Tag::thinking), k(Tag::final_answer)};
    return s;
  }

  const std::vector<TagKind>& pattern(TurnKind kind) const {
    switch (kind) {
      case TurnKind::First: return first_pattern;
      case TurnKind::Middle: return middle_pattern;
      case TurnKind::Final: return final_pattern;
    }
    return final_pattern;
  }

  std::string name_of(const TagKind& kind) const {
    if (kind.is_unknown()) return kind.name;
    auto it = tag_names.find(kind.kind);
    return it != tag_names.end() ? it->second : std::string(canonical_name(kind.kind));
  }

  TagKind kind_of(const std::string& name) const {
    for (const auto& [tag, n] : tag_names) {
      if (n == name) return TagKind::known(tag);
    }
    return TagKind::unknown(name);
  }

  void validate() const {
    for (TurnKind k : {TurnKind::First, TurnKind::Middle, TurnKind::Final}) {
      if (pattern(k).empty()) {
        throw Error(ErrorCode::InvalidConfig, "empty pattern for turn kind " + std::string(to_string(k)));
      }
      for (const auto& tk : pattern(k)) {
        if (tk.is_unknown()) throw Error(ErrorCode::InvalidConfig, "pattern uses unknown tag '" + tk.name + "'");
      }
    }
    std::map<std::string, int> seen;
    for (const auto& [tag, name] : tag_names) {
      if (!is_identifier(name)) throw Error(ErrorCode::InvalidConfig, "tag name is not an identifier: '" + name + "'");
      if (++seen[name] > 1) throw Error(ErrorCode::InvalidConfig, "tag name used twice: '" + name + "'");
    }
    if (turn_separator.empty() || turn_separator.find('\n') != std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "turn separator must be a non-empty single line");
    }
  }

  static bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!head(s.front())) return false;
    for (char c : s) {
      if (!head(c) && !(c >= '0' && c <= '9')) return false;
    }
    return true;
  }

  /// Overlay a `"schema"` config object on top of the defaults.
  static TagSchema from_json(const nlohmann::json& j) {
    TagSchema s = defaults();
    if (j.is_null()) return s;
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "schema must be an object");
    if (j.contains("version")) s.version = j.at("version").get<int>();
    if (s.version != 1) throw Error(ErrorCode::InvalidConfig, "unsupported schema version");
    if (j.contains("tags")) {
      for (const auto& [key, value] : j.at("tags").items()) {
        auto tag = tag_from_canonical_name(key);
        if (!tag) throw Error(ErrorCode::InvalidConfig, "unknown tag kind '" + key + "'");
        s.tag_names[*tag] = value.get<std::string>();
      }
    }
    auto read_pattern = [&](const char* key, std::vector<TagKind>& out) {
      if (!j.contains("patterns") || !j.at("patterns").contains(key)) return;
      out.clear();
      for (const auto& item : j.at("patterns").at(key)) {
        auto tag = tag_from_canonical_name(item.get<std::string>());
        out.push_back(tag ? TagKind::known(*tag) : TagKind::unknown(item.get<std::string>()));
      }
    };
    read_pattern("first", s.first_pattern);
    read_pattern("middle", s.middle_pattern);
    read_pattern("final", s.final_pattern);
    if (j.contains("turn_separator")) s.turn_separator = j.at("turn_separator").get<std::string>();
    if (j.contains("repeat_tool_pairs")) s.repeat_tool_pairs = j.at("repeat_tool_pairs").get<bool>();
    s.validate();
    return s;
  }
};

}  // namespace utpcr
