#pragma once

// Random inputs for property-style tests.

#include <random>
#include <string>
#include <vector>

#include "utpcr/parser.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr::testing {

inline std::string random_text(std::mt19937_64& rng, bool allow_empty = true) {
  static const std::vector<std::string> kWords = {
      "draw",  "a",   "cat", "<b>", "x < y", "tool",  "\"quoted\"", "line\nbreak", "  padded  ",
      "{}", "</other>", "éclair", "<|turn|> inline", "@meta", "100%"};
  std::uniform_int_distribution<int> len(allow_empty ? 0 : 1, 5);
  std::uniform_int_distribution<std::size_t> pick(0, kWords.size() - 1);
  std::string s;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[pick(rng)];
  }
  return s;
}

inline std::string random_tool_call(std::mt19937_64& rng) {
  std::bernoulli_distribution malformed(0.1);
  if (malformed(rng)) return "not json";
  return R"({"name":"generate_image","arguments":{"prompt":")" + std::to_string(rng() % 1000) + R"("}})";
}

inline std::string random_tool_result(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 9);
  int k = kind(rng);
  if (k < 6) return R"({"status":"success","detail":"img_)" + std::to_string(rng() % 100) + R"("})";
  if (k < 9) return R"({"status":"failure","detail":"timeout"})";
  return "garbled";
}

inline TagInstance make_tag(Tag t, std::string content) { return {TagKind::known(t), std::move(content), {}}; }

/// A turn that mostly follows its canonical pattern, with random defects:
/// empty tags, unknown tags, dropped or duplicated tags, repeated tool pairs.
inline std::vector<TagInstance> random_turn_tags(std::mt19937_64& rng, TurnKind kind, const TagSchema& schema) {
  std::bernoulli_distribution coin(0.15);
  std::vector<TagInstance> tags;
  for (const auto& k : schema.pattern(kind)) {
    if (coin(rng)) continue;  // drop
    std::string content;
    if (k.kind == Tag::tool_call) content = random_tool_call(rng);
    else if (k.kind == Tag::tool_result) content = random_tool_result(rng);
    else content = coin(rng) ? std::string() : random_text(rng, false);
    tags.push_back(make_tag(k.kind, content));
    if (coin(rng)) tags.push_back(make_tag(k.kind, random_text(rng)));  // duplicate
  }
  std::uniform_int_distribution<int> extra_pairs(0, 2);
  if (kind != TurnKind::Final) {
    int extra = coin(rng) ? extra_pairs(rng) : 0;
    for (int i = 0; i < extra; ++i) {
      tags.push_back(make_tag(Tag::tool_call, random_tool_call(rng)));
      tags.push_back(make_tag(Tag::tool_result, random_tool_result(rng)));
    }
  }
  if (coin(rng)) {
    std::uniform_int_distribution<std::size_t> at(0, tags.size());
    tags.insert(tags.begin() + static_cast<long>(at(rng)), TagInstance{TagKind::unknown("scratch_note"), random_text(rng), {}});
  }
  if (coin(rng) && tags.size() >= 2) std::swap(tags[0], tags[1]);
  return tags;
}

inline Trajectory random_trajectory(std::mt19937_64& rng, const TagSchema& schema = TagSchema::defaults()) {
  std::uniform_int_distribution<int> turns(1, 5);
  const int total = turns(rng);
  std::vector<std::vector<TagInstance>> turn_tags;
  for (int i = 1; i <= total; ++i) {
    auto tags = random_turn_tags(rng, classify_turn(i, total), schema);
    if (total == 1 && tags.empty()) tags.push_back(make_tag(Tag::final_answer, "done"));
    turn_tags.push_back(std::move(tags));
  }
  OutputManifest out;
  out.image_count = static_cast<int>(rng() % 4);
  out.video_count = static_cast<int>(rng() % 2);
  for (int i = 0; i < out.image_count; ++i) out.artifact_ids.push_back("img://" + std::to_string(rng() % 1000));
  return assemble_trajectory("traj-" + std::to_string(rng() % 100000), "q" + std::to_string(rng() % 100),
                             std::move(turn_tags), std::move(out));
}

/// A fully conforming turn for the given kind.
inline std::vector<TagInstance> conforming_tags(TurnKind kind, const TagSchema& schema = TagSchema::defaults()) {
  std::vector<TagInstance> tags;
  for (const auto& k : schema.pattern(kind)) {
    std::string content = "content";
    if (k.kind == Tag::tool_call) content = R"({"name":"generate_image","arguments":{"prompt":"cat"}})";
    if (k.kind == Tag::tool_result) content = R"({"status":"success","detail":"img_1"})";
    tags.push_back(make_tag(k.kind, content));
  }
  return tags;
}

inline Trajectory conforming_trajectory(int turns, std::string id = "t1", std::string query_id = "q1") {
  std::vector<std::vector<TagInstance>> tt;
  for (int i = 1; i <= turns; ++i) tt.push_back(conforming_tags(classify_turn(i, turns)));
  OutputManifest out{1, 0, {"img://final"}};
  return assemble_trajectory(std::move(id), std::move(query_id), std::move(tt), out);
}

}  // namespace utpcr::testing
