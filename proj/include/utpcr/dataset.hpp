#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/parser.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/task.hpp"

namespace utpcr {

inline constexpr int kDatasetSchemaVersion = 1;

struct LineError {
  int line = 0;
  ErrorCode code = ErrorCode::SchemaError;
  std::string field;
  std::string message;
};

/// All problems found in one JSONL file, line-numbered (1-based).
class DatasetError : public Error {
 public:
  DatasetError(std::string path, std::vector<LineError> errors)
      : Error(errors.empty() ? ErrorCode::SchemaError : errors.front().code, summarize(path, errors)),
        path_(std::move(path)),
        errors_(std::move(errors)) {}

  const std::vector<LineError>& errors() const { return errors_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<LineError> errors_;

  static std::string summarize(const std::string& path, const std::vector<LineError>& errors) {
    std::ostringstream os;
    os << path << ": " << errors.size() << " error(s)";
    for (const auto& e : errors) os << "\n  line " << e.line << ": " << e.message;
    return os.str();
  }
};

namespace detail {

/// Thrown inside record decoding; caught per line and collected.
struct FieldError {
  std::string field;
  std::string message;
};

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field) || j.at(field).is_null()) throw FieldError{field, "missing field '" + field + "'"};
  return j.at(field);
}

inline std::string require_string(const nlohmann::json& j, const std::string& field, bool non_empty = true) {
  const auto& v = require(j, field);
  if (!v.is_string()) throw FieldError{field, "field '" + field + "' must be a string"};
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) throw FieldError{field, "field '" + field + "' must not be empty"};
  return s;
}

inline int require_count(const nlohmann::json& j, const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FieldError{field, "field '" + field + "' must be a non-negative integer"};
  }
  return v.get<int>();
}

inline void check_version(const nlohmann::json& j) {
  if (j.contains("schema_version") &&
      (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kDatasetSchemaVersion)) {
    throw FieldError{"schema_version", "unsupported schema_version"};
  }
}

/// Reads a JSONL file, decoding each non-blank line with `decode(json) -> (id, record)`.
template <typename Record, typename Decode>
std::vector<Record> load_jsonl(const std::string& path, Decode decode) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::vector<Record> records;
  std::vector<LineError> errors;
  std::map<std::string, int> first_line_of;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      errors.push_back({line_no, ErrorCode::SchemaError, "", "line is not a JSON object"});
      continue;
    }
    try {
      check_version(j);
      auto [id, record] = decode(j);
      auto [it, inserted] = first_line_of.emplace(id, line_no);
      if (!inserted) {
        errors.push_back({line_no, ErrorCode::DuplicateId, "id",
                          "duplicate id '" + id + "' on lines " + std::to_string(it->second) + " and " +
                              std::to_string(line_no)});
        continue;
      }
      records.push_back(std::move(record));
    } catch (const FieldError& e) {
      errors.push_back({line_no, ErrorCode::SchemaError, e.field, e.message});
    } catch (const Error& e) {
      errors.push_back({line_no, ErrorCode::SchemaError, "", e.what()});
    } catch (const nlohmann::json::exception& e) {
      errors.push_back({line_no, ErrorCode::SchemaError, "", e.what()});
    }
  }
  if (!errors.empty()) throw DatasetError(path, std::move(errors));
  return records;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// tasks.jsonl

inline TaskRecord task_from_json(const nlohmann::json& j) {
  using detail::FieldError;
  TaskRecord t;
  t.id = detail::require_string(j, "id");
  auto type = task_type_from_string(detail::require_string(j, "task_type"));
  if (!type) throw FieldError{"task_type", "task_type must be single_img, multi_img or img2img"};
  t.task_type = *type;
  t.query = detail::require_string(j, "query");
  const auto& cps = detail::require(j, "checkpoints");
  if (!cps.is_array()) throw FieldError{"checkpoints", "checkpoints must be an array"};
  for (const auto& c : cps) {
    Checkpoint cp;
    cp.id = detail::require_string(c, "id");
    cp.description = detail::require_string(c, "description");
    if (c.contains("category") && !c.at("category").is_null()) {
      auto cat = c.at("category").get<std::string>();
      if (!is_checkpoint_category(cat)) throw FieldError{"category", "unknown checkpoint category '" + cat + "'"};
      cp.category = cat;
    }
    t.checkpoints.push_back(std::move(cp));
  }
  t.expected_images = detail::require_count(j, "expected_images");
  t.expected_videos = detail::require_count(j, "expected_videos");
  return t;
}

inline nlohmann::json to_json(const TaskRecord& t) {
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : t.checkpoints) {
    nlohmann::json cj = {{"id", c.id}, {"description", c.description}};
    if (c.category) cj["category"] = *c.category;
    cps.push_back(std::move(cj));
  }
  return {{"schema_version", kDatasetSchemaVersion},
          {"id", t.id},
          {"task_type", std::string(to_string(t.task_type))},
          {"query", t.query},
          {"checkpoints", std::move(cps)},
          {"expected_images", t.expected_images},
          {"expected_videos", t.expected_videos}};
}

inline std::vector<TaskRecord> load_tasks(const std::string& path) {
  return detail::load_jsonl<TaskRecord>(path, [](const nlohmann::json& j) {
    TaskRecord t = task_from_json(j);
    std::string id = t.id;
    return std::pair{std::move(id), std::move(t)};
  });
}

// ---------------------------------------------------------------------------
// trajectories.jsonl

inline TrajectoryRecord trajectory_record_from_json(const nlohmann::json& j, const TagSchema& schema) {
  using detail::FieldError;
  TrajectoryRecord rec;
  rec.source_model = j.value("source_model", "");
  OutputManifest outputs;
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    outputs.image_count = detail::require_count(o, "image_count");
    outputs.video_count = detail::require_count(o, "video_count");
    if (o.contains("artifact_ids")) outputs.artifact_ids = o.at("artifact_ids").get<std::vector<std::string>>();
  }
  if (j.contains("turns")) {
    const auto& turns = j.at("turns");
    if (!turns.is_array() || turns.empty()) throw FieldError{"turns", "turns must be a non-empty array"};
    std::vector<std::vector<TagInstance>> turn_tags;
    for (const auto& turn : turns) {
      std::vector<TagInstance> tags;
      for (const auto& tag : detail::require(turn, "tags")) {
        TagInstance ti;
        ti.kind = schema.kind_of(detail::require_string(tag, "kind"));
        ti.content = detail::require_string(tag, "content", /*non_empty=*/false);
        tags.push_back(std::move(ti));
      }
      turn_tags.push_back(std::move(tags));
    }
    rec.trajectory = assemble_trajectory(detail::require_string(j, "id"), detail::require_string(j, "query_id"),
                                         std::move(turn_tags), std::move(outputs));
  } else if (j.contains("transcript")) {
    try {
      rec.trajectory = parse_trajectory(detail::require_string(j, "transcript"), schema);
    } catch (const Error& e) {
      throw FieldError{"transcript", e.what()};
    }
    rec.trajectory.id = detail::require_string(j, "id");
    rec.trajectory.query_id = detail::require_string(j, "query_id");
    if (j.contains("outputs")) rec.trajectory.outputs = std::move(outputs);
  } else {
    throw FieldError{"turns", "missing field 'turns' (or 'transcript')"};
  }
  if (j.contains("reward_vector") && !j.at("reward_vector").is_null()) {
    rec.reward_vector = RewardVector::from_json(j.at("reward_vector"));
  }
  return rec;
}

inline nlohmann::json to_json(const TrajectoryRecord& rec, const TagSchema& schema = TagSchema::defaults()) {
  const Trajectory& t = rec.trajectory;
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : t.turns) {
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& tag : turn.tags) tags.push_back({{"kind", schema.name_of(tag.kind)}, {"content", tag.content}});
    turns.push_back({{"tags", std::move(tags)}});
  }
  nlohmann::json j = {{"schema_version", kDatasetSchemaVersion},
                      {"id", t.id},
                      {"query_id", t.query_id},
                      {"source_model", rec.source_model},
                      {"outputs",
                       {{"image_count", t.outputs.image_count},
                        {"video_count", t.outputs.video_count},
                        {"artifact_ids", t.outputs.artifact_ids}}},
                      {"turns", std::move(turns)}};
  if (rec.reward_vector) j["reward_vector"] = rec.reward_vector->to_json();
  return j;
}

inline std::vector<TrajectoryRecord> load_trajectories(const std::string& path,
                                                       const TagSchema& schema = TagSchema::defaults()) {
  return detail::load_jsonl<TrajectoryRecord>(path, [&schema](const nlohmann::json& j) {
    TrajectoryRecord r = trajectory_record_from_json(j, schema);
    std::string id = r.trajectory.id;
    return std::pair{std::move(id), std::move(r)};
  });
}

/// Writes one compact JSON document per line, LF-terminated.
inline void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  for (const auto& j : lines) out << j.dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// SFT filter

struct FilterSpec {
  std::vector<std::pair<Dimension, Rational>> required_exact = {
      {Dimension::plan, Rational(1)}, {Dimension::format, Rational(1)}, {Dimension::tool, Rational(1)}};

  static FilterSpec from_json(const nlohmann::json& j) {
    FilterSpec f;
    if (j.is_null() || !j.contains("required_exact")) return f;
    f.required_exact.clear();
    for (const auto& [k, v] : j.at("required_exact").items()) {
      f.required_exact.emplace_back(dimension_from_string(k), v.is_string() ? Rational::parse(v.get<std::string>())
                                                                            : Rational::approximate(v.get<double>()));
    }
    return f;
  }
};

struct DroppedRecord {
  TrajectoryRecord record;
  std::string reason;  // first failing dimension
};

struct FilterResult {
  std::vector<TrajectoryRecord> kept;
  std::vector<DroppedRecord> dropped;
};

/// Keeps records whose reward vector matches every required value exactly.
inline FilterResult sft_filter(const std::vector<TrajectoryRecord>& records, const FilterSpec& spec = {}) {
  FilterResult out;
  for (const auto& r : records) {
    if (!r.reward_vector) throw Error(ErrorCode::UnscoredRecord, "trajectory '" + r.trajectory.id + "' has no reward vector");
  }
  for (const auto& r : records) {
    std::optional<std::string> reason;
    for (const auto& [dim, value] : spec.required_exact) {
      const auto& got = r.reward_vector->at(dim);
      if (!got || *got != value) {
        reason = std::string(to_string(dim));
        break;
      }
    }
    if (reason) out.dropped.push_back({r, *reason});
    else out.kept.push_back(r);
  }
  return out;
}

}  // namespace utpcr
