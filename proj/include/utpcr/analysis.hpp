#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"
#include "utpcr/grpo.hpp"
#include "utpcr/judge.hpp"
#include "utpcr/rational.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/scoring.hpp"
#include "utpcr/task.hpp"

namespace utpcr {

// ---------------------------------------------------------------------------
// Benchmark scores

struct QueryScore {
  std::string query_id;
  TaskType task_type = TaskType::SingleImg;
  std::int64_t accepted = 0;
  std::int64_t checkpoints = 0;

  Rational score() const { return Rational(accepted, checkpoints); }
};

struct TypeScore {
  Rational mean;
  int n_queries = 0;
};

struct BenchReport {
  std::map<std::string, QueryScore> per_query;
  std::map<TaskType, TypeScore> per_task_type;  // types without queries are absent
  int n_queries = 0;
};

/// Recomputes the per-type means from the per-query rows.
inline void aggregate_by_type(BenchReport& report) {
  std::map<TaskType, std::pair<Rational, int>> acc;
  for (const auto& [id, q] : report.per_query) {
    auto& [sum, n] = acc[q.task_type];
    sum += q.score();
    ++n;
  }
  report.per_task_type.clear();
  for (const auto& [type, sn] : acc) report.per_task_type[type] = {sn.first / Rational(sn.second), sn.second};
  report.n_queries = static_cast<int>(report.per_query.size());
}

/// Per-query satisfied-checkpoint fraction and per-task-type means.
inline BenchReport bench_score(const std::vector<TaskRecord>& tasks, const std::vector<TrajectoryRecord>& trajectories,
                               Judge& judge) {
  std::map<std::string, const TaskRecord*> by_id;
  for (const auto& t : tasks) by_id[t.id] = &t;
  BenchReport report;
  for (const auto& rec : trajectories) {
    const Trajectory& t = rec.trajectory;
    auto it = by_id.find(t.query_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::UnmatchedTrajectory, "trajectory '" + t.id + "' references unknown query '" + t.query_id + "'");
    }
    const TaskRecord& task = *it->second;
    if (report.per_query.count(task.id)) {
      throw Error(ErrorCode::DuplicateId, "more than one trajectory for query '" + task.id + "'");
    }
    Rational frac = judged_reflect_reward(judge, t, task);
    QueryScore q;
    q.query_id = task.id;
    q.task_type = task.task_type;
    q.checkpoints = static_cast<std::int64_t>(task.checkpoints.size());
    q.accepted = (frac * Rational(q.checkpoints)).num();
    report.per_query[task.id] = q;
  }
  aggregate_by_type(report);
  return report;
}

/// Mean plan score over scored trajectories.
inline Rational plan_score_aggregate(const std::vector<RewardVector>& vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "plan score mean of an empty set");
  Rational sum;
  for (const auto& v : vectors) {
    if (!v.plan) throw Error(ErrorCode::MissingDimension, "reward vector without a plan score");
    sum += *v.plan;
  }
  return sum / Rational(static_cast<std::int64_t>(vectors.size()));
}

// ---------------------------------------------------------------------------
// Reflection quality

struct ReflectionHistogram {
  int under = 0;
  int good = 0;
  int over = 0;
  int n_reflections = 0;
  std::string rubric_version{kReflectionRubricVersion};

  double pct(int count) const { return n_reflections == 0 ? 0.0 : 100.0 * count / n_reflections; }
  double under_pct() const { return pct(under); }
  double good_pct() const { return pct(good); }
  double over_pct() const { return pct(over); }
};

struct ReflectionInstance {
  std::string key;  // "<trajectory id>/turn<k>/reflection<i>"
  std::string query_id;
  std::string payload;
};

/// Every reflection tag with the context a judge needs: the previous turn's
/// tool results (what is being reflected on) and the rest of the same turn
/// (what the agent did about it).
inline std::vector<ReflectionInstance> reflection_instances(const Trajectory& t) {
  std::vector<ReflectionInstance> out;
  for (std::size_t ti = 0; ti < t.turns.size(); ++ti) {
    const Turn& turn = t.turns[ti];
    int r_index = 0;
    for (std::size_t k = 0; k < turn.tags.size(); ++k) {
      if (turn.tags[k].kind != TagKind::known(Tag::reflection)) continue;
      ++r_index;
      std::string before, after;
      if (ti > 0) {
        for (const auto& tag : t.turns[ti - 1].tags) {
          if (tag.kind == TagKind::known(Tag::tool_result)) before += tag.content + "\n";
        }
      }
      for (std::size_t m = k + 1; m < turn.tags.size(); ++m) {
        after += "[" + std::string(turn.tags[m].kind.is_unknown() ? turn.tags[m].kind.name
                                                                  : canonical_name(turn.tags[m].kind.kind)) +
                 "] " + turn.tags[m].content + "\n";
      }
      ReflectionInstance inst;
      inst.key = t.id + "/turn" + std::to_string(turn.index) + "/reflection" + std::to_string(r_index);
      inst.query_id = t.query_id;
      inst.payload = "Previous tool results:\n" + (before.empty() ? std::string("(none)\n") : before) +
                     "Reflection:\n" + turn.tags[k].content + "\nFollowing steps:\n" +
                     (after.empty() ? std::string("(none)\n") : after);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

inline ReflectionHistogram reflection_quality_histogram(const std::vector<TrajectoryRecord>& trajectories, Judge& judge,
                                                        const std::vector<TaskRecord>& tasks = {}) {
  std::map<std::string, std::string> query_text;
  for (const auto& t : tasks) query_text[t.id] = t.query;
  std::vector<std::future<JudgeResponse>> pending;
  for (const auto& rec : trajectories) {
    for (auto& inst : reflection_instances(rec.trajectory)) {
      JudgeRequest req;
      req.id = judge.next_request_id();
      req.kind = RequestKind::ReflectionQuality;
      req.query_id = inst.query_id;
      if (auto it = query_text.find(inst.query_id); it != query_text.end()) req.query = it->second;
      req.key = inst.key;
      req.payload = std::move(inst.payload);
      pending.push_back(judge.submit(std::move(req)));
    }
  }
  if (pending.empty()) throw Error(ErrorCode::NoReflections, "no reflection tags in the input");
  ReflectionHistogram h;
  for (auto& f : pending) {
    auto resp = f.get();
    if (!resp.quality_label) throw Error(ErrorCode::MalformedReply, "judge returned no reflection label");
    switch (*resp.quality_label) {
      case ReflectionLabel::Under: ++h.under; break;
      case ReflectionLabel::Good: ++h.good; break;
      case ReflectionLabel::Over: ++h.over; break;
    }
  }
  h.n_reflections = h.under + h.good + h.over;
  return h;
}

// ---------------------------------------------------------------------------
// Emission

enum class ReportFormat { Csv, Json };

namespace report {

inline std::string number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string one_decimal(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  return buf;
}

/// RFC 4180 quoting: fields containing comma, quote or line breaks are quoted.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace report

// BenchReport ---------------------------------------------------------------

inline std::string to_csv(const BenchReport& r) {
  std::string out = report::csv_line({"task_type", "mean_score", "n_queries"});
  for (const auto& [type, s] : r.per_task_type) {
    out += report::csv_line({std::string(to_string(type)), report::number(s.mean.to_double()), std::to_string(s.n_queries)});
  }
  return out;
}

/// Per-query rows, from which the per-type aggregates can be recomputed.
inline std::string per_query_csv(const BenchReport& r) {
  std::string out = report::csv_line({"query_id", "task_type", "score", "accepted", "checkpoints"});
  for (const auto& [id, q] : r.per_query) {
    out += report::csv_line({id, std::string(to_string(q.task_type)), report::number(q.score().to_double()),
                             std::to_string(q.accepted), std::to_string(q.checkpoints)});
  }
  return out;
}

inline nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& [id, q] : r.per_query) {
    per_query.push_back({{"query_id", id},
                         {"task_type", std::string(to_string(q.task_type))},
                         {"score", q.score().to_double()},
                         {"accepted", q.accepted},
                         {"checkpoints", q.checkpoints}});
  }
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, s] : r.per_task_type) {
    per_type[std::string(to_string(type))] = {{"mean_score", s.mean.to_double()},
                                              {"exact", s.mean.to_string()},
                                              {"n_queries", s.n_queries}};
  }
  return {{"report", "bench"}, {"n_queries", r.n_queries}, {"per_task_type", per_type}, {"per_query", per_query}};
}

inline BenchReport bench_report_from_json(const nlohmann::json& j) {
  BenchReport r;
  for (const auto& q : j.at("per_query")) {
    QueryScore s;
    s.query_id = q.at("query_id").get<std::string>();
    auto type = task_type_from_string(q.at("task_type").get<std::string>());
    if (!type) throw Error(ErrorCode::SchemaError, "bad task_type in bench report");
    s.task_type = *type;
    s.accepted = q.at("accepted").get<std::int64_t>();
    s.checkpoints = q.at("checkpoints").get<std::int64_t>();
    r.per_query[s.query_id] = s;
  }
  aggregate_by_type(r);
  return r;
}

// ReflectionHistogram -------------------------------------------------------

inline std::string to_csv(const ReflectionHistogram& h) {
  std::string out = report::csv_line({"label", "count", "percent", "rubric_version"});
  out += report::csv_line({"under", std::to_string(h.under), report::one_decimal(h.under_pct()), h.rubric_version});
  out += report::csv_line({"good", std::to_string(h.good), report::one_decimal(h.good_pct()), h.rubric_version});
  out += report::csv_line({"over", std::to_string(h.over), report::one_decimal(h.over_pct()), h.rubric_version});
  return out;
}

inline nlohmann::json to_json(const ReflectionHistogram& h) {
  return {{"report", "reflection_quality"},
          {"rubric_version", h.rubric_version},
          {"n_reflections", h.n_reflections},
          {"counts", {{"under", h.under}, {"good", h.good}, {"over", h.over}}},
          {"percent",
           {{"under", report::one_decimal(h.under_pct())},
            {"good", report::one_decimal(h.good_pct())},
            {"over", report::one_decimal(h.over_pct())}}}};
}

inline ReflectionHistogram histogram_from_json(const nlohmann::json& j) {
  ReflectionHistogram h;
  h.rubric_version = j.at("rubric_version").get<std::string>();
  h.under = j.at("counts").at("under").get<int>();
  h.good = j.at("counts").at("good").get<int>();
  h.over = j.at("counts").at("over").get<int>();
  h.n_reflections = j.at("n_reflections").get<int>();
  if (h.under + h.good + h.over != h.n_reflections) throw Error(ErrorCode::SchemaError, "histogram counts do not add up");
  return h;
}

// Sweep ---------------------------------------------------------------------

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> kColumns = {
      "sigma",          "horizon",       "sigma_eff",      "sigma_total",   "sigma_tau",
      "sigma_a",        "sigma_s",       "residual",       "ratio_tau_a",   "snr",
      "se_sigma_total", "se_sigma_tau",  "se_sigma_a",     "se_sigma_s",    "se_residual",
      "se_ratio_tau_a", "se_snr",        "samples_outer",  "samples_inner", "seed"};
  return kColumns;
}

inline std::string to_csv(const std::vector<grpo::SweepRow>& rows) {
  using report::number;
  std::string out = report::csv_line(sweep_columns());
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += report::csv_line({number(row.sigma), std::to_string(row.horizon), number(row.sigma_eff),
                             number(r.sigma_total), number(r.sigma_tau), number(r.sigma_a), number(r.sigma_s),
                             number(r.residual), number(r.ratio_tau_a), number(r.snr), number(r.se.sigma_total),
                             number(r.se.sigma_tau), number(r.se.sigma_a), number(r.se.sigma_s),
                             number(r.se.residual), number(r.se.ratio_tau_a), number(r.se.snr),
                             std::to_string(r.samples_outer), std::to_string(r.samples_inner),
                             std::to_string(r.seed)});
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<grpo::SweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    arr.push_back({{"sigma", row.sigma}, {"horizon", row.horizon}, {"sigma_eff", row.sigma_eff},
                   {"report", row.report.to_json()}});
  }
  return {{"report", "variance_sweep"}, {"rows", arr}};
}

inline std::vector<grpo::SweepRow> sweep_from_json(const nlohmann::json& j) {
  std::vector<grpo::SweepRow> rows;
  for (const auto& r : j.at("rows")) {
    grpo::SweepRow row;
    row.sigma = r.at("sigma").get<double>();
    row.horizon = r.at("horizon").get<int>();
    row.sigma_eff = r.at("sigma_eff").get<double>();
    row.report = grpo::VarianceReport::from_json(r.at("report"));
    rows.push_back(row);
  }
  return rows;
}

// Plan aggregate ------------------------------------------------------------

struct PlanAggregate {
  Rational mean;
  int n = 0;
};

inline std::string to_csv(const PlanAggregate& p) {
  return report::csv_line({"mean_plan_score", "exact", "n"}) +
         report::csv_line({report::number(p.mean.to_double()), p.mean.to_string(), std::to_string(p.n)});
}

inline nlohmann::json to_json(const PlanAggregate& p) {
  return {{"report", "plan_score"}, {"mean_plan_score", p.mean.to_double()}, {"exact", p.mean.to_string()}, {"n", p.n}};
}

/// Writes a report; the same report always yields the same bytes.
template <typename Report>
void emit_report(const Report& r, ReportFormat format, const std::string& path) {
  report::write_file(path, format == ReportFormat::Csv ? to_csv(r) : to_json(r).dump(2) + "\n");
}

}  // namespace utpcr
