// utpcr: validate, score, filter, benchmark and simulate from the command line.
//
// Exit codes: 0 success, 1 domain failure (defects, unscored lines, ...),
// 2 usage, configuration or I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "utpcr/utpcr.hpp"

namespace fs = std::filesystem;
using namespace utpcr;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string judge_backend;
  std::string judge_script;
  std::string judge_endpoint;
  std::string out_dir = ".";
  int verbosity = 0;
};

bool is_usage_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::SchemaError:
    case ErrorCode::DuplicateId:
      return true;
    default:
      return false;
  }
}

/// defaults < config file < environment < flags
Config resolve_config(const GlobalOptions& g) {
  Config cfg = g.config_path.empty() ? Config{} : Config::load(g.config_path);
  cfg.judge.apply_env();
  if (!g.judge_backend.empty()) {
    if (g.judge_backend == "mock") cfg.judge.backend = JudgeBackend::Mock;
    else if (g.judge_backend == "scripted") cfg.judge.backend = JudgeBackend::Scripted;
    else if (g.judge_backend == "remote") cfg.judge.backend = JudgeBackend::Remote;
    else throw Error(ErrorCode::InvalidConfig, "unknown judge backend '" + g.judge_backend + "'");
  }
  if (!g.judge_script.empty()) cfg.judge.script_path = g.judge_script;
  if (!g.judge_endpoint.empty()) cfg.judge.endpoint = g.judge_endpoint;
  if (g.seed) {
    cfg.simulate.estimator.seed = *g.seed;
    cfg.simulate.has_seed = true;
  }
  cfg.schema.validate();
  cfg.reward.validate();
  cfg.judge.validate();
  return cfg;
}

fs::path out_path(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void log(const GlobalOptions& g, int level, const std::string& msg) {
  if (g.verbosity >= level) std::cerr << msg << "\n";
}

std::unique_ptr<Judge> judge_for(const Config& cfg, const GlobalOptions& g) {
  auto judge = make_judge(cfg.judge);
  judge->on_diagnostic = [&g](const std::string& m) { log(g, 1, "judge: " + m); };
  return judge;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

int cmd_validate(const GlobalOptions& g, const std::string& input) {
  Config cfg = resolve_config(g);
  std::vector<Trajectory> trajs;
  int defects = 0;
  if (has_suffix(input, ".jsonl")) {
    try {
      for (auto& r : load_trajectories(input, cfg.schema)) trajs.push_back(std::move(r.trajectory));
    } catch (const DatasetError& e) {
      for (const auto& le : e.errors()) {
        std::cout << "line " << le.line << "\t-\t" << le.message << "\n";
        ++defects;
      }
      return kDomainFailure;
    }
  } else {
    try {
      trajs.push_back(parse_trajectory(read_text(input), cfg.schema));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IoError) throw;
      std::cout << input << "\t-\t" << e.what() << "\n";
      return kDomainFailure;
    }
  }
  for (const auto& t : trajs) {
    const std::string id = t.id.empty() ? input : t.id;
    for (const auto& d : t.diagnostics) {
      std::cout << id << "\t-\t" << d.code << ": " << d.message << "\n";
      ++defects;
    }
    for (const auto& turn : t.turns) {
      for (const auto& msg : describe_defects(turn, cfg.schema)) {
        std::cout << id << "\t" << turn.index << "\t" << msg << "\n";
        ++defects;
      }
    }
  }
  log(g, 1, std::to_string(trajs.size()) + " trajectories, " + std::to_string(defects) + " defects");
  return defects == 0 ? kOk : kDomainFailure;
}

int cmd_score(const GlobalOptions& g, const std::string& tasks_path, const std::string& trajs_path) {
  Config cfg = resolve_config(g);
  auto tasks = load_tasks(tasks_path);
  auto trajs = load_trajectories(trajs_path, cfg.schema);
  std::map<std::string, const TaskRecord*> by_id;
  for (const auto& t : tasks) by_id[t.id] = &t;
  auto judge = judge_for(cfg, g);

  std::vector<nlohmann::json> score_lines, scored_records;
  int failures = 0;
  for (auto& rec : trajs) {
    const Trajectory& t = rec.trajectory;
    nlohmann::json line = {{"id", t.id}, {"query_id", t.query_id}};
    try {
      auto it = by_id.find(t.query_id);
      if (it == by_id.end()) throw Error(ErrorCode::UnmatchedTrajectory, "unknown query '" + t.query_id + "'");
      ScoreResult res = score_trajectory(t, *it->second, *judge, cfg.reward, cfg.schema);
      line["reward_vector"] = res.rewards.to_json();
      nlohmann::json diags = nlohmann::json::array();
      for (const auto& d : res.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
      line["diagnostics"] = diags;
      rec.reward_vector = res.rewards;
      scored_records.push_back(to_json(rec, cfg.schema));
    } catch (const Error& e) {
      line["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      ++failures;
      log(g, 1, "score " + t.id + ": " + e.what());
    }
    score_lines.push_back(std::move(line));
  }
  write_jsonl(out_path(g, "scores.jsonl").string(), score_lines);
  write_jsonl(out_path(g, "scored_trajectories.jsonl").string(), scored_records);
  std::cout << "scored " << (trajs.size() - static_cast<std::size_t>(failures)) << "/" << trajs.size() << "\n";
  return failures == 0 ? kOk : kDomainFailure;
}

int cmd_filter(const GlobalOptions& g, const std::string& input) {
  Config cfg = resolve_config(g);
  auto records = load_trajectories(input, cfg.schema);
  FilterResult res = sft_filter(records, cfg.filter);
  std::vector<nlohmann::json> kept, dropped;
  for (const auto& r : res.kept) kept.push_back(to_json(r, cfg.schema));
  for (const auto& d : res.dropped) {
    auto j = to_json(d.record, cfg.schema);
    j["drop_reason"] = d.reason;
    dropped.push_back(std::move(j));
  }
  write_jsonl(out_path(g, "kept.jsonl").string(), kept);
  write_jsonl(out_path(g, "dropped.jsonl").string(), dropped);
  std::cout << "kept " << kept.size() << ", dropped " << dropped.size() << "\n";
  return kOk;
}

int cmd_bench(const GlobalOptions& g, const std::string& tasks_path, const std::string& trajs_path) {
  Config cfg = resolve_config(g);
  auto tasks = load_tasks(tasks_path);
  auto trajs = load_trajectories(trajs_path, cfg.schema);
  auto judge = judge_for(cfg, g);
  BenchReport r = bench_score(tasks, trajs, *judge);
  emit_report(r, ReportFormat::Json, out_path(g, "bench.json").string());
  emit_report(r, ReportFormat::Csv, out_path(g, "bench.csv").string());
  report::write_file(out_path(g, "bench_per_query.csv").string(), per_query_csv(r));
  for (const auto& [type, s] : r.per_task_type) {
    std::cout << to_string(type) << "\t" << report::number(s.mean.to_double()) << "\t" << s.n_queries << "\n";
  }
  return kOk;
}

int cmd_simulate(const GlobalOptions& g) {
  Config cfg = resolve_config(g);
  auto& sim = cfg.simulate;
  if (!sim.has_seed) throw Error(ErrorCode::ConfigInvalid, "simulate needs --seed or simulate.seed in the config");
  if (!sim.sweep.empty()) {
    auto rows = grpo::asymmetry_sweep(sim.channel, sim.policy, sim.estimator, sim.sweep);
    emit_report(rows, ReportFormat::Csv, out_path(g, "sweep.csv").string());
    emit_report(rows, ReportFormat::Json, out_path(g, "sweep.json").string());
    for (const auto& row : rows) {
      std::cout << "sigma=" << report::number(row.sigma) << " H=" << row.horizon
                << " ratio_tau_a=" << report::number(row.report.ratio_tau_a)
                << " snr=" << report::number(row.report.snr) << "\n";
    }
    return kOk;
  }
  auto r = grpo::simulate_variance(sim.channel, sim.policy, sim.estimator, sim.states);
  report::write_file(out_path(g, "variance.json").string(), r.to_json().dump(2) + "\n");
  std::cout << r.to_json().dump(2) << "\n";
  return kOk;
}

ReportFormat format_of(const std::string& f) {
  if (f == "csv") return ReportFormat::Csv;
  if (f == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidConfig, "format must be csv or json");
}

std::string ext(ReportFormat f) { return f == ReportFormat::Csv ? ".csv" : ".json"; }

int cmd_report(const GlobalOptions& g, const std::string& kind, const std::string& input, const std::string& tasks_path,
               const std::string& format) {
  Config cfg = resolve_config(g);
  const ReportFormat fmt = format_of(format);
  if (kind == "plan") {
    std::vector<RewardVector> vs;
    for (const auto& r : load_trajectories(input, cfg.schema)) {
      if (!r.reward_vector) throw Error(ErrorCode::UnscoredRecord, "trajectory '" + r.trajectory.id + "' is unscored");
      vs.push_back(*r.reward_vector);
    }
    PlanAggregate p{plan_score_aggregate(vs), static_cast<int>(vs.size())};
    emit_report(p, fmt, out_path(g, "plan_score" + ext(fmt)).string());
  } else if (kind == "reflection") {
    auto trajs = load_trajectories(input, cfg.schema);
    std::vector<TaskRecord> tasks = tasks_path.empty() ? std::vector<TaskRecord>{} : load_tasks(tasks_path);
    auto judge = judge_for(cfg, g);
    auto h = reflection_quality_histogram(trajs, *judge, tasks);
    emit_report(h, fmt, out_path(g, "reflection_quality" + ext(fmt)).string());
  } else if (kind == "bench") {
    auto j = nlohmann::json::parse(read_text(input), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::SchemaError, "'" + input + "' is not JSON");
    emit_report(bench_report_from_json(j), fmt, out_path(g, "bench" + ext(fmt)).string());
  } else if (kind == "sweep") {
    auto j = nlohmann::json::parse(read_text(input), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::SchemaError, "'" + input + "' is not JSON");
    emit_report(sweep_from_json(j), fmt, out_path(g, "sweep" + ext(fmt)).string());
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown report kind '" + kind + "'");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory validation, reward scoring and GRPO variance tools"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
  app.add_option("--judge", g.judge_backend, "Judge backend override")
      ->check(CLI::IsMember({"mock", "scripted", "remote"}));
  app.add_option("--judge-script", g.judge_script, "Replay script for the scripted judge");
  app.add_option("--judge-endpoint", g.judge_endpoint, "Endpoint URL for the remote judge");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_flag("-v,--verbose", g.verbosity, "More diagnostics on stderr (repeatable)");

  std::string input, tasks, trajs, kind, format = "csv";
  auto* validate = app.add_subcommand("validate", "Check trajectories against the turn patterns");
  validate->add_option("input", input, "trajectories.jsonl or a flat transcript")->required();

  auto* score = app.add_subcommand("score", "Score trajectories into reward vectors");
  score->add_option("--tasks", tasks, "tasks.jsonl")->required();
  score->add_option("--trajectories", trajs, "trajectories.jsonl")->required();

  auto* filter = app.add_subcommand("filter-sft", "Keep trajectories with perfect plan/format/tool scores");
  filter->add_option("input", input, "scored trajectories JSONL")->required();

  auto* bench = app.add_subcommand("bench", "Per-task-type checkpoint scores");
  bench->add_option("--tasks", tasks, "tasks.jsonl")->required();
  bench->add_option("--trajectories", trajs, "trajectories.jsonl")->required();

  app.add_subcommand("simulate", "Gradient-variance decomposition or sweep from the config");

  auto* rep = app.add_subcommand("report", "Emit plan, reflection, bench or sweep reports");
  rep->add_option("kind", kind, "plan | reflection | bench | sweep")
      ->required()
      ->check(CLI::IsMember({"plan", "reflection", "bench", "sweep"}));
  rep->add_option("input", input, "input file")->required();
  rep->add_option("--tasks", tasks, "tasks.jsonl (reflection queries)");
  rep->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (*validate) return cmd_validate(g, input);
    if (*score) return cmd_score(g, tasks, trajs);
    if (*filter) return cmd_filter(g, input);
    if (*bench) return cmd_bench(g, tasks, trajs);
    if (app.got_subcommand("simulate")) return cmd_simulate(g);
    if (*rep) return cmd_report(g, kind, input, tasks, format);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? kUsageError : kDomainFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
  return kUsageError;
}
