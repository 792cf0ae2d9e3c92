#pragma once

#include <future>
#include <string>
#include <vector>

#include "utpcr/error.hpp"
#include "utpcr/judge.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/task.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr {

struct ScoreResult {
  RewardVector rewards;
  std::vector<Diagnostic> diagnostics;
};

/// Checkpoint verdicts for the trajectory's final outputs, in checkpoint order.
/// Requests are submitted together so a concurrent backend can overlap them.
inline std::vector<JudgeDecision> judge_checkpoints(Judge& judge, const Trajectory& t, const TaskRecord& task) {
  std::vector<std::future<JudgeResponse>> pending;
  pending.reserve(task.checkpoints.size());
  for (const auto& c : task.checkpoints) {
    JudgeRequest req;
    req.id = judge.next_request_id();
    req.kind = RequestKind::CheckpointVerdict;
    req.query_id = task.id;
    req.query = task.query;
    req.key = c.id;
    req.payload = c.description;
    req.artifact_refs = t.outputs.artifact_ids;
    pending.push_back(judge.submit(std::move(req)));
  }
  std::vector<JudgeDecision> out;
  out.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    JudgeResponse resp = pending[i].get();
    if (!resp.verdict) throw Error(ErrorCode::MalformedReply, "judge returned no verdict");
    out.push_back({task.checkpoints[i].id, *resp.verdict});
  }
  return out;
}

/// Satisfied-checkpoint fraction for one trajectory. Without any output
/// artifacts there is nothing to judge and every checkpoint counts as refused.
inline Rational judged_reflect_reward(Judge& judge, const Trajectory& t, const TaskRecord& task,
                                      std::vector<Diagnostic>* diagnostics = nullptr) {
  if (task.checkpoints.empty()) throw Error(ErrorCode::InvalidRequest, "task '" + task.id + "' has no checkpoints");
  if (t.outputs.artifact_ids.empty()) {
    if (diagnostics) diagnostics->push_back({"NoArtifacts", "no output artifacts to judge; reflection scored 0", {}});
    return Rational(0);
  }
  auto decisions = judge_checkpoints(judge, t, task);
  return reflect_reward(decisions, task.checkpoints);
}

inline const TagInstance* find_plan_tag(const Trajectory& t) {
  if (t.turns.empty()) return nullptr;
  for (const auto& tag : t.turns.front().tags) {
    if (tag.kind == TagKind::known(Tag::planning)) return &tag;
  }
  return nullptr;
}

inline ScoreResult score_trajectory(const Trajectory& t, const TaskRecord& task, Judge& judge,
                                    const RewardConfig& config, const TagSchema& schema = TagSchema::defaults()) {
  config.validate();
  if (t.query_id != task.id) {
    throw Error(ErrorCode::InvalidRequest, "trajectory '" + t.id + "' is for query '" + t.query_id +
                                               "', task is '" + task.id + "'");
  }
  ScoreResult out;
  RewardVector& v = out.rewards;
  if (config.includes(Dimension::format)) v.format = format_reward(t, schema);
  if (config.includes(Dimension::tool)) v.tool = tool_reward(t.tool_outcomes(), config.tools_expected);
  if (config.includes(Dimension::result)) v.result = result_reward(t.outputs, task.expected_images, task.expected_videos);
  if (config.includes(Dimension::reflection)) v.reflection = judged_reflect_reward(judge, t, task, &out.diagnostics);
  if (config.includes(Dimension::plan)) {
    const TagInstance* plan = find_plan_tag(t);
    if (!plan || plan->empty_content()) {
      out.diagnostics.push_back({std::string(to_string(ErrorCode::PlanTagMissing)),
                                 "no non-empty planning tag in the first turn; plan scored 0", {}});
      v.plan = Rational(0);
    } else {
      int score = evaluate_plan(judge, task.id, task.query, plan->content, config.plan_scale);
      v.plan = plan_reward(score, config.plan_scale);
    }
  }
  v.total = total_reward(v, config);
  return out;
}

}  // namespace utpcr
