#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/scoring.hpp"

using namespace utpcr;
using utpcr::testing::conforming_trajectory;
using utpcr::testing::make_tag;

namespace {

std::vector<ToolOutcome> outcomes(std::initializer_list<bool> ok) {
  std::vector<ToolOutcome> out;
  for (bool b : ok) out.push_back({b ? ToolStatus::Success : ToolStatus::Failure, std::nullopt});
  return out;
}

TaskRecord task_with(int k, std::string id = "q1") {
  TaskRecord t;
  t.id = std::move(id);
  t.query = "a red cat";
  for (int i = 0; i < k; ++i) t.checkpoints.push_back({"c" + std::to_string(i + 1), "checkpoint " + std::to_string(i), "subject"});
  t.expected_images = 1;
  return t;
}

}  // namespace

TEST(FormatReward, TurnScoreExamples) {
  EXPECT_EQ(turn_format_score({5, 5, true}), Rational(1));
  EXPECT_EQ(turn_format_score({4, 5, false}), Rational(4, 6));
  EXPECT_EQ(turn_format_score({0, 3, false}), Rational(0));
  EXPECT_THROW(turn_format_score({6, 5, true}), Error);
}

TEST(FormatReward, MinimumOverTurns) {
  auto t = conforming_trajectory(3);
  EXPECT_EQ(format_reward(t), Rational(1));
  auto& first = t.turns[0].tags;
  first.erase(first.begin() + 1);  // planning
  EXPECT_EQ(format_reward(t), Rational(4, 6));
}

TEST(ToolReward, Schedule) {
  EXPECT_EQ(tool_reward(outcomes({true, true, true})), Rational(1));
  EXPECT_EQ(tool_reward(outcomes({false, true})), Rational(4, 5));
  EXPECT_EQ(tool_reward(outcomes({true, false})), Rational(1, 10));
  EXPECT_EQ(tool_reward(outcomes({false, false})), Rational(0));
  EXPECT_EQ(tool_reward(outcomes({})), Rational(0));
  EXPECT_EQ(tool_reward(outcomes({}), /*tools_expected=*/false), Rational(1));
}

TEST(ResultReward, ExactCounts) {
  EXPECT_EQ(result_reward({1, 0, {}}, 1, 0), Rational(1));
  EXPECT_EQ(result_reward({2, 0, {}}, 1, 0), Rational(0));
  EXPECT_EQ(result_reward({1, 1, {}}, 1, 0), Rational(0));
  EXPECT_THROW(result_reward({1, 0, {}}, -1, 0), Error);
}

TEST(ReflectReward, FractionAccepted) {
  auto task = task_with(6);
  std::vector<JudgeDecision> d;
  for (int i = 0; i < 6; ++i) d.push_back({task.checkpoints[static_cast<std::size_t>(i)].id, i < 4 ? Verdict::Accept : Verdict::Refuse});
  EXPECT_EQ(reflect_reward(d, task.checkpoints), Rational(2, 3));

  auto dup = d;
  dup.push_back(d[0]);
  try {
    reflect_reward(dup, task.checkpoints);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateDecision);
  }
  auto missing = d;
  missing.pop_back();
  try {
    reflect_reward(missing, task.checkpoints);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDecision);
  }
}

TEST(PlanReward, Scale) {
  EXPECT_EQ(plan_reward(6, 6), Rational(1));
  EXPECT_EQ(plan_reward(3, 6), Rational(1, 2));
  EXPECT_EQ(plan_reward(0, 6), Rational(0));
  try {
    plan_reward(7, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScoreOutOfRange);
  }
}

TEST(TotalReward, WorkedExamples) {
  RewardConfig cfg;
  RewardVector v;
  v.reflection = Rational::parse("0.5");
  v.format = Rational(1);
  v.tool = Rational::parse("0.8");
  v.result = Rational(1);
  EXPECT_EQ(total_reward(v, cfg), Rational(33, 40));

  cfg.dimensions = {Dimension::reflection, Dimension::plan, Dimension::format, Dimension::tool, Dimension::result};
  v.plan = Rational(1);
  EXPECT_EQ(total_reward(v, cfg), Rational(43, 50));

  v.plan.reset();
  try {
    total_reward(v, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDimension);
  }
}

TEST(RewardConfig, RejectsOverweightUnlessAllowed) {
  RewardConfig cfg;
  cfg.weights[Dimension::reflection] = Rational(2);
  EXPECT_THROW(cfg.validate(), Error);
  cfg.allow_unnormalized = true;
  EXPECT_NO_THROW(cfg.validate());
  RewardConfig ok;
  ok.weights[Dimension::reflection] = Rational(2);
  ok.weights[Dimension::format] = Rational(0);
  EXPECT_NO_THROW(ok.validate());
}

TEST(RewardVector, JsonKeepsExactValues) {
  RewardVector v;
  v.reflection = Rational(2, 3);
  v.format = Rational(4, 6);
  v.total = Rational(1, 3);
  auto back = RewardVector::from_json(v.to_json());
  EXPECT_EQ(back, v);
}

TEST(ScoreTrajectory, AllAcceptIsPerfect) {
  MockJudge judge;
  auto res = score_trajectory(conforming_trajectory(3), task_with(4), judge, RewardConfig{});
  EXPECT_EQ(res.rewards.total, Rational(1));
  EXPECT_EQ(*res.rewards.reflection, Rational(1));
}

TEST(ScoreTrajectory, OneRefusedCheckpoint) {
  nlohmann::json script = {{"entries", {{{"kind", "checkpoint"}, {"query_id", "q1"}, {"key", "c3"}, {"reply", "REFUSE"}}}},
                           {"default", {{"reply", "ACCEPT"}}}};
  ScriptedJudge judge(script);
  auto res = score_trajectory(conforming_trajectory(3), task_with(4), judge, RewardConfig{});
  EXPECT_EQ(*res.rewards.reflection, Rational(3, 4));
  EXPECT_EQ(res.rewards.total, Rational(15, 16));
  EXPECT_DOUBLE_EQ(res.rewards.total.to_double(), 0.9375);
}

TEST(ScoreTrajectory, MissingPlanScoresZeroWithDiagnostic) {
  auto t = conforming_trajectory(2);
  auto& first = t.turns[0].tags;
  first.erase(first.begin() + 1);
  RewardConfig cfg;
  cfg.dimensions.push_back(Dimension::plan);
  MockJudge judge;
  auto res = score_trajectory(t, task_with(2), judge, cfg);
  EXPECT_EQ(*res.rewards.plan, Rational(0));
  ASSERT_EQ(res.diagnostics.size(), 1u);
  EXPECT_EQ(res.diagnostics[0].code, "PlanTagMissing");
}

TEST(ScoreTrajectory, NoArtifactsScoresReflectionZero) {
  auto t = conforming_trajectory(2);
  t.outputs.artifact_ids.clear();
  MockJudge judge;
  auto res = score_trajectory(t, task_with(2), judge, RewardConfig{});
  EXPECT_EQ(*res.rewards.reflection, Rational(0));
  ASSERT_EQ(res.diagnostics.size(), 1u);
  EXPECT_EQ(res.diagnostics[0].code, "NoArtifacts");
}

TEST(ScoreTrajectory, QueryMismatch) {
  MockJudge judge;
  EXPECT_THROW(score_trajectory(conforming_trajectory(2), task_with(2, "other"), judge, RewardConfig{}), Error);
}
