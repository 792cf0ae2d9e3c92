#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "support/generators.hpp"
#include "utpcr/dataset.hpp"

using namespace utpcr;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  fs::path dir = fs::temp_directory_path() / "utpcr_dataset_test";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const char* kTask =
    R"({"schema_version":1,"id":"q1","task_type":"single_img","query":"a red cat",)"
    R"("checkpoints":[{"id":"c1","description":"a cat","category":"subject"}],"expected_images":1,"expected_videos":0})";

TrajectoryRecord scored(std::string id, Rational plan, Rational format, Rational tool) {
  TrajectoryRecord r;
  r.trajectory = utpcr::testing::conforming_trajectory(2, std::move(id));
  RewardVector v;
  v.plan = plan;
  v.format = format;
  v.tool = tool;
  r.reward_vector = v;
  return r;
}

}  // namespace

TEST(Tasks, LoadAndRoundTrip) {
  auto p = write_temp("tasks_ok.jsonl", std::string(kTask) + "\n\n");
  auto tasks = load_tasks(p.string());
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].task_type, TaskType::SingleImg);
  EXPECT_EQ(tasks[0].checkpoints[0].category.value_or(""), "subject");
  EXPECT_EQ(to_json(tasks[0]), nlohmann::json::parse(kTask));
}

TEST(Tasks, MissingQueryReportsLineAndField) {
  auto bad = nlohmann::json::parse(kTask);
  bad["id"] = "q2";
  bad.erase("query");
  auto p = write_temp("tasks_bad.jsonl", std::string(kTask) + "\n" + bad.dump() + "\n");
  try {
    load_tasks(p.string());
    FAIL();
  } catch (const DatasetError& e) {
    ASSERT_EQ(e.errors().size(), 1u);
    EXPECT_EQ(e.errors()[0].line, 2);
    EXPECT_EQ(e.errors()[0].field, "query");
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
}

TEST(Tasks, DuplicateIdsNameBothLines) {
  auto other = nlohmann::json::parse(kTask);
  other["id"] = "q2";
  auto third = other;
  third["id"] = "q3";
  auto p = write_temp("tasks_dup.jsonl",
                      std::string(kTask) + "\n" + other.dump() + "\n" + third.dump() + "\n" + kTask + "\n");
  try {
    load_tasks(p.string());
    FAIL();
  } catch (const DatasetError& e) {
    ASSERT_EQ(e.errors().size(), 1u);
    EXPECT_EQ(e.errors()[0].code, ErrorCode::DuplicateId);
    EXPECT_NE(std::string(e.what()).find("lines 1 and 4"), std::string::npos) << e.what();
  }
}

TEST(Tasks, UnsupportedVersionAndBadJson) {
  auto v2 = nlohmann::json::parse(kTask);
  v2["schema_version"] = 2;
  auto p = write_temp("tasks_v2.jsonl", v2.dump() + "\n{not json\n");
  try {
    load_tasks(p.string());
    FAIL();
  } catch (const DatasetError& e) {
    ASSERT_EQ(e.errors().size(), 2u);
    EXPECT_EQ(e.errors()[0].field, "schema_version");
    EXPECT_EQ(e.errors()[1].line, 2);
  }
  EXPECT_THROW(load_tasks("/nonexistent/tasks.jsonl"), Error);
}

TEST(Trajectories, TurnsAndTranscriptForms) {
  TrajectoryRecord rec = scored("t1", Rational(1), Rational(1), Rational(4, 5));
  rec.source_model = "agent-a";
  auto j = to_json(rec);
  nlohmann::json flat = {{"id", "t2"},
                         {"query_id", "q1"},
                         {"transcript", "<thinking>x</thinking><|turn|>\n<final_answer>y</final_answer>"},
                         {"outputs", {{"image_count", 0}, {"video_count", 0}}}};
  nlohmann::json none = {{"id", "t3"}, {"query_id", "q1"}};
  auto p = write_temp("traj.jsonl", j.dump() + "\n" + flat.dump() + "\n");
  auto recs = load_trajectories(p.string());
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_TRUE(structurally_equal(recs[0].trajectory, rec.trajectory));
  EXPECT_EQ(recs[0].reward_vector, rec.reward_vector);
  EXPECT_EQ(recs[0].source_model, "agent-a");
  EXPECT_EQ(recs[1].trajectory.id, "t2");

  auto q = write_temp("traj_bad.jsonl", none.dump() + "\n");
  try {
    load_trajectories(q.string());
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.errors()[0].field, "turns");
  }
}

TEST(SftFilter, PartitionAndReasons) {
  std::vector<TrajectoryRecord> recs = {
      scored("a", Rational(1), Rational(1), Rational(1)),
      scored("b", Rational(5, 6), Rational(1), Rational(1)),
      scored("c", Rational(1), Rational(4, 6), Rational(4, 5)),
      scored("d", Rational(1), Rational(1), Rational(4, 5)),
  };
  auto res = sft_filter(recs);
  ASSERT_EQ(res.kept.size(), 1u);
  EXPECT_EQ(res.kept[0].trajectory.id, "a");
  ASSERT_EQ(res.dropped.size(), 3u);
  EXPECT_EQ(res.dropped[0].reason, "plan");
  EXPECT_EQ(res.dropped[1].reason, "format");
  EXPECT_EQ(res.dropped[2].reason, "tool");

  auto again = sft_filter(res.kept);
  EXPECT_EQ(again.kept.size(), res.kept.size());
  EXPECT_TRUE(again.dropped.empty());
}

TEST(SftFilter, NearOneIsNotOne) {
  auto r = scored("a", Rational(999999, 1000000), Rational(1), Rational(1));
  EXPECT_EQ(sft_filter({r}).kept.size(), 0u);
}

TEST(SftFilter, UnscoredRecord) {
  TrajectoryRecord r;
  r.trajectory = utpcr::testing::conforming_trajectory(1);
  try {
    sft_filter({r});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnscoredRecord);
  }
}
