#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "utpcr/error.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/trajectory.hpp"

namespace utpcr {

enum class TaskType { SingleImg, MultiImg, Img2Img };

inline std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::SingleImg: return "single_img";
    case TaskType::MultiImg: return "multi_img";
    case TaskType::Img2Img: return "img2img";
  }
  return "?";
}

inline std::optional<TaskType> task_type_from_string(std::string_view s) {
  for (TaskType t : {TaskType::SingleImg, TaskType::MultiImg, TaskType::Img2Img}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

/// One benchmark/RL query with its judge checkpoints and expected output counts.
struct TaskRecord {
  std::string id;
  TaskType task_type = TaskType::SingleImg;
  std::string query;
  std::vector<Checkpoint> checkpoints;
  int expected_images = 0;
  int expected_videos = 0;
};

struct TrajectoryRecord {
  Trajectory trajectory;
  std::string source_model;
  std::optional<RewardVector> reward_vector;
};

}  // namespace utpcr
