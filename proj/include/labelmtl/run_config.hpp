#pragma once

#include "labelmtl/data.hpp"
#include "labelmtl/training.hpp"

#include <string>
#include <vector>

namespace labelmtl {

struct RunConfig {
  std::vector<TaskSpec> tasks;  // data_path resolved against the config's directory
  std::string main_task;
  TrainConfig train;
  std::string output_dir = "run";

  TaskSet task_set() const { return TaskSet(tasks, main_task); }
};

// Parses and validates a run configuration. Unknown keys anywhere are
// rejected; `base_dir` anchors relative data paths.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config, const std::string& base_dir = "");

// Loads each task's data file and splits it.
std::vector<Dataset> load_task_data(const RunConfig& config);

}  // namespace labelmtl
