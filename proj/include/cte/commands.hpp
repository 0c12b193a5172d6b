#pragma once

#include <string>

#include "cte/experiments.hpp"

namespace cte::cli {

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  uint64_t master_seed = 0;
  std::string scale = "desk";
};

// Rolls out episodes, calibrates (or loads) bounds, emits one CTE per
// episode and writes the dataset file plus a timing sidecar.
int cmd_generate(const RunOptions& opt);

// Runs the adaptive normalization loop and stores the bounds.
int cmd_calibrate(const RunOptions& opt);

// Trains proxy models on a stored dataset and writes the informativeness
// results CSV.
int cmd_evaluate(const RunOptions& opt);

// Dispatches to an experiment or analysis and writes its report files.
int cmd_experiment(const RunOptions& opt);

// Side-by-side playback of one stored CTE.
std::string cmd_render(const std::string& dataset_path, int index);

// Parses the config JSON (plus seed/scale overrides) into a plan.
ExperimentPlan plan_from_config(const std::string& config_json, uint64_t master_seed,
                                const std::string& scale);

}  // namespace cte::cli
