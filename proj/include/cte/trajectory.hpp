#pragma once

#include <vector>

#include "cte/env.hpp"

namespace cte {

struct TimeStep {
  GridState state;
  EnvAction action = EnvAction::Stand;
  bool operator==(const TimeStep&) const = default;
};

// A full episode: one (state, action) pair per step up to the horizon,
// plus the ground-truth reward collected at each step.
struct Trajectory {
  std::vector<TimeStep> steps;
  std::vector<double> gt_rewards;

  int length() const { return static_cast<int>(steps.size()); }
};

// A slice of an episode starting at step start_index of its source.
struct PartialTrajectory {
  int start_index = 0;
  std::vector<TimeStep> steps;

  int length() const { return static_cast<int>(steps.size()); }
  bool operator==(const PartialTrajectory&) const = default;
};

}  // namespace cte
