#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "cte/cte_types.hpp"

namespace cte {

inline constexpr int kNumFeatures = 45;

// Frozen feature order; dataset files carry these names in their header and
// readers reject any reordering.
enum FeatureIndex : int {
  kFHumansSaved = 0,
  kFAvgUnsaved = 1,
  kFFinalUnsaved = 2,
  kFUnsavedHist0 = 3,  // 8 bins: 0..7 unsaved humans
  kFAvgInterHumanDist = 11,
  kFExtinguisherSteps = 12,
  kFAvgExtinguisherDist = 13,
  kFCouldHaveSaved = 14,
  kFMovedTowardClosest = 15,
  kFActionWalk = 16,
  kFActionInteract = 17,
  kFActionStand = 18,
  kFAvgClosestHumanDist = 19,
  kFClosestDistHist0 = 20,  // 11 bins: distance 0..10
  kFDirRight = 31,
  kFDirLeft = 32,
  kFDirDown = 33,
  kFDirUp = 34,
  kFAvgX = 35,
  kFAvgY = 36,
  kFWallSteps = 37,
  kFMiddleSteps = 38,
  kFRingSteps = 39,
  kFQuadrantTL = 40,
  kFQuadrantTR = 41,
  kFQuadrantBL = 42,
  kFQuadrantBR = 43,
  kFLength = 44,
};

using FeatureVector = std::array<double, kNumFeatures>;

const std::array<std::string, kNumFeatures>& feature_names();

// Hand-crafted trajectory summary used by the proxy-human model. Defined for
// the standard 6x6 interior; throws std::invalid_argument otherwise.
FeatureVector extract_features(const PartialTrajectory& t);

// Average model reward over the trajectory; the proxy-model label.
double label(const PartialTrajectory& t, const RewardModel& m);

// Row-per-CTE design matrices plus labels for both trajectories.
struct Dataset {
  Eigen::MatrixXd f_org;  // n x 45
  Eigen::MatrixXd f_cf;   // n x 45
  Eigen::VectorXd y_org;
  Eigen::VectorXd y_cf;
  bool standardized = false;

  int rows() const { return static_cast<int>(f_org.rows()); }
  static Dataset empty();
  Dataset slice(const std::vector<int>& idx) const;
  static Dataset concat(const std::vector<const Dataset*>& parts);
};

Dataset build_dataset(const std::vector<Cte>& ctes, const RewardModel& m);

struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // zero-variance features get stddev 1
};

// Per-feature stats over the pooled original+counterfactual rows of the
// training split. Applies them to the train set and every other set given.
// Throws std::logic_error when a set was already standardized.
FeatureStats standardize(Dataset& train, const std::vector<Dataset*>& others);

// Applies previously computed stats to one dataset.
void apply_stats(Dataset& d, const FeatureStats& stats);

}  // namespace cte
