#pragma once

#include <array>
#include <string>
#include <vector>

#include "cte/agents.hpp"
#include "cte/trajectory.hpp"

namespace cte {

// A counterfactual trajectory explanation: an original and a counterfactual
// partial trajectory sharing their start state, with the average rewards the
// reward model under explanation assigns to each.
struct Cte {
  PartialTrajectory t_org;
  PartialTrajectory t_cf;
  double r_org = 0.0;
  double r_cf = 0.0;
};

// Validates the shared start state and fills in both averages.
Cte make_cte(PartialTrajectory t_org, PartialTrajectory t_cf, const RewardModel& m);

enum class CteDirection { Upward, Downward };

// Upward iff the counterfactual's average reward exceeds the original's;
// ties count as Downward.
CteDirection direction(const Cte& c);

// Raw values of the six quality criteria, index order frozen.
enum CriterionIndex : int {
  kValidity = 0,
  kProximity = 1,
  kDiversity = 2,
  kStateImportance = 3,
  kRealisticness = 4,
  kSparsity = 5,
};

inline constexpr int kNumCriteria = 6;

inline constexpr std::array<const char*, kNumCriteria> kCriterionNames = {
    "validity",      "proximity",      "diversity",
    "state_importance", "realisticness", "sparsity",
};

// proximity holds a distance and sparsity a combined length; both are
// minimized and enter the quality value flipped.
inline constexpr std::array<bool, kNumCriteria> kCriterionMinimized = {
    false, true, false, false, false, true,
};

struct CriterionVector {
  std::array<double, kNumCriteria> v{};

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

struct WeightVector {
  std::array<double, kNumCriteria> w{};

  double& operator[](int i) { return w[static_cast<size_t>(i)]; }
  double operator[](int i) const { return w[static_cast<size_t>(i)]; }
};

// Each component drawn from U(0, 1).
WeightVector sample_weights(Rng& rng);

struct NormalizationBounds {
  std::array<double, kNumCriteria> lo{};
  std::array<double, kNumCriteria> hi{};
  bool converged = true;

  static NormalizationBounds unit();  // (0, 1) per criterion
};

// Session log of emitted CTEs; Diversity is measured against it.
class CteHistory {
 public:
  struct Entry {
    int length = 0;      // counterfactual length
    int start_time = 0;  // start index within the source episode
    CteDirection dir = CteDirection::Downward;
  };

  void append(const Cte& c);
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

}  // namespace cte
