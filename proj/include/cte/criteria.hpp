#pragma once

#include <functional>

#include "cte/cte_types.hpp"

namespace cte {

// Weights of the three factors entering the per-pair distance inside the
// modified Hausdorff distance. Tuned constants, kept configurable.
struct MhdWeights {
  double player = 1.5;
  double action = 0.5;
  double humans = 1.0;
};

// Distance between two state-action pairs: weighted sum of the player
// Manhattan distance, an action mismatch flag, and the human-set edit
// distance (half the symmetric difference, rounded up).
double pair_distance(const TimeStep& a, const TimeStep& b, const MhdWeights& w);

// Modified Hausdorff distance: max of the two directed mean-closest-pair
// distances. Throws std::invalid_argument on empty inputs.
double mhd(const PartialTrajectory& a, const PartialTrajectory& b,
           const MhdWeights& w = {});

double measure_validity(const Cte& c);
double measure_realisticness(const Cte& c);
double measure_sparsity(const Cte& c);

// 0 for the first CTE; afterwards the mean absolute length and start-time
// differences to the closest min(3, n) previous CTEs plus the fraction of
// previous CTEs with the opposite direction.
double measure_diversity(const Cte& c, const CteHistory& history);

// Negative policy entropy at the shared start state.
double measure_state_importance(const Cte& c, const PolicyModel& policy);

CriterionVector measure_criteria(const Cte& c, const PolicyModel& policy,
                                 const CteHistory& history,
                                 const MhdWeights& w = {});

// Min-max normalizes one criterion value into [0, 1] (clamped) and flips
// minimized criteria so that larger is always better.
double normalized_contribution(int criterion, double value,
                               const NormalizationBounds& bounds);

std::array<double, kNumCriteria> normalized_contributions(
    const CriterionVector& cv, const NormalizationBounds& bounds);

// Quality value: weighted sum of the normalized contributions. Throws
// std::invalid_argument when any bound pair has hi <= lo.
double scalarize(const CriterionVector& cv, const NormalizationBounds& bounds,
                 const WeightVector& w);

// Produces one CTE under the given weights/bounds, appends it to the
// history, and reports its raw criterion vector.
using CteSampler =
    std::function<CriterionVector(const WeightVector&, const NormalizationBounds&,
                                  CteHistory&, Rng&)>;

// Adaptive normalization: starting from unit bounds, repeatedly generates
// ctes_per_generator CTEs per sampler under fresh random weights and widens
// the bounds to any observed extremum, until stable or max_rounds is hit
// (then the bounds come back with converged = false).
NormalizationBounds calibrate_bounds(const std::vector<CteSampler>& generators,
                                     Rng& rng, int max_rounds = 10,
                                     int ctes_per_generator = 20);

}  // namespace cte
