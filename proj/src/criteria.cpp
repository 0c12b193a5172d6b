#include "cte/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cte {

Cte make_cte(PartialTrajectory t_org, PartialTrajectory t_cf, const RewardModel& m) {
  if (t_org.steps.empty() || t_cf.steps.empty()) {
    throw std::invalid_argument("cte trajectories must be non-empty");
  }
  if (!(t_org.steps.front().state == t_cf.steps.front().state)) {
    throw std::invalid_argument("cte trajectories must share their start state");
  }
  Cte c;
  c.r_org = avg_reward(m, t_org);
  c.r_cf = avg_reward(m, t_cf);
  c.t_org = std::move(t_org);
  c.t_cf = std::move(t_cf);
  return c;
}

CteDirection direction(const Cte& c) {
  return c.r_cf > c.r_org ? CteDirection::Upward : CteDirection::Downward;
}

WeightVector sample_weights(Rng& rng) {
  WeightVector w;
  for (int i = 0; i < kNumCriteria; ++i) w[i] = uniform_double(rng);
  return w;
}

NormalizationBounds NormalizationBounds::unit() {
  NormalizationBounds b;
  b.lo.fill(0.0);
  b.hi.fill(1.0);
  return b;
}

void CteHistory::append(const Cte& c) {
  entries_.push_back({c.t_cf.length(), c.t_cf.start_index, direction(c)});
}

namespace {

// Human-set edit distance: positions present in one set but not the other,
// divided equally between the two states, rounded up.
int human_edit_distance(const GridState& a, const GridState& b) {
  size_t ia = 0, ib = 0;
  int sym_diff = 0;
  const auto& ha = a.humans;
  const auto& hb = b.humans;
  while (ia < ha.size() && ib < hb.size()) {
    if (ha[ia] == hb[ib]) {
      ++ia;
      ++ib;
    } else if (ha[ia] < hb[ib]) {
      ++sym_diff;
      ++ia;
    } else {
      ++sym_diff;
      ++ib;
    }
  }
  sym_diff += static_cast<int>((ha.size() - ia) + (hb.size() - ib));
  return (sym_diff + 1) / 2;
}

}  // namespace

double pair_distance(const TimeStep& a, const TimeStep& b, const MhdWeights& w) {
  const double d_player = manhattan(a.state.player, b.state.player);
  const double d_action = (a.action == b.action) ? 0.0 : 1.0;
  const double d_humans = human_edit_distance(a.state, b.state);
  return w.player * d_player + w.action * d_action + w.humans * d_humans;
}

namespace {

double directed_mean_min(const PartialTrajectory& from, const PartialTrajectory& to,
                         const MhdWeights& w) {
  double total = 0.0;
  for (const TimeStep& a : from.steps) {
    double best = pair_distance(a, to.steps.front(), w);
    for (size_t j = 1; j < to.steps.size(); ++j) {
      best = std::min(best, pair_distance(a, to.steps[j], w));
    }
    total += best;
  }
  return total / static_cast<double>(from.steps.size());
}

}  // namespace

double mhd(const PartialTrajectory& a, const PartialTrajectory& b, const MhdWeights& w) {
  if (a.steps.empty() || b.steps.empty()) {
    throw std::invalid_argument("mhd requires non-empty trajectories");
  }
  return std::max(directed_mean_min(a, b, w), directed_mean_min(b, a, w));
}

double measure_validity(const Cte& c) { return std::abs(c.r_org - c.r_cf); }

double measure_realisticness(const Cte& c) { return c.r_cf - c.r_org; }

double measure_sparsity(const Cte& c) {
  return static_cast<double>(c.t_org.length() + c.t_cf.length());
}

double measure_diversity(const Cte& c, const CteHistory& history) {
  if (history.empty()) return 0.0;
  const auto& prev = history.entries();
  const size_t k = std::min<size_t>(3, prev.size());

  std::vector<double> len_diffs, start_diffs;
  len_diffs.reserve(prev.size());
  start_diffs.reserve(prev.size());
  const CteDirection dir = direction(c);
  int opposite = 0;
  for (const auto& e : prev) {
    len_diffs.push_back(std::abs(static_cast<double>(e.length - c.t_cf.length())));
    start_diffs.push_back(std::abs(static_cast<double>(e.start_time - c.t_cf.start_index)));
    if (e.dir != dir) ++opposite;
  }
  std::sort(len_diffs.begin(), len_diffs.end());
  std::sort(start_diffs.begin(), start_diffs.end());

  double len_term = 0.0, start_term = 0.0;
  for (size_t i = 0; i < k; ++i) {
    len_term += len_diffs[i];
    start_term += start_diffs[i];
  }
  len_term /= static_cast<double>(k);
  start_term /= static_cast<double>(k);
  const double dir_term = static_cast<double>(opposite) / static_cast<double>(prev.size());
  return len_term + start_term + dir_term;
}

double measure_state_importance(const Cte& c, const PolicyModel& policy) {
  return -policy_entropy(policy.action_probs(c.t_cf.steps.front().state));
}

CriterionVector measure_criteria(const Cte& c, const PolicyModel& policy,
                                 const CteHistory& history, const MhdWeights& w) {
  CriterionVector cv;
  cv[kValidity] = measure_validity(c);
  cv[kProximity] = mhd(c.t_org, c.t_cf, w);
  cv[kDiversity] = measure_diversity(c, history);
  cv[kStateImportance] = measure_state_importance(c, policy);
  cv[kRealisticness] = measure_realisticness(c);
  cv[kSparsity] = measure_sparsity(c);
  return cv;
}

double normalized_contribution(int criterion, double value,
                               const NormalizationBounds& bounds) {
  const double lo = bounds.lo[static_cast<size_t>(criterion)];
  const double hi = bounds.hi[static_cast<size_t>(criterion)];
  if (hi <= lo) throw std::invalid_argument("uncalibrated bounds: max <= min");
  double norm = (value - lo) / (hi - lo);
  norm = std::clamp(norm, 0.0, 1.0);
  return kCriterionMinimized[static_cast<size_t>(criterion)] ? 1.0 - norm : norm;
}

std::array<double, kNumCriteria> normalized_contributions(
    const CriterionVector& cv, const NormalizationBounds& bounds) {
  std::array<double, kNumCriteria> out{};
  for (int i = 0; i < kNumCriteria; ++i) {
    out[static_cast<size_t>(i)] = normalized_contribution(i, cv[i], bounds);
  }
  return out;
}

double scalarize(const CriterionVector& cv, const NormalizationBounds& bounds,
                 const WeightVector& w) {
  const auto contrib = normalized_contributions(cv, bounds);
  double rho = 0.0;
  for (int i = 0; i < kNumCriteria; ++i) rho += w[i] * contrib[static_cast<size_t>(i)];
  return rho;
}

NormalizationBounds calibrate_bounds(const std::vector<CteSampler>& generators,
                                     Rng& rng, int max_rounds,
                                     int ctes_per_generator) {
  if (generators.empty()) throw std::invalid_argument("calibration needs a generator");

  NormalizationBounds bounds = NormalizationBounds::unit();
  for (int round = 0; round < max_rounds; ++round) {
    NormalizationBounds widened = bounds;
    bool changed = false;
    for (const CteSampler& gen : generators) {
      CteHistory history;
      for (int i = 0; i < ctes_per_generator; ++i) {
        const WeightVector w = sample_weights(rng);
        const CriterionVector cv = gen(w, bounds, history, rng);
        for (int c = 0; c < kNumCriteria; ++c) {
          auto ci = static_cast<size_t>(c);
          if (cv[c] < widened.lo[ci]) {
            widened.lo[ci] = cv[c];
            changed = true;
          }
          if (cv[c] > widened.hi[ci]) {
            widened.hi[ci] = cv[c];
            changed = true;
          }
        }
      }
    }
    bounds = widened;
    if (!changed) {
      bounds.converged = true;
      return bounds;
    }
  }
  bounds.converged = false;
  return bounds;
}

}  // namespace cte
