#include "cte/features.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cte {

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = [] {
    std::array<std::string, kNumFeatures> n;
    n[kFHumansSaved] = "humans_saved";
    n[kFAvgUnsaved] = "avg_unsaved";
    n[kFFinalUnsaved] = "final_unsaved";
    for (int i = 0; i < 8; ++i) n[kFUnsavedHist0 + i] = "unsaved_count_" + std::to_string(i);
    n[kFAvgInterHumanDist] = "avg_inter_human_distance";
    n[kFExtinguisherSteps] = "extinguisher_steps";
    n[kFAvgExtinguisherDist] = "avg_extinguisher_distance";
    n[kFCouldHaveSaved] = "could_have_saved";
    n[kFMovedTowardClosest] = "moved_toward_closest";
    n[kFActionWalk] = "action_walk";
    n[kFActionInteract] = "action_interact";
    n[kFActionStand] = "action_stand";
    n[kFAvgClosestHumanDist] = "avg_closest_human_distance";
    for (int i = 0; i <= 10; ++i) n[kFClosestDistHist0 + i] = "closest_distance_" + std::to_string(i);
    n[kFDirRight] = "closest_dir_right";
    n[kFDirLeft] = "closest_dir_left";
    n[kFDirDown] = "closest_dir_down";
    n[kFDirUp] = "closest_dir_up";
    n[kFAvgX] = "avg_x";
    n[kFAvgY] = "avg_y";
    n[kFWallSteps] = "wall_steps";
    n[kFMiddleSteps] = "middle_steps";
    n[kFRingSteps] = "ring_steps";
    n[kFQuadrantTL] = "quadrant_tl";
    n[kFQuadrantTR] = "quadrant_tr";
    n[kFQuadrantBL] = "quadrant_bl";
    n[kFQuadrantBR] = "quadrant_br";
    n[kFLength] = "length";
    return n;
  }();
  return names;
}

namespace {

int unsaved(const GridState& s) { return static_cast<int>(s.humans.size()); }

// Plain closest-human Manhattan distance; -1 when no humans remain.
int closest_distance(const GridState& s) {
  if (s.humans.empty()) return -1;
  int best = std::numeric_limits<int>::max();
  for (const Cell& h : s.humans) best = std::min(best, manhattan(s.player, h));
  return best;
}

// Closest human by plain distance, first in sorted order on ties.
const Cell* closest_human(const GridState& s) {
  const Cell* best = nullptr;
  int best_d = std::numeric_limits<int>::max();
  for (const Cell& h : s.humans) {
    const int d = manhattan(s.player, h);
    if (d < best_d) {
      best_d = d;
      best = &h;
    }
  }
  return best;
}

// Closest-human distance with co-location counted as 2: standing on a human
// still takes two actions (step aside, interact) to save them.
int adjusted_closest_distance(const GridState& s) {
  int best = std::numeric_limits<int>::max();
  for (const Cell& h : s.humans) {
    const int d = manhattan(s.player, h);
    best = std::min(best, d == 0 ? 2 : d);
  }
  return best;
}

}  // namespace

FeatureVector extract_features(const PartialTrajectory& t) {
  if (t.steps.empty()) throw std::invalid_argument("empty trajectory");
  const GridState& first = t.steps.front().state;
  if (first.extent != 6) {
    throw std::invalid_argument("features are defined for the standard 6x6 interior");
  }

  FeatureVector f{};
  const int len = t.length();
  const Cell ext = first.extinguisher();

  double sum_unsaved = 0.0, sum_inter = 0.0, sum_ext_dist = 0.0;
  double sum_x = 0.0, sum_y = 0.0;
  double sum_closest = 0.0;
  int defined_closest_steps = 0;

  for (const TimeStep& ts : t.steps) {
    const GridState& s = ts.state;
    const int n_unsaved = unsaved(s);
    sum_unsaved += n_unsaved;
    f[kFUnsavedHist0 + std::min(n_unsaved, 7)] += 1.0;

    if (n_unsaved > 0) {
      double inter = 0.0;
      for (const Cell& a : s.humans) {
        for (const Cell& b : s.humans) inter += manhattan(a, b);
      }
      sum_inter += inter / static_cast<double>(n_unsaved * n_unsaved);
    }

    if (s.player == ext) f[kFExtinguisherSteps] += 1.0;
    sum_ext_dist += manhattan(s.player, ext);

    if (is_move(ts.action)) {
      f[kFActionWalk] += 1.0;
    } else if (is_interact(ts.action)) {
      f[kFActionInteract] += 1.0;
    } else {
      f[kFActionStand] += 1.0;
    }

    if (n_unsaved > 0) {
      const int d = closest_distance(s);
      sum_closest += d;
      ++defined_closest_steps;
      f[kFClosestDistHist0 + std::min(d, 10)] += 1.0;
      const Cell* h = closest_human(s);
      if (h->x > s.player.x) f[kFDirRight] += 1.0;
      if (h->x < s.player.x) f[kFDirLeft] += 1.0;
      if (h->y > s.player.y) f[kFDirDown] += 1.0;
      if (h->y < s.player.y) f[kFDirUp] += 1.0;
    }

    sum_x += s.player.x;
    sum_y += s.player.y;
    const bool wall = s.player.x == 1 || s.player.x == 6 || s.player.y == 1 || s.player.y == 6;
    const bool middle = (s.player.x == 3 || s.player.x == 4) && (s.player.y == 3 || s.player.y == 4);
    if (wall) f[kFWallSteps] += 1.0;
    if (middle) f[kFMiddleSteps] += 1.0;
    if (!wall && !middle) f[kFRingSteps] += 1.0;
    if (s.player.x <= 3 && s.player.y <= 3) f[kFQuadrantTL] += 1.0;
    if (s.player.x > 3 && s.player.y <= 3) f[kFQuadrantTR] += 1.0;
    if (s.player.x <= 3 && s.player.y > 3) f[kFQuadrantBL] += 1.0;
    if (s.player.x > 3 && s.player.y > 3) f[kFQuadrantBR] += 1.0;
  }

  // transition features over the len-1 internal transitions
  for (int i = 0; i + 1 < len; ++i) {
    const GridState& cur = t.steps[static_cast<size_t>(i)].state;
    const GridState& nxt = t.steps[static_cast<size_t>(i + 1)].state;
    bool next_to_human = false;
    for (const Cell& h : cur.humans) {
      if (manhattan(cur.player, h) == 1) {
        next_to_human = true;
        break;
      }
    }
    if (next_to_human && unsaved(nxt) == unsaved(cur)) f[kFCouldHaveSaved] += 1.0;

    if (unsaved(cur) > unsaved(nxt)) {
      f[kFMovedTowardClosest] += 1.0;  // saving counts as moving toward
    } else if (unsaved(cur) > 0 && unsaved(nxt) > 0 &&
               adjusted_closest_distance(cur) > adjusted_closest_distance(nxt)) {
      f[kFMovedTowardClosest] += 1.0;
    }
  }

  f[kFHumansSaved] = unsaved(first) - unsaved(t.steps.back().state);
  f[kFAvgUnsaved] = sum_unsaved / len;
  f[kFFinalUnsaved] = unsaved(t.steps.back().state);
  f[kFAvgInterHumanDist] = sum_inter / len;
  f[kFAvgExtinguisherDist] = sum_ext_dist / len;
  f[kFAvgClosestHumanDist] =
      defined_closest_steps > 0 ? sum_closest / defined_closest_steps : 0.0;
  f[kFAvgX] = sum_x / len;
  f[kFAvgY] = sum_y / len;
  f[kFLength] = len;
  return f;
}

double label(const PartialTrajectory& t, const RewardModel& m) {
  return avg_reward(m, t);
}

Dataset Dataset::empty() {
  Dataset d;
  d.f_org.resize(0, kNumFeatures);
  d.f_cf.resize(0, kNumFeatures);
  d.y_org.resize(0);
  d.y_cf.resize(0);
  return d;
}

Dataset Dataset::slice(const std::vector<int>& idx) const {
  Dataset out = Dataset::empty();
  out.f_org.resize(static_cast<Eigen::Index>(idx.size()), kNumFeatures);
  out.f_cf.resize(static_cast<Eigen::Index>(idx.size()), kNumFeatures);
  out.y_org.resize(static_cast<Eigen::Index>(idx.size()));
  out.y_cf.resize(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.f_org.row(r) = f_org.row(idx[i]);
    out.f_cf.row(r) = f_cf.row(idx[i]);
    out.y_org(r) = y_org(idx[i]);
    out.y_cf(r) = y_cf(idx[i]);
  }
  out.standardized = standardized;
  return out;
}

Dataset Dataset::concat(const std::vector<const Dataset*>& parts) {
  int total = 0;
  for (const Dataset* p : parts) total += p->rows();
  Dataset out = Dataset::empty();
  out.f_org.resize(total, kNumFeatures);
  out.f_cf.resize(total, kNumFeatures);
  out.y_org.resize(total);
  out.y_cf.resize(total);
  Eigen::Index r = 0;
  for (const Dataset* p : parts) {
    out.f_org.middleRows(r, p->rows()) = p->f_org;
    out.f_cf.middleRows(r, p->rows()) = p->f_cf;
    out.y_org.segment(r, p->rows()) = p->y_org;
    out.y_cf.segment(r, p->rows()) = p->y_cf;
    r += p->rows();
  }
  return out;
}

Dataset build_dataset(const std::vector<Cte>& ctes, const RewardModel& m) {
  if (ctes.empty()) throw std::invalid_argument("empty cte list");
  Dataset d = Dataset::empty();
  const auto n = static_cast<Eigen::Index>(ctes.size());
  d.f_org.resize(n, kNumFeatures);
  d.f_cf.resize(n, kNumFeatures);
  d.y_org.resize(n);
  d.y_cf.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Cte& c = ctes[static_cast<size_t>(i)];
    const FeatureVector fo = extract_features(c.t_org);
    const FeatureVector fc = extract_features(c.t_cf);
    for (int k = 0; k < kNumFeatures; ++k) {
      d.f_org(i, k) = fo[static_cast<size_t>(k)];
      d.f_cf(i, k) = fc[static_cast<size_t>(k)];
    }
    d.y_org(i) = label(c.t_org, m);
    d.y_cf(i) = label(c.t_cf, m);
  }
  return d;
}

void apply_stats(Dataset& d, const FeatureStats& stats) {
  if (d.standardized) throw std::logic_error("dataset already standardized");
  for (int k = 0; k < kNumFeatures; ++k) {
    d.f_org.col(k) = (d.f_org.col(k).array() - stats.mean(k)) / stats.stddev(k);
    d.f_cf.col(k) = (d.f_cf.col(k).array() - stats.mean(k)) / stats.stddev(k);
  }
  d.standardized = true;
}

FeatureStats standardize(Dataset& train, const std::vector<Dataset*>& others) {
  if (train.rows() == 0) throw std::invalid_argument("empty training dataset");
  if (train.standardized) throw std::logic_error("dataset already standardized");

  const auto n = static_cast<double>(2 * train.rows());
  FeatureStats stats;
  stats.mean.resize(kNumFeatures);
  stats.stddev.resize(kNumFeatures);
  for (int k = 0; k < kNumFeatures; ++k) {
    const double sum = train.f_org.col(k).sum() + train.f_cf.col(k).sum();
    const double mean = sum / n;
    const double sq = (train.f_org.col(k).array() - mean).square().sum() +
                      (train.f_cf.col(k).array() - mean).square().sum();
    double sd = std::sqrt(sq / n);
    if (sd == 0.0) sd = 1.0;  // zero-variance features map to 0
    stats.mean(k) = mean;
    stats.stddev(k) = sd;
  }

  apply_stats(train, stats);
  for (Dataset* d : others) apply_stats(*d, stats);
  return stats;
}

}  // namespace cte
