#include <cmath>

#include "cte/features.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cte;

namespace {

PartialTrajectory from_actions(GridState s, const std::vector<EnvAction>& actions) {
  PartialTrajectory t;
  for (const EnvAction a : actions) {
    const StepResult r = step(s, a);
    t.steps.push_back({s, a});
    s = r.next;
  }
  return t;
}

}  // namespace

TEST_CASE("feature names are frozen and 45-dimensional") {
  const auto& names = feature_names();
  CHECK(names.size() == 45);
  CHECK(names[0] == "humans_saved");
  CHECK(names[kFLength] == "length");
  CHECK(names[kFQuadrantBR] == "quadrant_br");
}

TEST_CASE("a mid-trajectory rescue shows up in the counting features") {
  const GridState s0 = testutil::make_state({3, 3}, {{2, 3}, {5, 5}});
  const PartialTrajectory t =
      from_actions(s0, {EnvAction::InteractLeft, EnvAction::MoveRight, EnvAction::Stand});
  const FeatureVector f = extract_features(t);
  CHECK(f[kFHumansSaved] == 1.0);
  CHECK(f[kFActionWalk] == 1.0);
  CHECK(f[kFActionInteract] == 1.0);
  CHECK(f[kFActionStand] == 1.0);
  CHECK(f[kFFinalUnsaved] == 1.0);
  CHECK(f[kFLength] == 3.0);
}

TEST_CASE("parking on the extinguisher fills the extinguisher features") {
  const GridState s0 = testutil::make_state({6, 6}, {{1, 1}});
  const PartialTrajectory t = from_actions(
      s0, {EnvAction::Stand, EnvAction::Stand, EnvAction::Stand, EnvAction::Stand});
  const FeatureVector f = extract_features(t);
  CHECK(f[kFExtinguisherSteps] == 4.0);
  CHECK(f[kFAvgExtinguisherDist] == 0.0);
}

TEST_CASE("extract_features rejects empty trajectories and non-standard grids") {
  PartialTrajectory empty;
  CHECK_THROWS_AS(extract_features(empty), std::invalid_argument);

  PartialTrajectory mini;
  mini.steps.push_back({testutil::make_state({1, 1}, {}, {}, 0, 4, 3), EnvAction::Stand});
  CHECK_THROWS_AS(extract_features(mini), std::invalid_argument);
}

TEST_CASE("extract_features matches the independent oracle exactly") {
  Rng rng(911);
  for (int trial = 0; trial < 1000; ++trial) {
    const PartialTrajectory t = testutil::random_partial(rng, 10);
    const FeatureVector got = extract_features(t);
    const FeatureVector want = testutil::FeatureOracle::extract(t);
    for (int k = 0; k < kNumFeatures; ++k) {
      CAPTURE(trial);
      CAPTURE(k);
      CHECK(got[static_cast<size_t>(k)] == want[static_cast<size_t>(k)]);
    }
  }
}

TEST_CASE("histogram and count features satisfy their sum invariants") {
  Rng rng(912);
  for (int trial = 0; trial < 200; ++trial) {
    const PartialTrajectory t = testutil::random_partial(rng, 10);
    const FeatureVector f = extract_features(t);
    double unsaved_hist = 0.0, actions = 0.0, quadrants = 0.0;
    for (int i = 0; i < 8; ++i) unsaved_hist += f[kFUnsavedHist0 + i];
    actions = f[kFActionWalk] + f[kFActionInteract] + f[kFActionStand];
    quadrants = f[kFQuadrantTL] + f[kFQuadrantTR] + f[kFQuadrantBL] + f[kFQuadrantBR];
    CHECK(unsaved_hist == f[kFLength]);
    CHECK(actions == f[kFLength]);
    CHECK(quadrants == f[kFLength]);
    CHECK(f[kFLength] == t.length());
    CHECK(f[kFWallSteps] + f[kFMiddleSteps] + f[kFRingSteps] == f[kFLength]);
    const double saves = f[kFHumansSaved];
    CHECK(f[kFMovedTowardClosest] <= f[kFLength] - 1 + saves);
  }
}

TEST_CASE("label averages the model reward and ignores length for constants") {
  testutil::ConstantReward five(5.0);
  Rng rng(913);
  const PartialTrajectory t3 = testutil::random_partial(rng, 3);
  const PartialTrajectory t30 = testutil::random_partial(rng, 30);
  CHECK(label(t3, five) == doctest::Approx(5.0));
  CHECK(label(t30, five) == doctest::Approx(5.0));

  GroundTruthReward gt;
  const GridState s0 = testutil::make_state({2, 2}, {{3, 2}});
  const PartialTrajectory two =
      from_actions(s0, {EnvAction::InteractRight, EnvAction::Stand});
  CHECK(label(two, gt) == doctest::Approx(5.0));
}

TEST_CASE("build_dataset keeps row order and duplicates") {
  GroundTruthReward gt;
  const GridState s0 = testutil::make_state({2, 2}, {{3, 2}});
  PartialTrajectory org = from_actions(s0, {EnvAction::Stand});
  PartialTrajectory cf = from_actions(s0, {EnvAction::InteractRight});
  const Cte c = make_cte(org, cf, gt);

  const std::vector<Cte> ctes(3, c);
  const Dataset d = build_dataset(ctes, gt);
  CHECK(d.rows() == 3);
  CHECK(d.f_org.row(0) == d.f_org.row(2));
  CHECK(d.y_cf(0) == doctest::Approx(10.0));
  CHECK_FALSE(d.standardized);

  CHECK_THROWS_AS(build_dataset({}, gt), std::invalid_argument);
}

TEST_CASE("standardize centers the pooled training columns") {
  Dataset d = Dataset::empty();
  d.f_org.resize(1, kNumFeatures);
  d.f_cf.resize(1, kNumFeatures);
  d.f_org.setZero();
  d.f_cf.setZero();
  d.f_org(0, 0) = 1.0;  // pooled column {1, 3}: mean 2, std 1
  d.f_cf(0, 0) = 3.0;
  d.y_org.resize(1);
  d.y_cf.resize(1);
  d.y_org(0) = 0.0;
  d.y_cf(0) = 0.0;

  const FeatureStats stats = standardize(d, {});
  CHECK(stats.mean(0) == doctest::Approx(2.0));
  CHECK(stats.stddev(0) == doctest::Approx(1.0));
  CHECK(d.f_org(0, 0) == doctest::Approx(-1.0));
  CHECK(d.f_cf(0, 0) == doctest::Approx(1.0));
  // constant (zero) columns map to zero
  CHECK(d.f_org(0, 5) == doctest::Approx(0.0));
  CHECK(d.standardized);

  CHECK_THROWS_AS(standardize(d, {}), std::logic_error);
}

TEST_CASE("standardized training columns have mean 0 and std 1") {
  GroundTruthReward gt;
  HeuristicPolicy policy(0.5);
  Rng rng(914);
  std::vector<Cte> ctes;
  for (int i = 0; i < 40; ++i) {
    PartialTrajectory a = testutil::random_partial(rng, 8);
    PartialTrajectory b = a;
    b.steps.resize(1);
    ctes.push_back(make_cte(a, b, gt));
  }
  Dataset d = build_dataset(ctes, gt);
  standardize(d, {});
  for (int k = 0; k < kNumFeatures; ++k) {
    const double n = 2.0 * d.rows();
    const double mean = (d.f_org.col(k).sum() + d.f_cf.col(k).sum()) / n;
    double sq = (d.f_org.col(k).array() - mean).square().sum() +
                (d.f_cf.col(k).array() - mean).square().sum();
    const double sd = std::sqrt(sq / n);
    CHECK(std::abs(mean) < 1e-6);
    CHECK((sd == doctest::Approx(1.0).epsilon(1e-6) || sd == doctest::Approx(0.0)));
  }
}
