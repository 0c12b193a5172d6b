#include <cmath>

#include "cte/criteria.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cte;

namespace {

Cte cte_with_rewards(double r_org, double r_cf, int len_org = 1, int len_cf = 1,
                     int start = 0) {
  Cte c;
  const GridState s = testutil::make_state({2, 2}, {{4, 4}});
  c.t_org.start_index = start;
  c.t_cf.start_index = start;
  for (int i = 0; i < len_org; ++i) c.t_org.steps.push_back({s, EnvAction::Stand});
  for (int i = 0; i < len_cf; ++i) c.t_cf.steps.push_back({s, EnvAction::MoveUp});
  c.r_org = r_org;
  c.r_cf = r_cf;
  return c;
}

}  // namespace

TEST_CASE("make_cte enforces the shared start state and fills averages") {
  const GridState s0 = testutil::make_state({2, 2}, {{3, 2}});
  PartialTrajectory org, cf;
  org.start_index = cf.start_index = 0;
  org.steps.push_back({s0, EnvAction::Stand});
  cf.steps.push_back({s0, EnvAction::InteractRight});

  GroundTruthReward gt;
  const Cte c = make_cte(org, cf, gt);
  CHECK(c.r_org == doctest::Approx(0.0));
  CHECK(c.r_cf == doctest::Approx(10.0));

  PartialTrajectory other = cf;
  other.steps[0].state.player = {5, 5};
  CHECK_THROWS_AS(make_cte(org, other, gt), std::invalid_argument);
  PartialTrajectory empty;
  CHECK_THROWS_AS(make_cte(org, empty, gt), std::invalid_argument);
}

TEST_CASE("validity is the absolute average-reward difference") {
  CHECK(measure_validity(cte_with_rewards(4.0, 2.0)) == doctest::Approx(2.0));
  CHECK(measure_validity(cte_with_rewards(3.0, 3.0)) == doctest::Approx(0.0));
  CHECK(measure_validity(cte_with_rewards(-1.0, 3.0)) == doctest::Approx(4.0));
}

TEST_CASE("realisticness is the signed difference") {
  CHECK(measure_realisticness(cte_with_rewards(4.0, 2.0)) == doctest::Approx(-2.0));
  CHECK(measure_realisticness(cte_with_rewards(3.0, 3.0)) == doctest::Approx(0.0));
  CHECK(measure_realisticness(cte_with_rewards(-1.0, 3.0)) == doctest::Approx(4.0));
}

TEST_CASE("sparsity sums both lengths") {
  CHECK(measure_sparsity(cte_with_rewards(0, 0, 2, 3)) == doctest::Approx(5.0));
  CHECK(measure_sparsity(cte_with_rewards(0, 0, 1, 1)) == doctest::Approx(2.0));
}

TEST_CASE("direction is upward only for strictly larger counterfactual reward") {
  CHECK(direction(cte_with_rewards(2.0, 5.0)) == CteDirection::Upward);
  CHECK(direction(cte_with_rewards(4.0, 2.0)) == CteDirection::Downward);
  CHECK(direction(cte_with_rewards(2.0, 2.0)) == CteDirection::Downward);
}

TEST_CASE("validity equals the absolute realisticness on any cte") {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const double a = 10.0 * uniform_double(rng) - 5.0;
    const double b = 10.0 * uniform_double(rng) - 5.0;
    const Cte c = cte_with_rewards(a, b);
    CHECK(measure_validity(c) == doctest::Approx(std::abs(measure_realisticness(c))));
  }
}

TEST_CASE("mhd identity, symmetry and the single-step action case") {
  Rng rng(5);
  const PartialTrajectory t = testutil::random_partial(rng, 5);
  CHECK(mhd(t, t) == doctest::Approx(0.0));

  const GridState s = testutil::make_state({3, 3}, {{5, 5}});
  PartialTrajectory a, b;
  a.steps.push_back({s, EnvAction::MoveUp});
  b.steps.push_back({s, EnvAction::MoveDown});
  CHECK(mhd(a, b) == doctest::Approx(0.5));

  PartialTrajectory empty;
  CHECK_THROWS_AS(mhd(empty, a), std::invalid_argument);
}

TEST_CASE("mhd matches the independent double-loop oracle exactly") {
  Rng rng(101);
  for (int i = 0; i < 300; ++i) {
    const PartialTrajectory a = testutil::random_partial(rng, 6);
    const PartialTrajectory b = testutil::random_partial(rng, 6);
    const double got = mhd(a, b);
    CHECK(got == testutil::mhd_oracle(a, b));
    CHECK(got == mhd(b, a));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("diversity is zero for the first cte and identical repeats") {
  const Cte first = cte_with_rewards(4.0, 2.0, 5, 5, 10);
  CteHistory history;
  CHECK(measure_diversity(first, history) == doctest::Approx(0.0));

  history.append(first);  // length 5, start 10, downward
  const Cte repeat = cte_with_rewards(4.0, 2.0, 5, 5, 10);
  CHECK(measure_diversity(repeat, history) == doctest::Approx(0.0));
}

TEST_CASE("diversity sums length, start-time and direction terms") {
  CteHistory history;
  history.append(cte_with_rewards(4.0, 2.0, 3, 3, 9));  // down, len 3, start 9
  history.append(cte_with_rewards(4.0, 2.0, 9, 9, 13));  // down, len 9, start 13
  // new upward cte: len 5, start 10 -> len diffs {2,4}, start diffs {1,3},
  // both previous are opposite direction
  const Cte up = cte_with_rewards(2.0, 4.0, 5, 5, 10);
  CHECK(measure_diversity(up, history) == doctest::Approx(3.0 + 2.0 + 1.0));
}

TEST_CASE("diversity uses only the three closest previous lengths and starts") {
  CteHistory history;
  history.append(cte_with_rewards(4.0, 2.0, 5, 5, 10));
  history.append(cte_with_rewards(4.0, 2.0, 6, 6, 11));
  history.append(cte_with_rewards(4.0, 2.0, 4, 4, 9));
  history.append(cte_with_rewards(4.0, 2.0, 50, 50, 70));  // far outlier, ignored
  const Cte up = cte_with_rewards(2.0, 4.0, 5, 5, 10);
  // closest three length diffs {0,1,1}, start diffs {0,1,1}, all opposite
  CHECK(measure_diversity(up, history) ==
        doctest::Approx(2.0 / 3.0 + 2.0 / 3.0 + 1.0));
}

TEST_CASE("state importance is the negative policy entropy at the start state") {
  testutil::FixedPolicy uniform(testutil::uniform_policy_dist().probs);
  const Cte c = cte_with_rewards(1.0, 2.0);
  CHECK(measure_state_importance(c, uniform) ==
        doctest::Approx(-std::log(9.0)).epsilon(1e-12));

  std::array<double, kNumActions> onehot{};
  onehot[0] = 1.0;
  testutil::FixedPolicy peaked(onehot);
  CHECK(measure_state_importance(c, peaked) == doctest::Approx(0.0));

  std::array<double, kNumActions> two{};
  two[0] = 0.5;
  two[1] = 0.5;
  testutil::FixedPolicy half(two);
  CHECK(measure_state_importance(c, half) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("scalarize combines clamped normalized contributions") {
  NormalizationBounds bounds = NormalizationBounds::unit();
  WeightVector ones;
  ones.w.fill(1.0);

  CriterionVector best;
  best[kValidity] = 1.0;
  best[kProximity] = 0.0;  // minimized: contributes 1
  best[kDiversity] = 1.0;
  best[kStateImportance] = 1.0;
  best[kRealisticness] = 1.0;
  best[kSparsity] = 0.0;  // minimized: contributes 1
  CHECK(scalarize(best, bounds, ones) == doctest::Approx(6.0));

  WeightVector zeros;
  zeros.w.fill(0.0);
  CHECK(scalarize(best, bounds, zeros) == doctest::Approx(0.0));
}

TEST_CASE("scalarize reproduces the reference weight example") {
  NormalizationBounds bounds = NormalizationBounds::unit();
  WeightVector w;
  w[kValidity] = 0.982;
  w[kProximity] = 0.98;
  w[kDiversity] = 0.576;
  w[kStateImportance] = 0.528;
  w[kRealisticness] = 0.303;
  w[kSparsity] = 0.851;

  // contributions (1, 1, 0, 0, 0, 1)
  CriterionVector cv;
  cv[kValidity] = 1.0;
  cv[kProximity] = 0.0;
  cv[kDiversity] = 0.0;
  cv[kStateImportance] = 0.0;
  cv[kRealisticness] = 0.0;
  cv[kSparsity] = 0.0;
  CHECK(scalarize(cv, bounds, w) == doctest::Approx(2.813));
}

TEST_CASE("scalarize rejects uncalibrated bounds and clamps out-of-range values") {
  NormalizationBounds bad = NormalizationBounds::unit();
  bad.hi[0] = 0.0;
  CriterionVector cv;
  WeightVector w;
  w.w.fill(1.0);
  CHECK_THROWS_AS(scalarize(cv, bad, w), std::invalid_argument);

  NormalizationBounds bounds = NormalizationBounds::unit();
  CriterionVector wild;
  wild[kValidity] = 50.0;   // clamps to 1
  wild[kSparsity] = -3.0;   // clamps to 0, flipped to 1
  const double rho = scalarize(wild, bounds, w);
  CHECK(rho >= 0.0);
  CHECK(rho <= 6.0);
}

TEST_CASE("scalarize is monotone in each positively weighted contribution") {
  Rng rng(77);
  NormalizationBounds bounds = NormalizationBounds::unit();
  for (int trial = 0; trial < 1000; ++trial) {
    WeightVector w = sample_weights(rng);
    CriterionVector cv;
    for (int c = 0; c < kNumCriteria; ++c) cv[c] = uniform_double(rng);
    const double base = scalarize(cv, bounds, w);
    const int c = uniform_int(rng, 0, kNumCriteria - 1);
    CriterionVector bumped = cv;
    // increase the criterion's contribution: raise maximized, lower minimized
    const double delta = 0.5 * uniform_double(rng);
    bumped[c] = kCriterionMinimized[static_cast<size_t>(c)] ? cv[c] - delta : cv[c] + delta;
    CHECK(scalarize(bumped, bounds, w) >= base - 1e-12);
  }
}

TEST_CASE("rho always lies within [0, sum of weights]") {
  Rng rng(78);
  NormalizationBounds bounds = NormalizationBounds::unit();
  for (int trial = 0; trial < 500; ++trial) {
    const WeightVector w = sample_weights(rng);
    CriterionVector cv;
    for (int c = 0; c < kNumCriteria; ++c) cv[c] = 20.0 * uniform_double(rng) - 10.0;
    double wsum = 0.0;
    for (int c = 0; c < kNumCriteria; ++c) wsum += w[c];
    const double rho = scalarize(cv, bounds, w);
    CHECK(rho >= -1e-12);
    CHECK(rho <= wsum + 1e-12);
  }
}

TEST_CASE("sampled weights stay within the unit cube") {
  Rng rng(79);
  for (int i = 0; i < 100; ++i) {
    const WeightVector w = sample_weights(rng);
    for (int c = 0; c < kNumCriteria; ++c) {
      CHECK(w[c] >= 0.0);
      CHECK(w[c] < 1.0);
    }
  }
}

TEST_CASE("calibrate_bounds keeps unit bounds when values stay inside") {
  // sampler emitting criteria inside [0,1] everywhere
  CteSampler inside = [](const WeightVector&, const NormalizationBounds&, CteHistory&,
                         Rng& rng) {
    CriterionVector cv;
    for (int c = 0; c < kNumCriteria; ++c) cv[c] = 0.2 + 0.6 * uniform_double(rng);
    return cv;
  };
  Rng rng(7);
  const NormalizationBounds b = calibrate_bounds({inside}, rng, 10, 20);
  CHECK(b.converged);
  for (int c = 0; c < kNumCriteria; ++c) {
    CHECK(b.lo[static_cast<size_t>(c)] == doctest::Approx(0.0));
    CHECK(b.hi[static_cast<size_t>(c)] == doctest::Approx(1.0));
  }
}

TEST_CASE("calibrate_bounds widens to observed extrema and is deterministic") {
  CteSampler spiky = [](const WeightVector&, const NormalizationBounds&, CteHistory&,
                        Rng& rng) {
    CriterionVector cv;
    for (int c = 0; c < kNumCriteria; ++c) cv[c] = uniform_double(rng);
    cv[kSparsity] = 2.0 + 12.0 * uniform_double(rng);  // observed up to 14
    cv[kStateImportance] = -2.2 + uniform_double(rng);
    return cv;
  };
  Rng r1(11), r2(11);
  const NormalizationBounds a = calibrate_bounds({spiky}, r1, 10, 20);
  const NormalizationBounds b = calibrate_bounds({spiky}, r2, 10, 20);
  CHECK(a.hi[kSparsity] > 10.0);
  CHECK(a.lo[kStateImportance] < -1.0);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.converged == b.converged);
}

TEST_CASE("calibrate_bounds flags non-convergence after max_rounds") {
  int calls = 0;
  CteSampler growing = [&calls](const WeightVector&, const NormalizationBounds&, CteHistory&,
                                Rng&) {
    CriterionVector cv;
    cv[kValidity] = static_cast<double>(++calls);  // keeps escaping the bounds
    return cv;
  };
  Rng rng(3);
  const NormalizationBounds b = calibrate_bounds({growing}, rng, 4, 5);
  CHECK_FALSE(b.converged);

  CHECK_THROWS_AS(calibrate_bounds({}, rng, 4, 5), std::invalid_argument);
}
