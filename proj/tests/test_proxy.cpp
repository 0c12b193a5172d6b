#include <cmath>

#include "cte/proxy.hpp"
#include "cte/stats.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cte;

namespace {

// Synthetic standardized dataset with configurable labels.
Dataset synthetic_dataset(int n, uint64_t seed,
                          const std::function<double(const Eigen::VectorXd&)>& label_org,
                          const std::function<double(const Eigen::VectorXd&)>& label_cf) {
  Rng rng(seed);
  Dataset d = Dataset::empty();
  d.f_org.resize(n, kNumFeatures);
  d.f_cf.resize(n, kNumFeatures);
  d.y_org.resize(n);
  d.y_cf.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kNumFeatures; ++k) {
      d.f_org(i, k) = 2.0 * uniform_double(rng) - 1.0;
      d.f_cf(i, k) = 2.0 * uniform_double(rng) - 1.0;
    }
    d.y_org(i) = label_org(d.f_org.row(i).transpose());
    d.y_cf(i) = label_cf(d.f_cf.row(i).transpose());
  }
  d.standardized = true;  // features already centered by construction
  return d;
}

ProxyModel small_random_model(uint64_t seed) {
  Rng rng(seed);
  ProxyModel m;
  m.kind = ProxyKind::Mlp;
  m.body = nn::Mlp::make({2 * kNumFeatures, 8, 6}, rng, nn::OutputActivation::Relu);
  m.head_single = nn::Affine::make(6, 2, rng);
  m.head_contrastive = nn::Affine::make(6, 1, rng);
  return m;
}

// Central finite differences of the per-task loss over every parameter.
void check_gradients(ProxyTask task, uint64_t seed) {
  ProxyModel m = small_random_model(seed);
  Rng rng(seed + 100);
  Eigen::VectorXd fo(kNumFeatures), fc(kNumFeatures);
  for (int k = 0; k < kNumFeatures; ++k) {
    fo(k) = 2.0 * uniform_double(rng) - 1.0;
    fc(k) = 2.0 * uniform_double(rng) - 1.0;
  }
  const double y_org = uniform_double(rng);
  const double y_cf = uniform_double(rng);

  ProxyGrads grads;
  grads.body = nn::MlpGrads::zeros_like(m.body);
  proxy_loss_grads(m, fo, fc, y_org, y_cf, task, grads);

  const auto loss_at = [&](const ProxyModel& model) {
    ProxyGrads scratch;
    scratch.body = nn::MlpGrads::zeros_like(model.body);
    return proxy_loss_grads(model, fo, fc, y_org, y_cf, task, scratch);
  };

  const auto agree = [](double fd, double an) {
    if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) return std::abs(fd - an) < 1e-6;
    return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}) < 1e-4;
  };

  const double h = 1e-5;
  int checked = 0;
  // body weights: probe a spread of entries instead of all ~15k
  for (size_t layer = 0; layer < m.body.layers.size(); ++layer) {
    auto& W = m.body.layers[layer].W;
    for (int r = 0; r < W.rows(); r += std::max<int>(1, W.rows() / 3)) {
      for (int c = 0; c < W.cols(); c += std::max<int>(1, W.cols() / 3)) {
        ProxyModel plus = m, minus = m;
        plus.body.layers[layer].W(r, c) += h;
        minus.body.layers[layer].W(r, c) -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        CHECK(agree(fd, grads.body.dW[layer](r, c)));
        ++checked;
      }
    }
  }
  // head parameters
  nn::Affine& head = (task == ProxyTask::Single) ? m.head_single : m.head_contrastive;
  const Eigen::MatrixXd& head_grad = grads.dW_head;
  for (int r = 0; r < head.W.rows(); ++r) {
    for (int c = 0; c < head.W.cols(); c += 2) {
      ProxyModel plus = m, minus = m;
      nn::Affine& hp = (task == ProxyTask::Single) ? plus.head_single : plus.head_contrastive;
      nn::Affine& hm = (task == ProxyTask::Single) ? minus.head_single : minus.head_contrastive;
      hp.W(r, c) += h;
      hm.W(r, c) -= h;
      const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
      CHECK(agree(fd, head_grad(r, c)));
      ++checked;
    }
  }
  CHECK(checked > 10);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  check_gradients(ProxyTask::Single, 7);
  check_gradients(ProxyTask::Single, 8);
  check_gradients(ProxyTask::Contrastive, 9);
  check_gradients(ProxyTask::Contrastive, 10);
}

TEST_CASE("with lambda 1 the contrastive loss leaves the body untouched") {
  const ProxyModel m = small_random_model(3);
  Rng rng(4);
  Eigen::VectorXd fo(kNumFeatures), fc(kNumFeatures);
  for (int k = 0; k < kNumFeatures; ++k) {
    fo(k) = uniform_double(rng);
    fc(k) = uniform_double(rng);
  }
  ProxyGrads gs, gc;
  gs.body = nn::MlpGrads::zeros_like(m.body);
  gc.body = nn::MlpGrads::zeros_like(m.body);
  proxy_loss_grads(m, fo, fc, 0.7, 0.2, ProxyTask::Single, gs);
  proxy_loss_grads(m, fo, fc, 0.7, 0.2, ProxyTask::Contrastive, gc);

  // the contrastive gradient through the body is real...
  double gc_norm = 0.0;
  for (const auto& w : gc.body.dW) gc_norm += w.squaredNorm();
  CHECK(gc_norm > 0.0);
  // ...but the lambda = 1 body update mixes it with weight zero
  nn::MlpGrads mixed = nn::MlpGrads::zeros_like(m.body);
  mixed.add_scaled(gs.body, 1.0);
  mixed.add_scaled(gc.body, 0.0);
  for (size_t i = 0; i < mixed.dW.size(); ++i) {
    CHECK((mixed.dW[i] - gs.body.dW[i]).norm() == doctest::Approx(0.0));
  }
  // the contrastive head still receives its own gradient
  CHECK(gc.dW_head.norm() > 0.0);
}

TEST_CASE("train_proxy fits constant labels") {
  const Dataset d = synthetic_dataset(
      64, 11, [](const Eigen::VectorXd&) { return 2.5; },
      [](const Eigen::VectorXd&) { return 2.5; });
  ProxyTrainConfig cfg;
  cfg.hidden = {16, 8};
  cfg.epochs = 400;
  cfg.lr = 0.01;
  cfg.seed = 5;
  const ProxyModel m = train_proxy(d, cfg);
  for (int i = 0; i < d.rows(); ++i) {
    const ProxyPrediction p = m.predict(d.f_org.row(i).transpose(), d.f_cf.row(i).transpose());
    CHECK(std::abs(p.r_org - 2.5) < 0.05);
    CHECK(std::abs(p.r_cf - 2.5) < 0.05);
    CHECK(std::abs(p.d - 0.0) < 0.1);
  }
}

TEST_CASE("train_proxy learns a linear target to high correlation") {
  const auto f0 = [](const Eigen::VectorXd& x) { return 3.0 * x(0) + 1.0; };
  const Dataset d = synthetic_dataset(128, 12, f0, f0);
  ProxyTrainConfig cfg;
  cfg.hidden = {32, 16};
  cfg.epochs = 300;
  cfg.lr = 3e-3;
  cfg.seed = 6;
  const ProxyModel m = train_proxy(d, cfg);
  const InformativenessReport rep = evaluate_informativeness(m, d);
  CHECK(rep.pearson_single >= 0.99);
  CHECK(rep.n_test == d.rows());
}

TEST_CASE("train_proxy is deterministic and validates inputs") {
  const auto f0 = [](const Eigen::VectorXd& x) { return x(1); };
  const Dataset d = synthetic_dataset(32, 13, f0, f0);
  ProxyTrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 5;
  cfg.seed = 9;
  const ProxyModel a = train_proxy(d, cfg);
  const ProxyModel b = train_proxy(d, cfg);
  CHECK(nn::flatten(a.body) == nn::flatten(b.body));
  CHECK(a.head_single.W == b.head_single.W);
  CHECK(a.head_contrastive.W == b.head_contrastive.W);

  Dataset raw = d;
  raw.standardized = false;
  CHECK_THROWS_AS(train_proxy(raw, cfg), std::invalid_argument);
  CHECK_THROWS_AS(train_proxy(Dataset::empty(), cfg), std::invalid_argument);

  ProxyTrainConfig bad = cfg;
  bad.lambda_mix = 1.5;
  CHECK_THROWS_AS(train_proxy(d, bad), std::invalid_argument);
}

TEST_CASE("train_proxy aborts on divergence instead of returning junk") {
  const auto f0 = [](const Eigen::VectorXd& x) { return 100.0 * x(0); };
  const Dataset d = synthetic_dataset(32, 14, f0, f0);
  ProxyTrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 200;
  cfg.lr = 1e18;
  cfg.seed = 2;
  CHECK_THROWS_AS(train_proxy(d, cfg), std::runtime_error);
}

TEST_CASE("train_proxy loss is non-increasing with a small learning rate") {
  const auto f0 = [](const Eigen::VectorXd& x) { return x(0) + 0.5 * x(2); };
  const Dataset d = synthetic_dataset(48, 15, f0, f0);
  ProxyTrainConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 40;
  cfg.lr = 1e-4;
  cfg.seed = 3;
  std::vector<double> losses;
  train_proxy(d, cfg, &losses);
  REQUIRE(losses.size() == 40);
  for (size_t i = 1; i < losses.size(); ++i) {
    CHECK(losses[i] <= losses[i - 1] * 1.01);
  }
}

TEST_CASE("predict evaluates both heads and flags dimension mismatches") {
  ProxyModel zero;
  zero.kind = ProxyKind::Mlp;
  Rng rng(1);
  zero.body = nn::Mlp::make({2 * kNumFeatures, 8}, rng, nn::OutputActivation::Relu);
  zero.head_single = nn::Affine::zeros(8, 2);
  zero.head_contrastive = nn::Affine::zeros(8, 1);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(kNumFeatures, 0.3);
  const ProxyPrediction p = zero.predict(f, f);
  CHECK(p.r_org == 0.0);
  CHECK(p.r_cf == 0.0);
  CHECK(p.d == 0.0);

  const ProxyModel m = small_random_model(21);
  const ProxyPrediction q1 = m.predict(f, f);
  const ProxyPrediction q2 = m.predict(f, f);
  CHECK(q1.r_org == q2.r_org);
  CHECK(q1.d == q2.d);
  // separate heads: the difference head need not equal r_org - r_cf
  CHECK(q1.d != doctest::Approx(q1.r_org - q1.r_cf).epsilon(1e-12));

  const Eigen::VectorXd wrong = Eigen::VectorXd::Zero(kNumFeatures + 1);
  CHECK_THROWS_AS(m.predict(wrong, wrong), std::invalid_argument);
}

TEST_CASE("train_linear recovers a planted coefficient") {
  const auto target = [](const Eigen::VectorXd& x) { return 2.0 * x(0) + 1.0; };
  const Dataset d = synthetic_dataset(256, 31, target, target);
  LinearTrainConfig cfg;
  const nn::Affine lin = train_linear_task(d, ProxyTask::Single, cfg);
  CHECK(std::abs(lin.W(0, 0) - 2.0) < 0.05);
  CHECK(std::abs(lin.b(0) - 1.0) < 0.05);
}

TEST_CASE("train_linear shrinks to the bias on constant labels") {
  const auto target = [](const Eigen::VectorXd&) { return 4.0; };
  const Dataset d = synthetic_dataset(128, 32, target, target);
  LinearTrainConfig cfg;
  const nn::Affine lin = train_linear_task(d, ProxyTask::Single, cfg);
  CHECK(std::abs(lin.b(0) - 4.0) < 0.05);
  for (int k = 0; k < kNumFeatures; ++k) CHECK(std::abs(lin.W(0, k)) < 0.05);

  const ProxyModel both = train_linear(d, cfg);
  const ProxyModel again = train_linear(d, cfg);
  CHECK(both.lin_single.W == again.lin_single.W);
  CHECK(both.lin_contrastive.W == again.lin_contrastive.W);
}

TEST_CASE("evaluate_informativeness scores an exact oracle at 1") {
  // labels are linear in the features, so a hand-built linear model is exact
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(kNumFeatures);
  coef(0) = 2.0;
  coef(3) = -1.5;
  const auto target = [&](const Eigen::VectorXd& x) { return coef.dot(x) + 0.7; };
  const Dataset d = synthetic_dataset(64, 33, target, target);

  ProxyModel oracle;
  oracle.kind = ProxyKind::Linear;
  oracle.lin_single = nn::Affine::zeros(kNumFeatures, 1);
  oracle.lin_single.W.row(0) = coef.transpose();
  oracle.lin_single.b(0) = 0.7;
  oracle.lin_contrastive = nn::Affine::zeros(2 * kNumFeatures, 1);
  oracle.lin_contrastive.W.block(0, 0, 1, kNumFeatures) = coef.transpose();
  oracle.lin_contrastive.W.block(0, kNumFeatures, 1, kNumFeatures) = -coef.transpose();

  const InformativenessReport rep = evaluate_informativeness(oracle, d);
  CHECK(rep.pearson_single == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.pearson_contrastive == doctest::Approx(1.0).epsilon(1e-9));

  // an affine transform of the labels still correlates perfectly
  ProxyModel scaled = oracle;
  scaled.lin_single.W *= 3.0;
  scaled.lin_single.b(0) = 5.0;
  CHECK(evaluate_informativeness(scaled, d).pearson_single ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an untrained model on random labels shows no correlation") {
  Rng rng(34);
  const Dataset d = synthetic_dataset(
      200, 35, [&](const Eigen::VectorXd&) { return uniform_double(rng); },
      [&](const Eigen::VectorXd&) { return uniform_double(rng); });
  const ProxyModel m = small_random_model(36);
  const InformativenessReport rep = evaluate_informativeness(m, d);
  CHECK(std::abs(rep.pearson_single) < 0.2);
  CHECK(std::abs(rep.pearson_contrastive) < 0.2);
}

TEST_CASE("cross_validate prefers the trained configuration") {
  const auto f0 = [](const Eigen::VectorXd& x) { return 2.0 * x(0); };
  const Dataset d = synthetic_dataset(60, 37, f0, f0);

  ProxyTrainConfig untrained;
  untrained.hidden = {8};
  untrained.epochs = 0;
  ProxyTrainConfig trained = untrained;
  trained.epochs = 120;
  trained.lr = 3e-3;

  const ProxyTrainConfig winner = cross_validate(d, {untrained, trained});
  CHECK(winner.epochs == trained.epochs);

  const ProxyTrainConfig only = cross_validate(d, {untrained});
  CHECK(only.epochs == untrained.epochs);

  const ProxyTrainConfig again = cross_validate(d, {untrained, trained});
  CHECK(again.epochs == winner.epochs);

  CHECK_THROWS_AS(cross_validate(d, {}), std::invalid_argument);
}
