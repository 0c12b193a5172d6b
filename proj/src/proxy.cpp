#include "cte/proxy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cte/stats.hpp"

namespace cte {

namespace {

Eigen::VectorXd concat_features(const Eigen::VectorXd& f_org, const Eigen::VectorXd& f_cf) {
  Eigen::VectorXd x(f_org.size() + f_cf.size());
  x << f_org, f_cf;
  return x;
}

}  // namespace

ProxyPrediction ProxyModel::predict(const Eigen::VectorXd& f_org,
                                    const Eigen::VectorXd& f_cf) const {
  ProxyPrediction p;
  if (kind == ProxyKind::Mlp) {
    if (f_org.size() + f_cf.size() != body.in_dim()) {
      throw std::invalid_argument("feature dimension mismatch");
    }
    const Eigen::VectorXd h = body.forward(concat_features(f_org, f_cf));
    const Eigen::VectorXd ys = head_single.apply(h);
    const Eigen::VectorXd yc = head_contrastive.apply(h);
    p.r_org = ys(0);
    p.r_cf = ys(1);
    p.d = yc(0);
  } else {
    if (f_org.size() != lin_single.in_dim()) {
      throw std::invalid_argument("feature dimension mismatch");
    }
    p.r_org = lin_single.apply(f_org)(0);
    p.r_cf = lin_single.apply(f_cf)(0);
    p.d = lin_contrastive.apply(concat_features(f_org, f_cf))(0);
  }
  return p;
}

double proxy_loss_grads(const ProxyModel& m, const Eigen::VectorXd& f_org,
                        const Eigen::VectorXd& f_cf, double y_org, double y_cf,
                        ProxyTask task, ProxyGrads& grads) {
  const Eigen::VectorXd x = concat_features(f_org, f_cf);
  nn::MlpActivations act;
  const Eigen::VectorXd h = nn::forward(m.body, x, act);

  const nn::Affine& head = (task == ProxyTask::Single) ? m.head_single : m.head_contrastive;
  const Eigen::VectorXd y = head.apply(h);

  double loss;
  Eigen::VectorXd dLdy(y.size());
  if (task == ProxyTask::Single) {
    const double e_org = y(0) - y_org;
    const double e_cf = y(1) - y_cf;
    loss = e_org * e_org + e_cf * e_cf;
    dLdy(0) = 2.0 * e_org;
    dLdy(1) = 2.0 * e_cf;
  } else {
    const double e = y(0) - (y_org - y_cf);
    loss = e * e;
    dLdy(0) = 2.0 * e;
  }

  grads.dW_head = dLdy * h.transpose();
  grads.db_head = dLdy;
  const Eigen::VectorXd dLdh = head.W.transpose() * dLdy;
  nn::backward(m.body, act, dLdh, grads.body);
  return loss;
}

ProxyModel train_proxy(const Dataset& train, const ProxyTrainConfig& cfg,
                       std::vector<double>* epoch_losses) {
  if (train.rows() == 0) throw std::invalid_argument("empty dataset");
  if (!train.standardized) throw std::invalid_argument("dataset must be standardized");
  if (cfg.lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (cfg.lambda_mix < 0.0 || cfg.lambda_mix > 1.0) {
    throw std::invalid_argument("lambda mix must lie in [0,1]");
  }

  const int in_dim = 2 * kNumFeatures;
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int h : cfg.hidden) dims.push_back(h);

  Rng init_rng(mix_seed(cfg.seed, 0));
  ProxyModel m;
  m.kind = ProxyKind::Mlp;
  m.body = nn::Mlp::make(dims, init_rng, nn::OutputActivation::Relu);
  const int body_out = m.body.out_dim();
  m.head_single = nn::Affine::make(body_out, 2, init_rng);
  m.head_contrastive = nn::Affine::make(body_out, 1, init_rng);

  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  std::vector<int> order(static_cast<size_t>(train.rows()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  nn::AdamState body_adam = nn::AdamState::zeros_like(m.body);
  // heads packed as single-layer nets to reuse the Adam helper
  nn::Mlp single_net, contrastive_net;
  single_net.layers.push_back(m.head_single);
  contrastive_net.layers.push_back(m.head_contrastive);
  nn::AdamState single_adam = nn::AdamState::zeros_like(single_net);
  nn::AdamState contrastive_adam = nn::AdamState::zeros_like(contrastive_net);

  ProxyGrads gs, gc;
  gs.body = nn::MlpGrads::zeros_like(m.body);
  gc.body = nn::MlpGrads::zeros_like(m.body);
  nn::MlpGrads body_batch = nn::MlpGrads::zeros_like(m.body);
  nn::MlpGrads single_batch = nn::MlpGrads::zeros_like(single_net);
  nn::MlpGrads contrastive_batch = nn::MlpGrads::zeros_like(contrastive_net);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_vec(order, shuffle_rng);
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      body_batch.setZero();
      single_batch.setZero();
      contrastive_batch.setZero();
      double batch_loss = 0.0;

      for (size_t k = begin; k < end; ++k) {
        const int i = order[k];
        const Eigen::VectorXd fo = train.f_org.row(i).transpose();
        const Eigen::VectorXd fc = train.f_cf.row(i).transpose();
        gs.body.setZero();
        gc.body.setZero();
        const double ls = proxy_loss_grads(m, fo, fc, train.y_org(i), train.y_cf(i),
                                           ProxyTask::Single, gs);
        const double lc = proxy_loss_grads(m, fo, fc, train.y_org(i), train.y_cf(i),
                                           ProxyTask::Contrastive, gc);
        batch_loss += cfg.lambda_mix * ls + (1.0 - cfg.lambda_mix) * lc;

        body_batch.add_scaled(gs.body, cfg.lambda_mix);
        body_batch.add_scaled(gc.body, 1.0 - cfg.lambda_mix);
        single_batch.dW[0] += gs.dW_head;
        single_batch.db[0] += gs.db_head;
        contrastive_batch.dW[0] += gc.dW_head;
        contrastive_batch.db[0] += gc.db_head;
      }

      const double inv = 1.0 / static_cast<double>(end - begin);
      body_batch.scale(inv);
      single_batch.scale(inv);
      contrastive_batch.scale(inv);

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("proxy training diverged: non-finite loss");
      }

      nn::adam_step(m.body, body_batch, body_adam, cfg.lr, cfg.weight_decay);
      single_net.layers[0] = m.head_single;
      nn::adam_step(single_net, single_batch, single_adam, cfg.lr, cfg.weight_decay);
      m.head_single = single_net.layers[0];
      contrastive_net.layers[0] = m.head_contrastive;
      nn::adam_step(contrastive_net, contrastive_batch, contrastive_adam, cfg.lr,
                    cfg.weight_decay);
      m.head_contrastive = contrastive_net.layers[0];
    }
    if (epoch_losses != nullptr) {
      double total = 0.0;
      ProxyGrads scratch_s, scratch_c;
      scratch_s.body = nn::MlpGrads::zeros_like(m.body);
      scratch_c.body = nn::MlpGrads::zeros_like(m.body);
      for (int i = 0; i < train.rows(); ++i) {
        const Eigen::VectorXd fo = train.f_org.row(i).transpose();
        const Eigen::VectorXd fc = train.f_cf.row(i).transpose();
        const double ls = proxy_loss_grads(m, fo, fc, train.y_org(i), train.y_cf(i),
                                           ProxyTask::Single, scratch_s);
        const double lc = proxy_loss_grads(m, fo, fc, train.y_org(i), train.y_cf(i),
                                           ProxyTask::Contrastive, scratch_c);
        total += cfg.lambda_mix * ls + (1.0 - cfg.lambda_mix) * lc;
      }
      epoch_losses->push_back(total / static_cast<double>(train.rows()));
    }
  }
  return m;
}

nn::Affine train_linear_task(const Dataset& train, ProxyTask task,
                             const LinearTrainConfig& cfg) {
  if (train.rows() == 0) throw std::invalid_argument("empty dataset");
  if (!train.standardized) throw std::invalid_argument("dataset must be standardized");

  // single: one 45-input model fitted on org and cf rows pooled;
  // contrastive: one 90-input model on the concatenated pair.
  const int in_dim = (task == ProxyTask::Single) ? kNumFeatures : 2 * kNumFeatures;
  nn::Affine lin = nn::Affine::zeros(in_dim, 1);
  const int n = train.rows();

  // full-batch gradient descent starting at the configured rate, halving it
  // whenever the loss stops improving (the step is reverted first)
  double lr = cfg.lr;
  double prev_loss = std::numeric_limits<double>::infinity();
  nn::Affine prev = lin;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(1, in_dim);
    double db = 0.0;
    double loss = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      if (task == ProxyTask::Single) {
        for (int side = 0; side < 2; ++side) {
          const Eigen::VectorXd x = (side == 0 ? train.f_org.row(i) : train.f_cf.row(i)).transpose();
          const double y = side == 0 ? train.y_org(i) : train.y_cf(i);
          const double e = lin.apply(x)(0) - y;
          loss += e * e;
          dW += 2.0 * e * x.transpose();
          db += 2.0 * e;
          ++count;
        }
      } else {
        const Eigen::VectorXd x =
            concat_features(train.f_org.row(i).transpose(), train.f_cf.row(i).transpose());
        const double e = lin.apply(x)(0) - (train.y_org(i) - train.y_cf(i));
        loss += e * e;
        dW += 2.0 * e * x.transpose();
        db += 2.0 * e;
        ++count;
      }
    }
    loss /= static_cast<double>(count);
    loss += 0.5 * cfg.weight_decay * lin.W.squaredNorm();  // the objective GD follows
    if (!std::isfinite(loss) || loss > prev_loss) {
      lin = prev;
      lr *= 0.5;
      if (lr < 1e-12) {
        throw std::runtime_error("linear training diverged: step size underflow");
      }
      continue;
    }
    prev = lin;
    prev_loss = loss;
    const double inv = 1.0 / static_cast<double>(count);
    lin.W -= lr * (inv * dW + cfg.weight_decay * lin.W);
    lin.b(0) -= lr * inv * db;
  }
  return lin;
}

ProxyModel train_linear(const Dataset& train, const LinearTrainConfig& cfg) {
  ProxyModel m;
  m.kind = ProxyKind::Linear;
  m.lin_single = train_linear_task(train, ProxyTask::Single, cfg);
  m.lin_contrastive = train_linear_task(train, ProxyTask::Contrastive, cfg);
  return m;
}

InformativenessReport evaluate_informativeness(const ProxyModel& m, const Dataset& test) {
  if (test.rows() == 0) throw std::invalid_argument("empty test dataset");
  const int n = test.rows();
  std::vector<double> pred_single, label_single, pred_diff, label_diff;
  pred_single.reserve(static_cast<size_t>(2 * n));
  label_single.reserve(static_cast<size_t>(2 * n));
  pred_diff.reserve(static_cast<size_t>(n));
  label_diff.reserve(static_cast<size_t>(n));

  for (int i = 0; i < n; ++i) {
    const ProxyPrediction p =
        m.predict(test.f_org.row(i).transpose(), test.f_cf.row(i).transpose());
    pred_single.push_back(p.r_org);
    label_single.push_back(test.y_org(i));
    pred_single.push_back(p.r_cf);
    label_single.push_back(test.y_cf(i));
    pred_diff.push_back(p.d);
    label_diff.push_back(test.y_org(i) - test.y_cf(i));
  }

  InformativenessReport r;
  r.pearson_single = pearson(pred_single, label_single);
  r.pearson_contrastive = pearson(pred_diff, label_diff);
  r.n_test = n;
  return r;
}

ProxyTrainConfig cross_validate(const Dataset& data,
                                const std::vector<ProxyTrainConfig>& grid) {
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  if (data.rows() < 5) throw std::invalid_argument("cross-validation needs >= 5 rows");

  constexpr int kFolds = 5;
  constexpr uint64_t kFoldSeed = 0xC5F01Du;
  std::vector<int> order(static_cast<size_t>(data.rows()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng fold_rng(kFoldSeed);
  shuffle_vec(order, fold_rng);

  double best_score = -2.0;
  size_t best_idx = 0;
  for (size_t g = 0; g < grid.size(); ++g) {
    double score_sum = 0.0;
    int score_count = 0;
    for (int fold = 0; fold < kFolds; ++fold) {
      std::vector<int> train_idx, val_idx;
      for (size_t i = 0; i < order.size(); ++i) {
        if (static_cast<int>(i % kFolds) == fold) {
          val_idx.push_back(order[i]);
        } else {
          train_idx.push_back(order[i]);
        }
      }
      if (val_idx.empty() || train_idx.empty()) continue;
      Dataset train = data.slice(train_idx);
      Dataset val = data.slice(val_idx);
      ProxyTrainConfig cfg = grid[g];
      cfg.seed = mix_seed(cfg.seed, static_cast<uint64_t>(fold) + 1);
      const ProxyModel m = train_proxy(train, cfg);
      double score;
      try {
        score = evaluate_informativeness(m, val).pearson_single;
      } catch (const std::invalid_argument&) {
        score = 0.0;  // degenerate validation fold
      }
      score_sum += score;
      ++score_count;
    }
    const double mean_score =
        score_count > 0 ? score_sum / static_cast<double>(score_count) : -2.0;
    if (mean_score > best_score) {
      best_score = mean_score;
      best_idx = g;
    }
  }
  return grid[best_idx];
}

}  // namespace cte
