#pragma once

#include "cte/features.hpp"
#include "cte/nn.hpp"

namespace cte {

enum class ProxyKind { Mlp, Linear };
enum class ProxyTask { Single, Contrastive };

struct ProxyTrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 150;
  std::vector<int> hidden = {128, 64, 32};
  double lambda_mix = 0.5;  // single-task share of the body update
  int batch_size = 32;
  uint64_t seed = 0;
};

struct LinearTrainConfig {
  double lr = 0.1;
  double weight_decay = 0.01;
  int epochs = 400;
  uint64_t seed = 0;
};

struct ProxyPrediction {
  double r_org = 0.0;
  double r_cf = 0.0;
  double d = 0.0;  // predicted r_org - r_cf (contrastive head)
};

// Multi-task regressor over the concatenated (org, cf) feature pair: a
// shared ReLU body feeding two affine heads, one emitting both average
// rewards and one emitting their difference. The linear ablation replaces it
// with two independent linear models.
struct ProxyModel {
  ProxyKind kind = ProxyKind::Mlp;

  // kind == Mlp
  nn::Mlp body;  // output activation Relu
  nn::Affine head_single;       // body_out -> 2
  nn::Affine head_contrastive;  // body_out -> 1

  // kind == Linear
  nn::Affine lin_single;        // 45 -> 1, applied to each trajectory
  nn::Affine lin_contrastive;   // 90 -> 1

  ProxyPrediction predict(const Eigen::VectorXd& f_org, const Eigen::VectorXd& f_cf) const;
};

// Per-task loss and analytic gradients on one sample; the body gradient is
// the task's own, unmixed. Used by training and by the finite-difference
// gradient checks.
struct ProxyGrads {
  nn::MlpGrads body;
  Eigen::MatrixXd dW_head;
  Eigen::VectorXd db_head;
};

double proxy_loss_grads(const ProxyModel& m, const Eigen::VectorXd& f_org,
                        const Eigen::VectorXd& f_cf, double y_org, double y_cf,
                        ProxyTask task, ProxyGrads& grads);

// Multi-task training: each head is updated by its own loss; the shared body
// receives lambda * dL_single + (1 - lambda) * dL_contrastive. Adam with
// decoupled weight decay; shuffled minibatches; deterministic per seed.
// Throws on an unstandardized/empty dataset and on non-finite loss.
// epoch_losses, when given, receives the mean mixed loss after each epoch.
ProxyModel train_proxy(const Dataset& train, const ProxyTrainConfig& cfg,
                       std::vector<double>* epoch_losses = nullptr);

// Independent linear model for one task, full-batch gradient descent with L2
// weight decay.
nn::Affine train_linear_task(const Dataset& train, ProxyTask task,
                             const LinearTrainConfig& cfg);

// Both task models, packaged as a linear ProxyModel.
ProxyModel train_linear(const Dataset& train, const LinearTrainConfig& cfg);

struct InformativenessReport {
  double pearson_single = 0.0;
  double pearson_contrastive = 0.0;
  int n_test = 0;
};

// pearson_single pools the (prediction, label) pairs of both trajectories;
// pearson_contrastive correlates the difference head with the label gap.
InformativenessReport evaluate_informativeness(const ProxyModel& m, const Dataset& test);

// 5-fold cross-validation over a fixed index shuffle; returns the config
// with the highest mean validation pearson_single, earliest on ties.
ProxyTrainConfig cross_validate(const Dataset& data,
                                const std::vector<ProxyTrainConfig>& grid);

}  // namespace cte
