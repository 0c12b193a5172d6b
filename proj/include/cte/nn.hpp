#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cte/rng.hpp"

namespace cte::nn {

struct Affine {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  static Affine make(int in, int out, Rng& rng);      // Glorot-uniform init
  static Affine zeros(int in, int out);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return W * x + b; }
  int in_dim() const { return static_cast<int>(W.cols()); }
  int out_dim() const { return static_cast<int>(W.rows()); }
};

enum class OutputActivation { Linear, Relu };

// Small fully connected net: ReLU between layers, configurable output
// activation (Relu when the net serves as a shared body feeding heads).
struct Mlp {
  std::vector<Affine> layers;
  OutputActivation output = OutputActivation::Linear;

  // dims = {in, hidden..., out}
  static Mlp make(const std::vector<int>& dims, Rng& rng,
                  OutputActivation output = OutputActivation::Linear);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }
  std::vector<int> dims() const;
};

// Per-layer activations kept for backprop: inputs[i] feeds layers[i];
// inputs.back() is the network output (post output activation).
struct MlpActivations {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> pre;  // pre-activation per layer
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  static MlpGrads zeros_like(const Mlp& m);
  void setZero();
  void add_scaled(const MlpGrads& other, double scale);
  void scale(double s);
};

Eigen::VectorXd forward(const Mlp& m, const Eigen::VectorXd& x, MlpActivations& act);

// Backpropagates dL/dy through the net, accumulating into grads; returns
// dL/dx for callers that chain further backward.
Eigen::VectorXd backward(const Mlp& m, const MlpActivations& act,
                         const Eigen::VectorXd& dLdy, MlpGrads& grads);

struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_like(const Mlp& m);
};

// Adam update with decoupled weight decay applied to weight matrices only.
void adam_step(Mlp& m, const MlpGrads& grads, AdamState& state, double lr,
               double weight_decay);

// Plain SGD with decoupled weight decay on weight matrices.
void sgd_step(Mlp& m, const MlpGrads& grads, double lr, double weight_decay);

// Flat parameter access used by serialization and gradient checks.
std::vector<double> flatten(const Mlp& m);
void unflatten(Mlp& m, const std::vector<double>& flat);

}  // namespace cte::nn
