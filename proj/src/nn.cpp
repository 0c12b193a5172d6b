#include "cte/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace cte::nn {

Affine Affine::make(int in, int out, Rng& rng) {
  Affine a;
  a.W.resize(out, in);
  a.b = Eigen::VectorXd::Zero(out);
  const double limit = std::sqrt(6.0 / (in + out));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) {
      a.W(r, c) = (2.0 * uniform_double(rng) - 1.0) * limit;
    }
  }
  return a;
}

Affine Affine::zeros(int in, int out) {
  Affine a;
  a.W = Eigen::MatrixXd::Zero(out, in);
  a.b = Eigen::VectorXd::Zero(out);
  return a;
}

Mlp Mlp::make(const std::vector<int>& dims, Rng& rng, OutputActivation output) {
  if (dims.size() < 2) throw std::invalid_argument("mlp needs at least two dims");
  Mlp m;
  m.output = output;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    m.layers.push_back(Affine::make(dims[i], dims[i + 1], rng));
  }
  return m;
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  d.push_back(layers.front().in_dim());
  for (const auto& l : layers) d.push_back(l.out_dim());
  return d;
}

static Eigen::VectorXd relu(const Eigen::VectorXd& v) {
  return v.cwiseMax(0.0);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].apply(h);
    const bool last = (i + 1 == layers.size());
    if (!last || output == OutputActivation::Relu) h = relu(h);
  }
  return h;
}

Eigen::VectorXd forward(const Mlp& m, const Eigen::VectorXd& x, MlpActivations& act) {
  act.inputs.clear();
  act.pre.clear();
  Eigen::VectorXd h = x;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    act.inputs.push_back(h);
    Eigen::VectorXd z = m.layers[i].apply(h);
    act.pre.push_back(z);
    const bool last = (i + 1 == m.layers.size());
    h = (!last || m.output == OutputActivation::Relu) ? relu(z) : z;
  }
  act.inputs.push_back(h);
  return h;
}

Eigen::VectorXd backward(const Mlp& m, const MlpActivations& act,
                         const Eigen::VectorXd& dLdy, MlpGrads& grads) {
  Eigen::VectorXd delta = dLdy;
  for (int i = static_cast<int>(m.layers.size()) - 1; i >= 0; --i) {
    const bool last = (i + 1 == static_cast<int>(m.layers.size()));
    if (!last || m.output == OutputActivation::Relu) {
      // derivative through ReLU on this layer's pre-activation
      const Eigen::VectorXd& z = act.pre[static_cast<size_t>(i)];
      for (int k = 0; k < delta.size(); ++k) {
        if (z(k) <= 0.0) delta(k) = 0.0;
      }
    }
    grads.dW[static_cast<size_t>(i)].noalias() +=
        delta * act.inputs[static_cast<size_t>(i)].transpose();
    grads.db[static_cast<size_t>(i)] += delta;
    delta = m.layers[static_cast<size_t>(i)].W.transpose() * delta;
  }
  return delta;
}

MlpGrads MlpGrads::zeros_like(const Mlp& m) {
  MlpGrads g;
  for (const auto& l : m.layers) {
    g.dW.push_back(Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()));
    g.db.push_back(Eigen::VectorXd::Zero(l.out_dim()));
  }
  return g;
}

void MlpGrads::setZero() {
  for (auto& w : dW) w.setZero();
  for (auto& b : db) b.setZero();
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
  for (size_t i = 0; i < dW.size(); ++i) {
    dW[i] += scale * other.dW[i];
    db[i] += scale * other.db[i];
  }
}

void MlpGrads::scale(double s) {
  for (auto& w : dW) w *= s;
  for (auto& b : db) b *= s;
}

AdamState AdamState::zeros_like(const Mlp& m) {
  AdamState s;
  for (const auto& l : m.layers) {
    s.mW.push_back(Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()));
    s.vW.push_back(Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()));
    s.mb.push_back(Eigen::VectorXd::Zero(l.out_dim()));
    s.vb.push_back(Eigen::VectorXd::Zero(l.out_dim()));
  }
  return s;
}

void adam_step(Mlp& m, const MlpGrads& grads, AdamState& state, double lr,
               double weight_decay) {
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t i = 0; i < m.layers.size(); ++i) {
    auto& W = m.layers[i].W;
    auto& b = m.layers[i].b;
    state.mW[i] = state.beta1 * state.mW[i] + (1.0 - state.beta1) * grads.dW[i];
    state.vW[i] = state.beta2 * state.vW[i].array().matrix() +
                  (1.0 - state.beta2) * grads.dW[i].array().square().matrix();
    state.mb[i] = state.beta1 * state.mb[i] + (1.0 - state.beta1) * grads.db[i];
    state.vb[i] = state.beta2 * state.vb[i].array().matrix() +
                  (1.0 - state.beta2) * grads.db[i].array().square().matrix();
    const Eigen::MatrixXd mW_hat = state.mW[i] / bc1;
    const Eigen::MatrixXd vW_hat = state.vW[i] / bc2;
    const Eigen::VectorXd mb_hat = state.mb[i] / bc1;
    const Eigen::VectorXd vb_hat = state.vb[i] / bc2;
    W -= lr * (mW_hat.array() / (vW_hat.array().sqrt() + state.eps)).matrix();
    b -= lr * (mb_hat.array() / (vb_hat.array().sqrt() + state.eps)).matrix();
    if (weight_decay > 0.0) W -= lr * weight_decay * W;
  }
}

void sgd_step(Mlp& m, const MlpGrads& grads, double lr, double weight_decay) {
  for (size_t i = 0; i < m.layers.size(); ++i) {
    m.layers[i].W -= lr * grads.dW[i];
    m.layers[i].b -= lr * grads.db[i];
    if (weight_decay > 0.0) m.layers[i].W -= lr * weight_decay * m.layers[i].W;
  }
}

std::vector<double> flatten(const Mlp& m) {
  std::vector<double> flat;
  for (const auto& l : m.layers) {
    for (int r = 0; r < l.W.rows(); ++r) {
      for (int c = 0; c < l.W.cols(); ++c) flat.push_back(l.W(r, c));
    }
    for (int r = 0; r < l.b.size(); ++r) flat.push_back(l.b(r));
  }
  return flat;
}

void unflatten(Mlp& m, const std::vector<double>& flat) {
  size_t k = 0;
  for (auto& l : m.layers) {
    for (int r = 0; r < l.W.rows(); ++r) {
      for (int c = 0; c < l.W.cols(); ++c) {
        if (k >= flat.size()) throw std::invalid_argument("parameter blob too short");
        l.W(r, c) = flat[k++];
      }
    }
    for (int r = 0; r < l.b.size(); ++r) {
      if (k >= flat.size()) throw std::invalid_argument("parameter blob too short");
      l.b(r) = flat[k++];
    }
  }
  if (k != flat.size()) throw std::invalid_argument("parameter blob size mismatch");
}

}  // namespace cte::nn
