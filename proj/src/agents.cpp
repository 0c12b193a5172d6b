#include "cte/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cte {

void PolicyDistribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("policy probability below zero");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("policy probabilities do not sum to 1");
  }
}

namespace {

int nearest_human_distance(const GridState& s, Cell from) {
  int best = std::numeric_limits<int>::max();
  for (const Cell& h : s.humans) best = std::min(best, manhattan(from, h));
  return best;
}

}  // namespace

PolicyDistribution heuristic_policy(const GridState& s, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");

  std::array<double, kNumActions> scores{};
  for (int i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<EnvAction>(i);
    const Cell d = action_delta(a);
    const Cell target{s.player.x + d.x, s.player.y + d.y};

    if (is_interact(a) && s.has_human(target)) {
      scores[static_cast<size_t>(i)] = 10.0;
      continue;
    }
    Cell post = s.player;
    if (is_move(a) && s.in_bounds(target) && !s.has_obstacle(target)) {
      post = target;  // blocked moves keep the Stand position
    }
    if (s.humans.empty()) {
      scores[static_cast<size_t>(i)] = (post == s.extinguisher()) ? 1.0 : 0.0;
    } else {
      scores[static_cast<size_t>(i)] = -static_cast<double>(nearest_human_distance(s, post));
    }
  }

  double max_score = scores[0];
  for (double v : scores) max_score = std::max(max_score, v);

  PolicyDistribution dist;
  double sum = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    const double e = std::exp((scores[static_cast<size_t>(i)] - max_score) / temperature);
    dist.probs[static_cast<size_t>(i)] = e;
    sum += e;
  }
  for (double& p : dist.probs) p /= sum;
  return dist;
}

HeuristicPolicy::HeuristicPolicy(double temperature) : temperature_(temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
}

PolicyDistribution HeuristicPolicy::action_probs(const GridState& s) const {
  return heuristic_policy(s, temperature_);
}

double GroundTruthReward::evaluate(const GridState& s, EnvAction a) const {
  return step(s, a).gt_reward;
}

EnvAction sample_action(const PolicyDistribution& d, Rng& rng) {
  const double u = uniform_double(rng);
  double acc = 0.0;
  double total = 0.0;
  for (double p : d.probs) total += p;
  for (int i = 0; i < kNumActions; ++i) {
    acc += d.probs[static_cast<size_t>(i)] / total;
    if (u < acc) return static_cast<EnvAction>(i);
  }
  return EnvAction::Stand;
}

double policy_entropy(const PolicyDistribution& d) {
  double h = 0.0;
  for (double p : d.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Trajectory rollout(const PolicyModel& policy, const GridConfig& cfg, Rng& rng) {
  Trajectory tau;
  GridState s = init_random(cfg, rng);
  tau.steps.reserve(static_cast<size_t>(cfg.horizon));
  tau.gt_rewards.reserve(static_cast<size_t>(cfg.horizon));
  for (int i = 0; i < cfg.horizon; ++i) {
    const EnvAction a = sample_action(policy.action_probs(s), rng);
    StepResult r = step(s, a);
    tau.steps.push_back({s, a});
    tau.gt_rewards.push_back(r.gt_reward);
    s = std::move(r.next);
  }
  return tau;
}

int MlpRewardModel::encoding_dim(int extent) {
  return 2 * extent + extent * extent + 1 + kNumActions + 1;
}

Eigen::VectorXd MlpRewardModel::encode(const GridState& s, EnvAction a) {
  const int e = s.extent;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(encoding_dim(e));
  int off = 0;
  x(off + s.player.x - 1) = 1.0;
  off += e;
  x(off + s.player.y - 1) = 1.0;
  off += e;
  for (const Cell& h : s.humans) {
    x(off + (h.y - 1) * e + (h.x - 1)) = 1.0;
  }
  off += e * e;
  x(off) = (s.player == s.extinguisher()) ? 1.0 : 0.0;
  off += 1;
  x(off + static_cast<int>(a)) = 1.0;
  off += kNumActions;
  if (is_interact(a)) {
    const Cell d = action_delta(a);
    const Cell target{s.player.x + d.x, s.player.y + d.y};
    if (s.has_human(target)) x(off) = 1.0;
  }
  return x;
}

MlpRewardModel::MlpRewardModel(nn::Mlp net, std::string id)
    : net_(std::move(net)), id_(std::move(id)) {}

double MlpRewardModel::evaluate(const GridState& s, EnvAction a) const {
  return net_.forward(encode(s, a))(0);
}

MlpRewardModel distill_reward(const std::vector<RewardSample>& samples,
                              double noise_sigma,
                              const std::vector<int>& hidden_sizes,
                              uint64_t seed,
                              std::vector<double>* epoch_losses) {
  if (samples.size() < 100) throw std::invalid_argument("too few samples to distill from");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");

  const int in_dim = MlpRewardModel::encoding_dim(samples.front().state.extent);
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int h : hidden_sizes) dims.push_back(h);
  dims.push_back(1);

  Rng init_rng(mix_seed(seed, 0));
  nn::Mlp net = nn::Mlp::make(dims, init_rng);

  Rng train_rng(mix_seed(seed, 1));
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& smp : samples) {
    xs.push_back(MlpRewardModel::encode(smp.state, smp.action));
    double y = smp.gt_reward;
    if (noise_sigma > 0.0) y += noise_sigma * normal_double(train_rng);
    ys.push_back(y);
  }

  // roughly constant total update count across sample-set sizes
  const int epochs = std::clamp(static_cast<int>(3000000 / samples.size()), 30, 400);
  const size_t batch = 64;
  const double lr = 0.01;

  std::vector<int> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  nn::MlpGrads grads = nn::MlpGrads::zeros_like(net);
  nn::MlpActivations act;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_vec(order, train_rng);
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      grads.setZero();
      for (size_t k = start; k < end; ++k) {
        const int idx = order[k];
        const Eigen::VectorXd out = nn::forward(net, xs[static_cast<size_t>(idx)], act);
        Eigen::VectorXd dLdy(1);
        dLdy(0) = 2.0 * (out(0) - ys[static_cast<size_t>(idx)]);
        nn::backward(net, act, dLdy, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      nn::sgd_step(net, grads, lr, 0.0);
    }
    if (epoch_losses != nullptr) {
      double mse = 0.0;
      for (size_t i = 0; i < xs.size(); ++i) {
        const double e = net.forward(xs[i])(0) - ys[i];
        mse += e * e;
      }
      epoch_losses->push_back(mse / static_cast<double>(xs.size()));
    }
  }

  return MlpRewardModel(std::move(net), "distilled");
}

double avg_reward(const RewardModel& m, const PartialTrajectory& t) {
  if (t.steps.empty()) throw std::invalid_argument("empty trajectory");
  double sum = 0.0;
  for (const TimeStep& ts : t.steps) sum += m.evaluate(ts.state, ts.action);
  return sum / static_cast<double>(t.steps.size());
}

}  // namespace cte
