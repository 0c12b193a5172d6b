#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "cte/nn.hpp"
#include "cte/trajectory.hpp"

namespace cte {

struct PolicyDistribution {
  std::array<double, kNumActions> probs{};

  // Throws std::invalid_argument unless entries are >= 0 and sum to 1
  // within 1e-9.
  void validate() const;
};

class PolicyModel {
 public:
  virtual ~PolicyModel() = default;
  virtual PolicyDistribution action_probs(const GridState& s) const = 0;
};

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual double evaluate(const GridState& s, EnvAction a) const = 0;
  virtual std::string name() const = 0;
};

// Softmax over hand-crafted action scores: +10 for an action that saves a
// human now, otherwise minus the post-move Manhattan distance to the nearest
// human; +1 for ending on the extinguisher once no humans remain. Blocked
// moves score as Stand.
PolicyDistribution heuristic_policy(const GridState& s, double temperature);

class HeuristicPolicy final : public PolicyModel {
 public:
  explicit HeuristicPolicy(double temperature = 0.5);
  PolicyDistribution action_probs(const GridState& s) const override;
  double temperature() const { return temperature_; }

 private:
  double temperature_;
};

// Evaluates the environment's ground-truth reward for (s, a).
class GroundTruthReward final : public RewardModel {
 public:
  double evaluate(const GridState& s, EnvAction a) const override;
  std::string name() const override { return "ground_truth"; }
};

// Small regressor over a fixed (state, action) encoding; stands in for a
// learned reward function. Exact on construction, optionally fitted to
// noisy targets to emulate an imperfect learned reward.
class MlpRewardModel final : public RewardModel {
 public:
  MlpRewardModel(nn::Mlp net, std::string id);

  double evaluate(const GridState& s, EnvAction a) const override;
  std::string name() const override { return id_; }
  const nn::Mlp& net() const { return net_; }

  // Encoding: player x/y one-hots, per-cell human indicators, standing-on-
  // extinguisher flag, action one-hot, saves-a-human-now flag.
  static int encoding_dim(int extent);
  static Eigen::VectorXd encode(const GridState& s, EnvAction a);

 private:
  nn::Mlp net_;
  std::string id_;
};

EnvAction sample_action(const PolicyDistribution& d, Rng& rng);

// Shannon entropy H = -sum p ln p, with 0 ln 0 := 0.
double policy_entropy(const PolicyDistribution& d);

// Full episode from a fresh random initialization, sampling the policy at
// every step and recording ground-truth rewards.
Trajectory rollout(const PolicyModel& policy, const GridConfig& cfg, Rng& rng);

struct RewardSample {
  GridState state;
  EnvAction action = EnvAction::Stand;
  double gt_reward = 0.0;
};

// Fits an MLP regressor to gt_reward + N(0, noise_sigma) targets via
// minibatch SGD. Requires at least 100 samples. epoch_losses, when given,
// receives the mean training MSE after each epoch.
MlpRewardModel distill_reward(const std::vector<RewardSample>& samples,
                              double noise_sigma,
                              const std::vector<int>& hidden_sizes,
                              uint64_t seed,
                              std::vector<double>* epoch_losses = nullptr);

// Mean model reward over the (state, action) pairs of a partial trajectory.
double avg_reward(const RewardModel& m, const PartialTrajectory& t);

}  // namespace cte
