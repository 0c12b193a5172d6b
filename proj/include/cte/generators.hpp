#pragma once

#include <cmath>
#include <optional>

#include "cte/criteria.hpp"

namespace cte {

enum class ExpansionMode { Random, Heuristic };
enum class SimulationMode { Random, Policy };
enum class ContinuationMode { Policy, Random };

struct MctoConfig {
  double p_end = 0.35;       // per-simulation-step terminal probability
  double threshold_a = 0.003;  // branches with policy prob <= this are pruned
  int n_iterations = 10;     // tree iterations per committed move
  double c_uct = std::sqrt(2.0);
  double gamma = 1.0;        // backpropagation discount
  int n_starts = -1;         // -1 = every state of the original trajectory
  ExpansionMode expansion_mode = ExpansionMode::Random;
  SimulationMode simulation_mode = SimulationMode::Random;

  void validate() const;
};

struct DacConfig {
  int n_deviations = 3;
  double p_end = 0.55;
  ContinuationMode continuation_mode = ContinuationMode::Policy;

  void validate() const;
};

struct RandomConfig {
  double p_end = 0.15;

  void validate() const;
};

struct GenerationContext {
  const RewardModel* reward = nullptr;
  const PolicyModel* policy = nullptr;
  NormalizationBounds bounds;
  WeightVector weights;
  const CteHistory* history = nullptr;  // may be null (treated as empty)
  MhdWeights mhd_weights;
};

struct CandidateInfo {
  int start_index = 0;
  int length = 0;
  CriterionVector criteria;
  double rho = 0.0;
  bool chosen = false;
};

// Per-call log of every candidate CTE considered, for the influence and
// trade-off analyses.
struct GenerationTrace {
  std::vector<CandidateInfo> candidates;
};

struct GenerationResult {
  Cte cte;
  CriterionVector criteria;
  double rho = 0.0;
  int start_index = 0;
};

// The same-start slice of the original episode: min(len, remaining) steps
// from index n. Throws std::out_of_range for a bad start index.
PartialTrajectory subset_original(const Trajectory& tau_org, int n, int len);

namespace detail {

// Visit statistics of one search-tree node.
struct NodeStats {
  double q = 0.0;
  int n = 0;
};

// Pushes one quality value up a leaf-to-root path: running-mean update per
// node, value discounted by gamma per level.
void backpropagate(std::vector<NodeStats*>& leaf_to_root, double rho, double gamma);

}  // namespace detail

// Monte Carlo trajectory search: per candidate start state, runs a UCT tree
// over partial trajectories with a terminal pseudo-action, committing the
// argmax-Q action after n_iterations per move; returns the quality-value
// argmax across start states.
GenerationResult generate_mcto(const Trajectory& tau_org, const GenerationContext& ctx,
                               const MctoConfig& cfg, Rng& rng,
                               GenerationTrace* trace = nullptr);

// Deviate-and-continue: per start state, forces n_deviations policy actions
// whose successors differ from the original's, then continues with the
// policy until a stochastic stop; returns the quality-value argmax.
GenerationResult generate_dac(const Trajectory& tau_org, const GenerationContext& ctx,
                              const DacConfig& cfg, Rng& rng,
                              GenerationTrace* trace = nullptr);

// Baseline: uniform start state, uniform actions, geometric stopping. The
// single draw is returned without any quality-value selection.
GenerationResult generate_random(const Trajectory& tau_org, const GenerationContext& ctx,
                                 const RandomConfig& cfg, Rng& rng,
                                 GenerationTrace* trace = nullptr);

}  // namespace cte
