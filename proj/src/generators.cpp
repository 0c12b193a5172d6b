#include "cte/generators.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

namespace cte {

void MctoConfig::validate() const {
  if (p_end <= 0.0 || p_end > 1.0) throw std::invalid_argument("p_end must be in (0,1]");
  if (threshold_a < 0.0 || threshold_a >= 1.0) {
    throw std::invalid_argument("threshold_a must be in [0,1)");
  }
  if (n_iterations < 1) throw std::invalid_argument("n_iterations must be >= 1");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0,1]");
  if (n_starts == 0 || n_starts < -1) throw std::invalid_argument("n_starts must be >= 1 or -1");
}

void DacConfig::validate() const {
  if (n_deviations < 1) throw std::invalid_argument("n_deviations must be >= 1");
  if (p_end <= 0.0 || p_end > 1.0) throw std::invalid_argument("p_end must be in (0,1]");
}

void RandomConfig::validate() const {
  if (p_end <= 0.0 || p_end > 1.0) throw std::invalid_argument("p_end must be in (0,1]");
}

namespace detail {

void backpropagate(std::vector<NodeStats*>& leaf_to_root, double rho, double gamma) {
  double v = rho;
  for (NodeStats* node : leaf_to_root) {
    node->n += 1;
    node->q += (v - node->q) / static_cast<double>(node->n);
    v *= gamma;
  }
}

}  // namespace detail

PartialTrajectory subset_original(const Trajectory& tau_org, int n, int len) {
  if (n < 0 || n >= tau_org.length()) throw std::out_of_range("start index outside trajectory");
  if (len < 1) throw std::invalid_argument("slice length must be >= 1");
  const int take = std::min(len, tau_org.length() - n);
  PartialTrajectory p;
  p.start_index = n;
  p.steps.assign(tau_org.steps.begin() + n, tau_org.steps.begin() + n + take);
  return p;
}

namespace {

// Shared per-call scaffolding: cached original per-step model rewards and
// per-start policy entropies, so candidate scoring stays cheap.
class CandidateScorer {
 public:
  CandidateScorer(const Trajectory& tau, const GenerationContext& ctx)
      : tau_(tau), ctx_(ctx), empty_history_() {
    orig_prefix_.resize(tau.steps.size() + 1, 0.0);
    for (size_t i = 0; i < tau.steps.size(); ++i) {
      orig_prefix_[i + 1] =
          orig_prefix_[i] + ctx.reward->evaluate(tau.steps[i].state, tau.steps[i].action);
    }
    importance_.assign(tau.steps.size(), std::numeric_limits<double>::quiet_NaN());
  }

  const CteHistory& history() const {
    return ctx_.history ? *ctx_.history : empty_history_;
  }

  double state_importance(int start) {
    double& v = importance_[static_cast<size_t>(start)];
    if (std::isnan(v)) {
      v = -policy_entropy(ctx_.policy->action_probs(tau_.steps[static_cast<size_t>(start)].state));
    }
    return v;
  }

  // Builds the CTE for a finished counterfactual and scores it. cf_reward_sum
  // is the sum of model rewards over cf_steps.
  GenerationResult score(int start, std::vector<TimeStep> cf_steps, double cf_reward_sum) {
    const int len = static_cast<int>(cf_steps.size());
    PartialTrajectory org = subset_original(tau_, start, len);
    if (org.length() < len) {
      // counterfactual outlives the original's remainder: truncate both
      double trimmed = 0.0;
      for (size_t i = static_cast<size_t>(org.length()); i < cf_steps.size(); ++i) {
        trimmed += ctx_.reward->evaluate(cf_steps[i].state, cf_steps[i].action);
      }
      cf_reward_sum -= trimmed;
      cf_steps.resize(static_cast<size_t>(org.length()));
    }
    PartialTrajectory cf{start, std::move(cf_steps)};

    GenerationResult res;
    res.start_index = start;
    res.cte.t_org = std::move(org);
    res.cte.t_cf = std::move(cf);
    res.cte.r_org = (orig_prefix_[static_cast<size_t>(start + res.cte.t_org.length())] -
                     orig_prefix_[static_cast<size_t>(start)]) /
                    static_cast<double>(res.cte.t_org.length());
    res.cte.r_cf = cf_reward_sum / static_cast<double>(res.cte.t_cf.length());

    CriterionVector cv;
    cv[kValidity] = measure_validity(res.cte);
    cv[kProximity] = mhd(res.cte.t_org, res.cte.t_cf, ctx_.mhd_weights);
    cv[kDiversity] = measure_diversity(res.cte, history());
    cv[kStateImportance] = state_importance(start);
    cv[kRealisticness] = measure_realisticness(res.cte);
    cv[kSparsity] = measure_sparsity(res.cte);
    res.criteria = cv;
    res.rho = scalarize(cv, ctx_.bounds, ctx_.weights);
    return res;
  }

  double model_reward(const GridState& s, EnvAction a) const {
    return ctx_.reward->evaluate(s, a);
  }

  const Trajectory& tau() const { return tau_; }
  const GenerationContext& ctx() const { return ctx_; }

 private:
  const Trajectory& tau_;
  const GenerationContext& ctx_;
  CteHistory empty_history_;
  std::vector<double> orig_prefix_;
  std::vector<double> importance_;
};

void check_inputs(const Trajectory& tau, const GenerationContext& ctx) {
  if (tau.steps.empty()) throw std::invalid_argument("empty original trajectory");
  if (ctx.reward == nullptr || ctx.policy == nullptr) {
    throw std::invalid_argument("generation context needs reward and policy models");
  }
  for (int c = 0; c < kNumCriteria; ++c) {
    if (ctx.bounds.hi[static_cast<size_t>(c)] <= ctx.bounds.lo[static_cast<size_t>(c)]) {
      throw std::invalid_argument("uncalibrated bounds: max <= min");
    }
  }
}

// Start states processed by every multi-start generator: all indices, or the
// n_starts highest-importance ones, in ascending index order.
std::vector<int> select_starts(CandidateScorer& scorer, int n_starts, int traj_len) {
  std::vector<int> starts(static_cast<size_t>(traj_len));
  for (int i = 0; i < traj_len; ++i) starts[static_cast<size_t>(i)] = i;
  if (n_starts < 0 || n_starts >= traj_len) return starts;

  std::stable_sort(starts.begin(), starts.end(), [&](int a, int b) {
    return scorer.state_importance(a) > scorer.state_importance(b);
  });
  starts.resize(static_cast<size_t>(n_starts));
  std::sort(starts.begin(), starts.end());
  return starts;
}

void keep_best(std::optional<GenerationResult>& best, GenerationResult&& cand) {
  if (!best || cand.rho > best->rho) best = std::move(cand);
}

void record_trace(GenerationTrace* trace, const GenerationResult& res) {
  if (trace == nullptr) return;
  trace->candidates.push_back(
      {res.start_index, res.cte.t_cf.length(), res.criteria, res.rho, false});
}

void mark_chosen(GenerationTrace* trace, const GenerationResult& best) {
  if (trace == nullptr) return;
  for (auto& c : trace->candidates) {
    if (c.start_index == best.start_index && !c.chosen && c.rho == best.rho) {
      c.chosen = true;
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// MCTO tree search
// ---------------------------------------------------------------------------

constexpr int kEndAction = kNumActions;  // synthetic terminal pseudo-action

struct TreeNode {
  GridState state;       // state after this node's trajectory prefix
  int abs_len = 0;       // pairs accumulated since the start state
  bool ended = false;    // reached via the terminal pseudo-action
  bool env_terminal = false;
  double reward_sum = 0.0;  // model rewards over the prefix
  detail::NodeStats stats;
  double cached_rho = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> untried;
  std::vector<std::pair<int, std::unique_ptr<TreeNode>>> children;  // sorted by action id

  bool terminal() const { return ended || env_terminal; }
};

class MctoSearch {
 public:
  MctoSearch(CandidateScorer& scorer, const MctoConfig& cfg, int start, Rng& rng)
      : scorer_(scorer), cfg_(cfg), start_(start), rng_(rng) {}

  GenerationResult run() {
    auto root = std::make_unique<TreeNode>();
    root->state = scorer_.tau().steps[static_cast<size_t>(start_)].state;
    root->env_terminal = false;
    init_branches(*root);

    std::vector<TimeStep> committed;
    double committed_reward = 0.0;

    for (;;) {
      for (int it = 0; it < cfg_.n_iterations; ++it) {
        iterate(*root, committed);
      }
      // commit the argmax-Q branch (first on ties, children sorted by action)
      int best_action = -1;
      TreeNode* best_child = nullptr;
      double best_q = -std::numeric_limits<double>::infinity();
      for (auto& [action, child] : root->children) {
        if (child->stats.q > best_q) {
          best_q = child->stats.q;
          best_action = action;
          best_child = child.get();
        }
      }
      if (best_child == nullptr || best_action == kEndAction) break;

      committed.push_back({root->state, static_cast<EnvAction>(best_action)});
      committed_reward +=
          scorer_.model_reward(root->state, static_cast<EnvAction>(best_action));
      // re-root at the committed child, keeping its subtree statistics
      std::unique_ptr<TreeNode> next;
      for (auto& [action, child] : root->children) {
        if (action == best_action) next = std::move(child);
      }
      root = std::move(next);
      if (root->env_terminal) break;
    }

    if (committed.empty()) {
      // the end branch is unavailable at length 0, so this cannot happen;
      // keep a defensive fallback to a single Stand step
      committed.push_back({root->state, EnvAction::Stand});
      committed_reward += scorer_.model_reward(root->state, EnvAction::Stand);
    }
    return scorer_.score(start_, std::move(committed), committed_reward);
  }

 private:
  void init_branches(TreeNode& node) {
    if (node.terminal()) return;
    const PolicyDistribution probs = scorer_.ctx().policy->action_probs(node.state);
    for (int a = 0; a < kNumActions; ++a) {
      if (probs.probs[static_cast<size_t>(a)] > cfg_.threshold_a) node.untried.push_back(a);
    }
    if (node.untried.empty()) {
      // every action pruned: fall back to the argmax-probability action
      int best = 0;
      for (int a = 1; a < kNumActions; ++a) {
        if (probs.probs[static_cast<size_t>(a)] > probs.probs[static_cast<size_t>(best)]) best = a;
      }
      node.untried.push_back(best);
    }
    if (node.abs_len >= 1) node.untried.push_back(kEndAction);
  }

  std::unique_ptr<TreeNode> make_child(const TreeNode& parent, int action) {
    auto child = std::make_unique<TreeNode>();
    if (action == kEndAction) {
      child->state = parent.state;
      child->abs_len = parent.abs_len;
      child->ended = true;
      child->env_terminal = parent.env_terminal;
      child->reward_sum = parent.reward_sum;
    } else {
      const auto a = static_cast<EnvAction>(action);
      StepResult sr = step(parent.state, a);
      child->state = std::move(sr.next);
      child->abs_len = parent.abs_len + 1;
      child->env_terminal = sr.terminal;
      child->reward_sum = parent.reward_sum + scorer_.model_reward(parent.state, a);
    }
    init_branches(*child);
    return child;
  }

  double evaluate_node(TreeNode& node, const std::vector<TimeStep>& pairs) {
    if (std::isnan(node.cached_rho)) {
      node.cached_rho = scorer_.score(start_, pairs, node.reward_sum).rho;
    }
    return node.cached_rho;
  }

  // One Selection / Expansion / Simulation / Back-propagation pass.
  void iterate(TreeNode& root, const std::vector<TimeStep>& committed) {
    std::vector<TreeNode*> path{&root};
    std::vector<TimeStep> pairs = committed;
    TreeNode* node = &root;

    // Selection: descend fully expanded nodes via UCT
    while (node->untried.empty() && !node->children.empty() && !node->terminal()) {
      TreeNode* next = nullptr;
      int next_action = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (auto& [action, child] : node->children) {
        const double explore = cfg_.c_uct *
            std::sqrt(std::log(static_cast<double>(std::max(node->stats.n, 1))) /
                      static_cast<double>(std::max(child->stats.n, 1)));
        const double uct = child->stats.q + explore;
        if (uct > best) {
          best = uct;
          next = child.get();
          next_action = action;
        }
      }
      if (next_action != kEndAction) {
        pairs.push_back({node->state, static_cast<EnvAction>(next_action)});
      }
      node = next;
      path.push_back(node);
    }

    double rho;
    if (node->terminal()) {
      rho = evaluate_node(*node, pairs);
    } else {
      // Expansion
      const int branch_idx = pick_branch(*node, pairs);
      const int action = node->untried[static_cast<size_t>(branch_idx)];
      node->untried.erase(node->untried.begin() + branch_idx);
      auto child = make_child(*node, action);
      TreeNode* child_ptr = child.get();
      auto pos = std::lower_bound(
          node->children.begin(), node->children.end(), action,
          [](const auto& p, int a) { return p.first < a; });
      node->children.insert(pos, {action, std::move(child)});
      if (action != kEndAction) {
        pairs.push_back({node->state, static_cast<EnvAction>(action)});
      }
      path.push_back(child_ptr);
      node = child_ptr;

      // Simulation
      rho = node->terminal() ? evaluate_node(*node, pairs)
                             : simulate(*node, pairs);
    }

    // Back-propagation: running mean with optional per-depth discount
    std::vector<detail::NodeStats*> leaf_to_root;
    leaf_to_root.reserve(path.size());
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      leaf_to_root.push_back(&(*it)->stats);
    }
    detail::backpropagate(leaf_to_root, rho, cfg_.gamma);
  }

  // Uniform or quality-value-guided choice among untried branches.
  int pick_branch(TreeNode& node, const std::vector<TimeStep>& pairs) {
    if (cfg_.expansion_mode == ExpansionMode::Random || node.untried.size() == 1) {
      return uniform_int(rng_, 0, static_cast<int>(node.untried.size()) - 1);
    }
    int best_idx = 0;
    double best_rho = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < node.untried.size(); ++i) {
      const int action = node.untried[i];
      std::vector<TimeStep> probe = pairs;
      double reward_sum = node.reward_sum;
      if (action != kEndAction) {
        const auto a = static_cast<EnvAction>(action);
        probe.push_back({node.state, a});
        reward_sum += scorer_.model_reward(node.state, a);
      }
      if (probe.empty()) continue;
      const double rho = scorer_.score(start_, std::move(probe), reward_sum).rho;
      if (rho > best_rho) {
        best_rho = rho;
        best_idx = static_cast<int>(i);
      }
    }
    return best_idx;
  }

  // Playout with per-step termination probability p_end; actions uniform or
  // policy-sampled depending on the simulation mode.
  double simulate(const TreeNode& from, std::vector<TimeStep> pairs) {
    GridState s = from.state;
    double reward_sum = from.reward_sum;
    bool env_terminal = from.env_terminal;
    while (!env_terminal) {
      if (!pairs.empty() && uniform_double(rng_) < cfg_.p_end) break;
      EnvAction a;
      if (cfg_.simulation_mode == SimulationMode::Random) {
        a = static_cast<EnvAction>(uniform_int(rng_, 0, kNumActions - 1));
      } else {
        a = sample_action(scorer_.ctx().policy->action_probs(s), rng_);
      }
      StepResult sr = step(s, a);
      pairs.push_back({s, a});
      reward_sum += scorer_.model_reward(s, a);
      env_terminal = sr.terminal;
      s = std::move(sr.next);
    }
    if (pairs.empty()) return 0.0;
    return scorer_.score(start_, std::move(pairs), reward_sum).rho;
  }

  CandidateScorer& scorer_;
  const MctoConfig& cfg_;
  int start_;
  Rng& rng_;
};

}  // namespace

GenerationResult generate_mcto(const Trajectory& tau_org, const GenerationContext& ctx,
                               const MctoConfig& cfg, Rng& rng, GenerationTrace* trace) {
  cfg.validate();
  check_inputs(tau_org, ctx);

  CandidateScorer scorer(tau_org, ctx);
  const std::vector<int> starts = select_starts(scorer, cfg.n_starts, tau_org.length());
  const uint64_t run_seed = rng();

  std::optional<GenerationResult> best;
  for (const int start : starts) {
    Rng start_rng(mix_seed(run_seed, static_cast<uint64_t>(start)));
    MctoSearch search(scorer, cfg, start, start_rng);
    GenerationResult cand = search.run();
    record_trace(trace, cand);
    keep_best(best, std::move(cand));
  }
  mark_chosen(trace, *best);
  return std::move(*best);
}

GenerationResult generate_dac(const Trajectory& tau_org, const GenerationContext& ctx,
                              const DacConfig& cfg, Rng& rng, GenerationTrace* trace) {
  cfg.validate();
  check_inputs(tau_org, ctx);

  CandidateScorer scorer(tau_org, ctx);
  const uint64_t run_seed = rng();

  std::optional<GenerationResult> best;
  for (int start = 0; start < tau_org.length(); ++start) {
    Rng start_rng(mix_seed(run_seed, static_cast<uint64_t>(start)));
    GridState s = tau_org.steps[static_cast<size_t>(start)].state;
    std::vector<TimeStep> steps;
    double reward_sum = 0.0;
    bool env_terminal = false;

    // deviation phase: force actions whose successor differs from the original
    for (int i = 0; i < cfg.n_deviations && !env_terminal; ++i) {
      const PolicyDistribution probs = ctx.policy->action_probs(s);
      const int orig_next_idx = start + i + 1;
      const GridState* orig_next = orig_next_idx < tau_org.length()
                                       ? &tau_org.steps[static_cast<size_t>(orig_next_idx)].state
                                       : nullptr;

      std::array<StepResult, kNumActions> results;
      std::array<bool, kNumActions> allowed{};
      double allowed_mass = 0.0;
      for (int a = 0; a < kNumActions; ++a) {
        results[static_cast<size_t>(a)] = step(s, static_cast<EnvAction>(a));
        const bool differs =
            orig_next == nullptr || !(results[static_cast<size_t>(a)].next == *orig_next);
        allowed[static_cast<size_t>(a)] = differs;
        if (differs) allowed_mass += probs.probs[static_cast<size_t>(a)];
      }

      int chosen;
      if (allowed_mass <= 0.0) {
        // no action escapes the original's successor: take the least likely
        chosen = 0;
        for (int a = 1; a < kNumActions; ++a) {
          if (probs.probs[static_cast<size_t>(a)] < probs.probs[static_cast<size_t>(chosen)]) {
            chosen = a;
          }
        }
      } else {
        const double u = uniform_double(start_rng) * allowed_mass;
        double acc = 0.0;
        chosen = -1;
        for (int a = 0; a < kNumActions; ++a) {
          if (!allowed[static_cast<size_t>(a)]) continue;
          acc += probs.probs[static_cast<size_t>(a)];
          chosen = a;
          if (u < acc) break;
        }
      }

      steps.push_back({s, static_cast<EnvAction>(chosen)});
      reward_sum += scorer.model_reward(s, static_cast<EnvAction>(chosen));
      env_terminal = results[static_cast<size_t>(chosen)].terminal;
      s = std::move(results[static_cast<size_t>(chosen)].next);
    }

    // continuation phase: follow the policy until the stochastic stop
    while (!env_terminal) {
      if (uniform_double(start_rng) < cfg.p_end) break;
      EnvAction a;
      if (cfg.continuation_mode == ContinuationMode::Policy) {
        a = sample_action(ctx.policy->action_probs(s), start_rng);
      } else {
        a = static_cast<EnvAction>(uniform_int(start_rng, 0, kNumActions - 1));
      }
      StepResult sr = step(s, a);
      steps.push_back({s, a});
      reward_sum += scorer.model_reward(s, a);
      env_terminal = sr.terminal;
      s = std::move(sr.next);
    }

    GenerationResult cand = scorer.score(start, std::move(steps), reward_sum);
    record_trace(trace, cand);
    keep_best(best, std::move(cand));
  }
  mark_chosen(trace, *best);
  return std::move(*best);
}

GenerationResult generate_random(const Trajectory& tau_org, const GenerationContext& ctx,
                                 const RandomConfig& cfg, Rng& rng, GenerationTrace* trace) {
  cfg.validate();
  check_inputs(tau_org, ctx);

  CandidateScorer scorer(tau_org, ctx);
  const int start = uniform_int(rng, 0, tau_org.length() - 1);

  GridState s = tau_org.steps[static_cast<size_t>(start)].state;
  std::vector<TimeStep> steps;
  double reward_sum = 0.0;
  for (;;) {
    const auto a = static_cast<EnvAction>(uniform_int(rng, 0, kNumActions - 1));
    StepResult sr = step(s, a);
    steps.push_back({s, a});
    reward_sum += scorer.model_reward(s, a);
    if (sr.terminal) break;
    s = std::move(sr.next);
    if (uniform_double(rng) < cfg.p_end) break;
  }

  GenerationResult res = scorer.score(start, std::move(steps), reward_sum);
  record_trace(trace, res);
  mark_chosen(trace, res);
  return res;
}

}  // namespace cte
