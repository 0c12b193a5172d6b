#include "cte/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "cte/io.hpp"
#include "cte/stats.hpp"

namespace cte {

ScalePreset desk_scale() { return {200, 160, 40, 8, 5, 50}; }
ScalePreset paper_scale() { return {1000, 800, 200, 30, 10, 100}; }

ScalePreset preset_by_name(const std::string& name) {
  if (name == "desk") return desk_scale();
  if (name == "paper") return paper_scale();
  throw std::invalid_argument("unknown scale preset: " + name);
}

WeightVector reference_weights() {
  WeightVector w;
  w[kValidity] = 0.982;
  w[kProximity] = 0.98;
  w[kDiversity] = 0.576;
  w[kStateImportance] = 0.528;
  w[kRealisticness] = 0.303;
  w[kSparsity] = 0.851;
  return w;
}

ExperimentPlan::ExperimentPlan() : scale(desk_scale()), weights(reference_weights()) {}

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string ReportTable::to_csv() const {
  std::ostringstream out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ",";
    out << io::csv_escape(columns[i]);
  }
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << io::csv_escape(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

const ReportTable& AnalysisReport::table(const std::string& name) const {
  for (const ReportTable& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no table named " + name);
}

namespace {

constexpr uint64_t kStreamDistillSamples = 1;
constexpr uint64_t kStreamDistillTrain = 2;
constexpr uint64_t kStreamCalibration = 3;
constexpr uint64_t kStreamGeneration = 100;
constexpr uint64_t kStreamTraining = 200;
constexpr uint64_t kStreamWeights = 300;

std::vector<RewardSample> collect_reward_samples(const ExperimentPlan& plan,
                                                 const PolicyModel& policy, Rng& rng) {
  std::vector<RewardSample> samples;
  samples.reserve(static_cast<size_t>(plan.providers.distill_episodes) *
                  static_cast<size_t>(plan.env.horizon));
  for (int ep = 0; ep < plan.providers.distill_episodes; ++ep) {
    GridState s = init_random(plan.env, rng);
    const bool random_episode = (ep % 2 == 1);  // mix policy and uniform coverage
    for (int i = 0; i < plan.env.horizon; ++i) {
      EnvAction a;
      if (random_episode) {
        a = static_cast<EnvAction>(uniform_int(rng, 0, kNumActions - 1));
      } else {
        a = sample_action(policy.action_probs(s), rng);
      }
      StepResult r = step(s, a);
      samples.push_back({s, a, r.gt_reward});
      s = std::move(r.next);
    }
  }
  return samples;
}

struct GeneratorRunner {
  const ExperimentPlan& plan;
  const ExperimentSetup& setup;

  GenerationResult run(const std::string& name, const Trajectory& tau,
                       const WeightVector& weights, const CteHistory& history, Rng& rng,
                       GenerationTrace* trace = nullptr) const {
    GenerationContext ctx;
    ctx.reward = setup.reward.get();
    ctx.policy = setup.policy.get();
    ctx.bounds = setup.bounds;
    ctx.weights = weights;
    ctx.history = &history;
    if (name == "mcto") return generate_mcto(tau, ctx, plan.mcto, rng, trace);
    if (name == "dac") return generate_dac(tau, ctx, plan.dac, rng, trace);
    if (name == "random") return generate_random(tau, ctx, plan.random, rng, trace);
    throw std::invalid_argument("unknown generator: " + name);
  }
};

struct GeneratedSet {
  std::vector<Cte> ctes;
  std::vector<double> rhos;
  std::vector<double> lengths;  // combined original + counterfactual steps
  std::vector<double> starts;
  std::vector<double> seconds;
};

GeneratedSet generate_set(const GeneratorRunner& runner, const std::string& name, int count,
                          const WeightVector* fixed_weights, Rng& rng) {
  GeneratedSet out;
  CteHistory history;
  for (int k = 0; k < count; ++k) {
    const Trajectory tau = rollout(*runner.setup.policy, runner.plan.env, rng);
    const WeightVector w = fixed_weights ? *fixed_weights : sample_weights(rng);
    const auto before = std::chrono::steady_clock::now();
    GenerationResult res = runner.run(name, tau, w, history, rng);
    const auto after = std::chrono::steady_clock::now();
    history.append(res.cte);
    out.rhos.push_back(res.rho);
    out.lengths.push_back(measure_sparsity(res.cte));
    out.starts.push_back(res.cte.t_cf.start_index);
    out.seconds.push_back(std::chrono::duration<double>(after - before).count());
    out.ctes.push_back(std::move(res.cte));
  }
  return out;
}

std::string welch_cell(std::span<const double> a, std::span<const double> b) {
  try {
    return fmt_num(welch_p_value(a, b));
  } catch (const std::invalid_argument&) {
    return "degenerate";
  }
}

struct InformativenessStats {
  std::vector<double> singles;
  std::vector<double> contrastives;
};

// Trains n_seeds proxy models on the (already standardized) train split and
// evaluates each on the matching standardized test set.
InformativenessStats train_and_evaluate(const ExperimentPlan& plan, const Dataset& train,
                                        const Dataset& test, uint64_t seed_stream) {
  InformativenessStats stats;
  for (int s = 0; s < plan.scale.n_seeds; ++s) {
    ProxyModel model;
    if (plan.proxy_kind == ProxyKind::Mlp) {
      ProxyTrainConfig cfg = plan.proxy_train;
      cfg.seed = mix_seed(plan.master_seed, seed_stream + static_cast<uint64_t>(s));
      model = train_proxy(train, cfg);
    } else {
      LinearTrainConfig cfg = plan.linear_train;
      cfg.seed = mix_seed(plan.master_seed, seed_stream + static_cast<uint64_t>(s));
      model = train_linear(train, cfg);
    }
    const InformativenessReport rep = evaluate_informativeness(model, test);
    stats.singles.push_back(rep.pearson_single);
    stats.contrastives.push_back(rep.pearson_contrastive);
  }
  return stats;
}

void append_distribution_row(ReportTable& table, const std::string& generator,
                             const std::string& task, const std::vector<double>& vals) {
  table.rows.push_back({generator, task, fmt_num(mean_of(vals)),
                        fmt_num(quantile(vals, 0.5)), fmt_num(quantile(vals, 0.25)),
                        fmt_num(quantile(vals, 0.75)),
                        std::to_string(vals.size())});
}

const std::vector<std::string> kGeneratorNames = {"mcto", "dac", "random"};

}  // namespace

ExperimentSetup prepare_setup(const ExperimentPlan& plan,
                              const NormalizationBounds* fixed_bounds) {
  plan.env.validate();
  ExperimentSetup setup;
  setup.policy = std::make_shared<HeuristicPolicy>(plan.providers.policy_temperature);

  const std::string& kind = plan.providers.reward_kind;
  if (kind == "ground_truth") {
    setup.reward = std::make_shared<GroundTruthReward>();
  } else if (kind == "distilled") {
    Rng sample_rng(mix_seed(plan.master_seed, kStreamDistillSamples));
    const auto samples = collect_reward_samples(plan, *setup.policy, sample_rng);
    setup.reward = std::make_shared<MlpRewardModel>(
        distill_reward(samples, plan.providers.noise_sigma, plan.providers.distill_hidden,
                       mix_seed(plan.master_seed, kStreamDistillTrain)));
  } else if (kind == "file") {
    setup.reward = std::shared_ptr<MlpRewardModel>(
        io::load_reward_model(plan.providers.reward_file));
  } else {
    throw std::invalid_argument("unknown reward kind: " + kind);
  }

  if (fixed_bounds != nullptr) {
    setup.bounds = *fixed_bounds;
    return setup;
  }

  // calibration phase: tree search and deviate-and-continue widen the bounds
  GeneratorRunner pre_runner{plan, setup};
  std::vector<CteSampler> samplers;
  for (const std::string name : {"mcto", "dac"}) {
    samplers.push_back([&pre_runner, name](const WeightVector& w,
                                           const NormalizationBounds& bounds,
                                           CteHistory& history, Rng& rng) {
      ExperimentSetup tmp = pre_runner.setup;
      tmp.bounds = bounds;
      GeneratorRunner runner{pre_runner.plan, tmp};
      const Trajectory tau = rollout(*tmp.policy, pre_runner.plan.env, rng);
      GenerationResult res = runner.run(name, tau, w, history, rng);
      history.append(res.cte);
      return res.criteria;
    });
  }
  Rng calib_rng(mix_seed(plan.master_seed, kStreamCalibration));
  setup.bounds = calibrate_bounds(samplers, calib_rng, plan.calibration_rounds);
  return setup;
}

AnalysisReport run_experiment1(const ExperimentPlan& plan) {
  if (plan.scale.n_train + plan.scale.n_test > plan.scale.n_generate) {
    throw std::invalid_argument("train + test exceeds generated count");
  }
  const ExperimentSetup setup = prepare_setup(plan);
  GeneratorRunner runner{plan, setup};

  std::vector<Dataset> train_sets, test_sets;
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    Rng rng(mix_seed(plan.master_seed, kStreamGeneration + gi));
    GeneratedSet set =
        generate_set(runner, kGeneratorNames[gi], plan.scale.n_generate, &plan.weights, rng);
    const std::vector<Cte> train_ctes(set.ctes.begin(), set.ctes.begin() + plan.scale.n_train);
    const std::vector<Cte> test_ctes(set.ctes.begin() + plan.scale.n_train,
                                     set.ctes.begin() + plan.scale.n_train + plan.scale.n_test);
    train_sets.push_back(build_dataset(train_ctes, *setup.reward));
    test_sets.push_back(build_dataset(test_ctes, *setup.reward));
  }

  std::vector<const Dataset*> test_ptrs;
  for (const Dataset& d : test_sets) test_ptrs.push_back(&d);
  const Dataset combined_test = Dataset::concat(test_ptrs);

  ReportTable info{"informativeness",
                   {"generator", "task", "mean", "median", "q25", "q75", "n_seeds"},
                   {}};
  ReportTable welch{"welch", {"task", "generator_a", "generator_b", "p_value"}, {}};

  std::vector<InformativenessStats> per_gen;
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    Dataset train = train_sets[gi];
    Dataset test = combined_test;
    standardize(train, {&test});
    per_gen.push_back(
        train_and_evaluate(plan, train, test, kStreamTraining + gi * 1000));
  }
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    append_distribution_row(info, kGeneratorNames[gi], "single", per_gen[gi].singles);
    append_distribution_row(info, kGeneratorNames[gi], "contrastive", per_gen[gi].contrastives);
  }
  for (size_t a = 0; a < kGeneratorNames.size(); ++a) {
    for (size_t b = a + 1; b < kGeneratorNames.size(); ++b) {
      welch.rows.push_back({"single", kGeneratorNames[a], kGeneratorNames[b],
                            welch_cell(per_gen[a].singles, per_gen[b].singles)});
      welch.rows.push_back({"contrastive", kGeneratorNames[a], kGeneratorNames[b],
                            welch_cell(per_gen[a].contrastives, per_gen[b].contrastives)});
    }
  }

  AnalysisReport report;
  report.name = "experiment1";
  report.tables = {info, welch};
  std::ostringstream sum;
  sum << "Informativeness on the combined test set (" << combined_test.rows()
      << " CTEs), mean Pearson over " << plan.scale.n_seeds << " seeds:\n";
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    sum << "  " << kGeneratorNames[gi] << ": single " << fmt_num(mean_of(per_gen[gi].singles))
        << ", contrastive " << fmt_num(mean_of(per_gen[gi].contrastives)) << "\n";
  }
  report.summary = sum.str();
  return report;
}

AnalysisReport run_experiment2(const ExperimentPlan& plan) {
  const ExperimentSetup setup = prepare_setup(plan);
  GeneratorRunner runner{plan, setup};

  ReportTable quality{"quality",
                      {"generator", "mean_rho", "std_rho", "mean_length", "mean_start", "n"},
                      {}};
  ReportTable welch{"welch_rho", {"generator_a", "generator_b", "p_value"}, {}};
  ReportTable timing{"timing", {"generator", "seconds_per_cte"}, {}};
  timing.nondeterministic = true;

  std::vector<GeneratedSet> sets;
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    Rng rng(mix_seed(plan.master_seed, kStreamGeneration + gi));
    sets.push_back(
        generate_set(runner, kGeneratorNames[gi], plan.scale.n_generate, nullptr, rng));
    const GeneratedSet& s = sets.back();
    quality.rows.push_back({kGeneratorNames[gi], fmt_num(mean_of(s.rhos)),
                            fmt_num(std::sqrt(sample_variance(s.rhos))),
                            fmt_num(mean_of(s.lengths)), fmt_num(mean_of(s.starts)),
                            std::to_string(s.rhos.size())});
    timing.rows.push_back({kGeneratorNames[gi], fmt_num(mean_of(s.seconds))});
  }
  for (size_t a = 0; a < kGeneratorNames.size(); ++a) {
    for (size_t b = a + 1; b < kGeneratorNames.size(); ++b) {
      welch.rows.push_back(
          {kGeneratorNames[a], kGeneratorNames[b], welch_cell(sets[a].rhos, sets[b].rhos)});
    }
  }

  AnalysisReport report;
  report.name = "experiment2";
  report.tables = {quality, welch, timing};
  std::ostringstream sum;
  sum << "Quality value over " << plan.scale.n_generate
      << " CTEs with per-CTE random weights (timings in the timing table):\n";
  for (size_t gi = 0; gi < kGeneratorNames.size(); ++gi) {
    sum << "  " << kGeneratorNames[gi] << ": mean rho " << fmt_num(mean_of(sets[gi].rhos))
        << ", mean length " << fmt_num(mean_of(sets[gi].lengths)) << "\n";
  }
  report.summary = sum.str();
  return report;
}

AnalysisReport run_experiment3(const ExperimentPlan& plan) {
  if (plan.scale.n_train + plan.scale.n_test > plan.scale.n_generate) {
    throw std::invalid_argument("train + test exceeds generated count");
  }
  const ExperimentSetup setup = prepare_setup(plan);
  GeneratorRunner runner{plan, setup};
  const int n_sets = plan.scale.n_weight_sets;

  Rng weights_rng(mix_seed(plan.master_seed, kStreamWeights));
  std::vector<WeightVector> weight_sets;
  for (int j = 0; j < n_sets; ++j) weight_sets.push_back(sample_weights(weights_rng));

  std::vector<Dataset> train_sets, test_sets;
  for (int j = 0; j < n_sets; ++j) {
    Rng rng(mix_seed(plan.master_seed, kStreamGeneration + 10 + static_cast<uint64_t>(j)));
    GeneratedSet set = generate_set(runner, plan.exp3_generator, plan.scale.n_generate,
                                    &weight_sets[static_cast<size_t>(j)], rng);
    const std::vector<Cte> train_ctes(set.ctes.begin(), set.ctes.begin() + plan.scale.n_train);
    const std::vector<Cte> test_ctes(set.ctes.begin() + plan.scale.n_train,
                                     set.ctes.begin() + plan.scale.n_train + plan.scale.n_test);
    train_sets.push_back(build_dataset(train_ctes, *setup.reward));
    test_sets.push_back(build_dataset(test_ctes, *setup.reward));
  }

  std::vector<const Dataset*> test_ptrs;
  for (const Dataset& d : test_sets) test_ptrs.push_back(&d);
  const Dataset pooled_test = Dataset::concat(test_ptrs);

  std::vector<double> info_single, info_contrastive;
  ReportTable sets_table{"weight_sets", {"set_id"}, {}};
  for (int c = 0; c < kNumCriteria; ++c) sets_table.columns.push_back(kCriterionNames[c]);
  sets_table.columns.push_back("info_single");
  sets_table.columns.push_back("info_contrastive");

  for (int j = 0; j < n_sets; ++j) {
    Dataset train = train_sets[static_cast<size_t>(j)];
    Dataset test = pooled_test;
    standardize(train, {&test});
    const InformativenessStats stats = train_and_evaluate(
        plan, train, test, kStreamTraining + 5000 + static_cast<uint64_t>(j) * 100);
    info_single.push_back(mean_of(stats.singles));
    info_contrastive.push_back(mean_of(stats.contrastives));
    std::vector<std::string> row{std::to_string(j)};
    for (int c = 0; c < kNumCriteria; ++c) {
      row.push_back(fmt_num(weight_sets[static_cast<size_t>(j)][c]));
    }
    row.push_back(fmt_num(info_single.back()));
    row.push_back(fmt_num(info_contrastive.back()));
    sets_table.rows.push_back(row);
  }

  ReportTable spearman_table{
      "spearman_weight_informativeness",
      {"criterion", "spearman_single", "spearman_contrastive"},
      {}};
  for (int c = 0; c < kNumCriteria; ++c) {
    std::vector<double> w_c;
    for (int j = 0; j < n_sets; ++j) w_c.push_back(weight_sets[static_cast<size_t>(j)][c]);
    spearman_table.rows.push_back({kCriterionNames[c],
                                   fmt_num(spearman(w_c, info_single)),
                                   fmt_num(spearman(w_c, info_contrastive))});
  }

  ReportTable best_worst{"best_worst", {"task", "which", "set_id", "informativeness"}, {}};
  const auto record_extreme = [&](const std::string& task, const std::vector<double>& info) {
    size_t best = 0, worst = 0;
    for (size_t j = 1; j < info.size(); ++j) {
      if (info[j] > info[best]) best = j;
      if (info[j] < info[worst]) worst = j;
    }
    best_worst.rows.push_back({task, "best", std::to_string(best), fmt_num(info[best])});
    best_worst.rows.push_back({task, "worst", std::to_string(worst), fmt_num(info[worst])});
  };
  record_extreme("single", info_single);
  record_extreme("contrastive", info_contrastive);

  AnalysisReport report;
  report.name = "experiment3";
  report.tables = {spearman_table, sets_table, best_worst};
  std::ostringstream sum;
  sum << "Spearman correlation between criterion weights and informativeness over "
      << n_sets << " weight sets (" << plan.exp3_generator << "):\n";
  for (const auto& row : spearman_table.rows) {
    sum << "  " << row[0] << ": single " << row[1] << ", contrastive " << row[2] << "\n";
  }
  report.summary = sum.str();
  return report;
}

namespace {

// Candidate-level normalized criterion scores of one generation run.
struct CandidateMatrix {
  std::vector<std::array<double, kNumCriteria>> scores;
  std::vector<double> rhos;
  int chosen = -1;
};

CandidateMatrix candidate_matrix(const GenerationTrace& trace,
                                 const NormalizationBounds& bounds) {
  CandidateMatrix m;
  for (size_t i = 0; i < trace.candidates.size(); ++i) {
    const CandidateInfo& c = trace.candidates[i];
    m.scores.push_back(normalized_contributions(c.criteria, bounds));
    m.rhos.push_back(c.rho);
    if (c.chosen) m.chosen = static_cast<int>(i);
  }
  return m;
}

}  // namespace

AnalysisReport analyze_criterion_tradeoffs(const ExperimentPlan& plan) {
  const ExperimentSetup setup = prepare_setup(plan);
  GeneratorRunner runner{plan, setup};
  Rng rng(mix_seed(plan.master_seed, kStreamGeneration + 20));

  std::array<std::array<double, kNumCriteria>, kNumCriteria> sum{};
  std::array<std::array<int, kNumCriteria>, kNumCriteria> count{};
  CteHistory history;

  for (int run = 0; run < plan.scale.n_generate; ++run) {
    const Trajectory tau = rollout(*setup.policy, plan.env, rng);
    const WeightVector w = sample_weights(rng);
    GenerationTrace trace;
    GenerationResult res = runner.run("dac", tau, w, history, rng, &trace);
    history.append(res.cte);
    const CandidateMatrix m = candidate_matrix(trace, setup.bounds);
    if (m.scores.size() < 2) continue;

    for (int a = 0; a < kNumCriteria; ++a) {
      for (int b = a + 1; b < kNumCriteria; ++b) {
        std::vector<double> va, vb;
        for (const auto& s : m.scores) {
          va.push_back(s[static_cast<size_t>(a)]);
          vb.push_back(s[static_cast<size_t>(b)]);
        }
        try {
          const double r = pearson(va, vb);
          sum[static_cast<size_t>(a)][static_cast<size_t>(b)] += r;
          count[static_cast<size_t>(a)][static_cast<size_t>(b)] += 1;
        } catch (const std::invalid_argument&) {
          // constant criterion within this run: skip the pair
        }
      }
    }
  }

  ReportTable matrix{"criterion_correlations", {"criterion"}, {}};
  for (int c = 0; c < kNumCriteria; ++c) matrix.columns.push_back(kCriterionNames[c]);
  for (int a = 0; a < kNumCriteria; ++a) {
    std::vector<std::string> row{kCriterionNames[a]};
    for (int b = 0; b < kNumCriteria; ++b) {
      double v;
      if (a == b) {
        v = 1.0;
      } else {
        const int lo = std::min(a, b), hi = std::max(a, b);
        const int n = count[static_cast<size_t>(lo)][static_cast<size_t>(hi)];
        v = n > 0 ? sum[static_cast<size_t>(lo)][static_cast<size_t>(hi)] / n : 0.0;
      }
      row.push_back(fmt_num(v));
    }
    matrix.rows.push_back(row);
  }

  AnalysisReport report;
  report.name = "criterion_tradeoffs";
  report.tables = {matrix};
  report.summary =
      "Mean pairwise Pearson correlation between normalized criterion scores over "
      "candidate CTEs of " +
      std::to_string(plan.scale.n_generate) + " deviate-and-continue runs.\n";
  return report;
}

AnalysisReport analyze_criterion_influence(const ExperimentPlan& plan) {
  const ExperimentSetup setup = prepare_setup(plan);
  GeneratorRunner runner{plan, setup};
  Rng rng(mix_seed(plan.master_seed, kStreamGeneration + 30));

  std::array<std::vector<double>, kNumCriteria> percentiles, relatives, rho_corrs;
  CteHistory history;

  for (int run = 0; run < plan.scale.n_generate; ++run) {
    const Trajectory tau = rollout(*setup.policy, plan.env, rng);
    const WeightVector w = sample_weights(rng);
    GenerationTrace trace;
    GenerationResult res = runner.run("dac", tau, w, history, rng, &trace);
    history.append(res.cte);
    const CandidateMatrix m = candidate_matrix(trace, setup.bounds);
    if (m.chosen < 0) continue;
    const auto& chosen = m.scores[static_cast<size_t>(m.chosen)];
    const double n_cand = static_cast<double>(m.scores.size());

    for (int c = 0; c < kNumCriteria; ++c) {
      std::vector<double> vals;
      double max_v = 0.0;
      int not_above = 0;
      for (const auto& s : m.scores) {
        const double v = s[static_cast<size_t>(c)];
        vals.push_back(v);
        max_v = std::max(max_v, v);
        if (v <= chosen[static_cast<size_t>(c)]) ++not_above;
      }
      percentiles[static_cast<size_t>(c)].push_back(100.0 * not_above / n_cand);
      if (max_v > 0.0) {
        relatives[static_cast<size_t>(c)].push_back(chosen[static_cast<size_t>(c)] / max_v);
      }
      if (vals.size() >= 2) {
        try {
          rho_corrs[static_cast<size_t>(c)].push_back(pearson(vals, m.rhos));
        } catch (const std::invalid_argument&) {
        }
      }
    }
  }

  ReportTable influence{"criterion_influence",
                        {"criterion", "mean_percentile", "median_percentile",
                         "mean_relative", "median_relative", "rho_correlation"},
                        {}};
  for (int c = 0; c < kNumCriteria; ++c) {
    const auto& p = percentiles[static_cast<size_t>(c)];
    const auto& r = relatives[static_cast<size_t>(c)];
    const auto& q = rho_corrs[static_cast<size_t>(c)];
    influence.rows.push_back(
        {kCriterionNames[c], p.empty() ? "n/a" : fmt_num(mean_of(p)),
         p.empty() ? "n/a" : fmt_num(quantile(p, 0.5)),
         r.empty() ? "n/a" : fmt_num(mean_of(r)),
         r.empty() ? "n/a" : fmt_num(quantile(r, 0.5)),
         q.empty() ? "n/a" : fmt_num(mean_of(q))});
  }

  AnalysisReport report;
  report.name = "criterion_influence";
  report.tables = {influence};
  report.summary = "Chosen-vs-candidate criterion influence over " +
                   std::to_string(plan.scale.n_generate) +
                   " deviate-and-continue runs.\n";
  return report;
}

namespace {

struct KnobTarget {
  std::string generator;
  std::function<void(ExperimentPlan&, const std::string&)> apply;
};

int parse_int(const std::string& v) { return std::stoi(v); }
double parse_double(const std::string& v) { return std::stod(v); }

KnobTarget knob_target(const std::string& knob) {
  if (knob == "n_starts") {
    return {"mcto", [](ExperimentPlan& p, const std::string& v) {
              p.mcto.n_starts = (v == "all") ? -1 : parse_int(v);
            }};
  }
  if (knob == "n_iterations") {
    return {"mcto",
            [](ExperimentPlan& p, const std::string& v) { p.mcto.n_iterations = parse_int(v); }};
  }
  if (knob == "p_end_mcto") {
    return {"mcto",
            [](ExperimentPlan& p, const std::string& v) { p.mcto.p_end = parse_double(v); }};
  }
  if (knob == "threshold_a") {
    return {"mcto",
            [](ExperimentPlan& p, const std::string& v) { p.mcto.threshold_a = parse_double(v); }};
  }
  if (knob == "gamma") {
    return {"mcto",
            [](ExperimentPlan& p, const std::string& v) { p.mcto.gamma = parse_double(v); }};
  }
  if (knob == "expansion_mode") {
    return {"mcto", [](ExperimentPlan& p, const std::string& v) {
              if (v == "random") p.mcto.expansion_mode = ExpansionMode::Random;
              else if (v == "heuristic") p.mcto.expansion_mode = ExpansionMode::Heuristic;
              else throw std::invalid_argument("unknown expansion mode: " + v);
            }};
  }
  if (knob == "simulation_mode") {
    return {"mcto", [](ExperimentPlan& p, const std::string& v) {
              if (v == "random") p.mcto.simulation_mode = SimulationMode::Random;
              else if (v == "policy") p.mcto.simulation_mode = SimulationMode::Policy;
              else throw std::invalid_argument("unknown simulation mode: " + v);
            }};
  }
  if (knob == "p_end_dac") {
    return {"dac",
            [](ExperimentPlan& p, const std::string& v) { p.dac.p_end = parse_double(v); }};
  }
  if (knob == "n_deviations") {
    return {"dac",
            [](ExperimentPlan& p, const std::string& v) { p.dac.n_deviations = parse_int(v); }};
  }
  if (knob == "continuation_mode") {
    return {"dac", [](ExperimentPlan& p, const std::string& v) {
              if (v == "policy") p.dac.continuation_mode = ContinuationMode::Policy;
              else if (v == "random") p.dac.continuation_mode = ContinuationMode::Random;
              else throw std::invalid_argument("unknown continuation mode: " + v);
            }};
  }
  if (knob == "p_end_random") {
    return {"random",
            [](ExperimentPlan& p, const std::string& v) { p.random.p_end = parse_double(v); }};
  }
  throw std::invalid_argument("unknown ablation knob: " + knob);
}

}  // namespace

AnalysisReport run_ablation(const ExperimentPlan& plan, const std::string& knob,
                            const std::vector<std::string>& values) {
  if (values.empty()) throw std::invalid_argument("ablation needs at least one value");

  AnalysisReport report;
  report.name = "ablation_" + knob;

  if (knob == "proxy_kind") {
    // informativeness per proxy model kind, one shared CTE pipeline
    ReportTable info{"ablation_informativeness",
                     {"value", "task", "mean", "n_seeds"},
                     {}};
    const ExperimentSetup setup = prepare_setup(plan);
    GeneratorRunner runner{plan, setup};
    Rng rng(mix_seed(plan.master_seed, kStreamGeneration + 40));
    GeneratedSet set = generate_set(runner, plan.exp3_generator,
                                    plan.scale.n_train + plan.scale.n_test, &plan.weights, rng);
    const std::vector<Cte> train_ctes(set.ctes.begin(), set.ctes.begin() + plan.scale.n_train);
    const std::vector<Cte> test_ctes(set.ctes.begin() + plan.scale.n_train, set.ctes.end());
    const Dataset train_raw = build_dataset(train_ctes, *setup.reward);
    const Dataset test_raw = build_dataset(test_ctes, *setup.reward);
    for (const std::string& v : values) {
      ExperimentPlan p = plan;
      if (v == "mlp") p.proxy_kind = ProxyKind::Mlp;
      else if (v == "linear") p.proxy_kind = ProxyKind::Linear;
      else throw std::invalid_argument("unknown proxy kind: " + v);
      Dataset train = train_raw;
      Dataset test = test_raw;
      standardize(train, {&test});
      const InformativenessStats stats =
          train_and_evaluate(p, train, test, kStreamTraining + 9000);
      info.rows.push_back({v, "single", fmt_num(mean_of(stats.singles)),
                           std::to_string(stats.singles.size())});
      info.rows.push_back({v, "contrastive", fmt_num(mean_of(stats.contrastives)),
                           std::to_string(stats.contrastives.size())});
    }
    report.tables = {info};
    report.summary = "Proxy-model ablation over " + std::to_string(values.size()) + " kinds.\n";
    return report;
  }

  const KnobTarget target = knob_target(knob);
  ReportTable quality{"ablation", {"knob", "value", "mean_rho", "std_rho", "n"}, {}};
  ReportTable welch{"ablation_welch", {"value_a", "value_b", "p_value"}, {}};
  ReportTable timing{"ablation_timing", {"value", "seconds_per_cte"}, {}};
  timing.nondeterministic = true;

  std::vector<std::vector<double>> rho_lists;
  for (size_t vi = 0; vi < values.size(); ++vi) {
    ExperimentPlan p = plan;
    target.apply(p, values[vi]);
    const ExperimentSetup setup = prepare_setup(p);
    GeneratorRunner runner{p, setup};
    Rng rng(mix_seed(plan.master_seed, kStreamGeneration + 50 + vi));
    GeneratedSet set = generate_set(runner, target.generator, p.scale.n_ablation, nullptr, rng);
    rho_lists.push_back(set.rhos);
    quality.rows.push_back({knob, values[vi], fmt_num(mean_of(set.rhos)),
                            fmt_num(std::sqrt(sample_variance(set.rhos))),
                            std::to_string(set.rhos.size())});
    timing.rows.push_back({values[vi], fmt_num(mean_of(set.seconds))});
  }
  for (size_t a = 0; a < values.size(); ++a) {
    for (size_t b = a + 1; b < values.size(); ++b) {
      welch.rows.push_back({values[a], values[b], welch_cell(rho_lists[a], rho_lists[b])});
    }
  }

  report.tables = {quality, welch, timing};
  report.summary = "Ablation of " + knob + " on the " + target.generator + " generator over " +
                   std::to_string(plan.scale.n_ablation) + " CTEs per value.\n";
  return report;
}

}  // namespace cte
