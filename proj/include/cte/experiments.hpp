#pragma once

#include <memory>
#include <string>

#include "cte/generators.hpp"
#include "cte/proxy.hpp"

namespace cte {

struct ScalePreset {
  int n_generate = 200;    // CTEs per condition
  int n_train = 160;
  int n_test = 40;
  int n_weight_sets = 8;   // weight sets in the criterion-importance run
  int n_seeds = 5;         // proxy-model initializations per condition
  int n_ablation = 50;     // CTEs per ablation knob value
};

ScalePreset desk_scale();
ScalePreset paper_scale();
ScalePreset preset_by_name(const std::string& name);

// Stand-in providers for the learned reward and policy.
struct ProviderConfig {
  std::string reward_kind = "distilled";  // ground_truth | distilled | file
  double noise_sigma = 0.5;
  std::vector<int> distill_hidden = {64};
  int distill_episodes = 120;  // sample-collection rollouts
  std::string reward_file;     // used when reward_kind == "file"
  double policy_temperature = 0.5;
};

struct ExperimentPlan {
  ScalePreset scale;
  GridConfig env;
  ProviderConfig providers;
  MctoConfig mcto;
  DacConfig dac;
  RandomConfig random;
  WeightVector weights;  // fixed weights for the informativeness experiment
  ProxyTrainConfig proxy_train;
  LinearTrainConfig linear_train;
  ProxyKind proxy_kind = ProxyKind::Mlp;
  std::string exp3_generator = "mcto";
  int calibration_rounds = 10;
  uint64_t master_seed = 0;

  ExperimentPlan();
};

// The most informative weight set found for the tree and deviate-and-
// continue generators; the default for the informativeness experiment.
WeightVector reference_weights();

struct ExperimentSetup {
  std::shared_ptr<RewardModel> reward;
  std::shared_ptr<PolicyModel> policy;
  NormalizationBounds bounds;
};

// Builds the reward/policy providers and calibrates normalization bounds
// (or adopts fixed_bounds when given). Deterministic for a fixed plan and
// master seed.
ExperimentSetup prepare_setup(const ExperimentPlan& plan,
                              const NormalizationBounds* fixed_bounds = nullptr);

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  bool nondeterministic = false;  // wall-clock content, kept out of the
                                  // byte-reproducible outputs

  std::string to_csv() const;
};

struct AnalysisReport {
  std::string name;
  std::vector<ReportTable> tables;
  std::string summary;

  const ReportTable& table(const std::string& name) const;
};

// Informativeness of the three generators for the proxy-human model,
// evaluated on the combined cross-generator test set.
AnalysisReport run_experiment1(const ExperimentPlan& plan);

// Quality value, efficiency, length and starting point per generator under
// per-CTE random weights.
AnalysisReport run_experiment2(const ExperimentPlan& plan);

// Spearman correlation between the weight given to each criterion and the
// informativeness of the resulting CTE sets; also the best/worst sets.
AnalysisReport run_experiment3(const ExperimentPlan& plan);

// Mean pairwise correlation between normalized criterion scores over the
// candidate CTEs of deviate-and-continue runs.
AnalysisReport analyze_criterion_tradeoffs(const ExperimentPlan& plan);

// Percentile ranking, relative value and quality-value correlation of each
// criterion over the chosen-vs-candidate CTEs.
AnalysisReport analyze_criterion_influence(const ExperimentPlan& plan);

// Sweeps one generator or proxy knob and reports quality (or
// informativeness for proxy_kind) per value.
AnalysisReport run_ablation(const ExperimentPlan& plan, const std::string& knob,
                            const std::vector<std::string>& values);

// Fixed-precision cell formatting shared by all reports.
std::string fmt_num(double v);

}  // namespace cte
