#include "cte/commands.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "cte/io.hpp"
#include "cte/stats.hpp"
#include "json.hpp"

namespace cte::cli {

using nlohmann::json;

namespace {

json load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("config file not found: " + path);
  }
  return json::parse(io::read_file(path));
}

void require_exists(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error(what + " not found: " + path);
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

WeightVector parse_weights(const json& arr) {
  WeightVector w;
  for (int i = 0; i < kNumCriteria; ++i) w[i] = arr.at(static_cast<size_t>(i)).get<double>();
  return w;
}

void parse_into_plan(const json& cfg, ExperimentPlan& plan) {
  if (cfg.contains("env")) {
    const json& e = cfg.at("env");
    plan.env.extent = get_or(e, "extent", plan.env.extent);
    plan.env.n_humans = get_or(e, "n_humans", plan.env.n_humans);
    plan.env.n_obstacles = get_or(e, "n_obstacles", plan.env.n_obstacles);
    plan.env.horizon = get_or(e, "horizon", plan.env.horizon);
  }
  if (cfg.contains("reward")) {
    const json& r = cfg.at("reward");
    plan.providers.reward_kind = get_or<std::string>(r, "kind", plan.providers.reward_kind);
    plan.providers.noise_sigma = get_or(r, "noise_sigma", plan.providers.noise_sigma);
    plan.providers.distill_episodes =
        get_or(r, "distill_episodes", plan.providers.distill_episodes);
    if (r.contains("hidden")) {
      plan.providers.distill_hidden.clear();
      for (const auto& h : r.at("hidden")) plan.providers.distill_hidden.push_back(h.get<int>());
    }
    plan.providers.reward_file = get_or<std::string>(r, "file", plan.providers.reward_file);
  }
  if (cfg.contains("policy")) {
    plan.providers.policy_temperature =
        get_or(cfg.at("policy"), "temperature", plan.providers.policy_temperature);
  }
  if (cfg.contains("mcto")) {
    const json& m = cfg.at("mcto");
    plan.mcto.p_end = get_or(m, "p_end", plan.mcto.p_end);
    plan.mcto.threshold_a = get_or(m, "threshold_a", plan.mcto.threshold_a);
    plan.mcto.n_iterations = get_or(m, "n_iterations", plan.mcto.n_iterations);
    plan.mcto.c_uct = get_or(m, "c_uct", plan.mcto.c_uct);
    plan.mcto.gamma = get_or(m, "gamma", plan.mcto.gamma);
    plan.mcto.n_starts = get_or(m, "n_starts", plan.mcto.n_starts);
    const std::string em = get_or<std::string>(m, "expansion_mode", "random");
    plan.mcto.expansion_mode =
        em == "heuristic" ? ExpansionMode::Heuristic : ExpansionMode::Random;
    const std::string sm = get_or<std::string>(m, "simulation_mode", "random");
    plan.mcto.simulation_mode =
        sm == "policy" ? SimulationMode::Policy : SimulationMode::Random;
  }
  if (cfg.contains("dac")) {
    const json& d = cfg.at("dac");
    plan.dac.n_deviations = get_or(d, "n_deviations", plan.dac.n_deviations);
    plan.dac.p_end = get_or(d, "p_end", plan.dac.p_end);
    const std::string cm = get_or<std::string>(d, "continuation_mode", "policy");
    plan.dac.continuation_mode =
        cm == "random" ? ContinuationMode::Random : ContinuationMode::Policy;
  }
  if (cfg.contains("random")) {
    plan.random.p_end = get_or(cfg.at("random"), "p_end", plan.random.p_end);
  }
  if (cfg.contains("weights")) plan.weights = parse_weights(cfg.at("weights"));
  if (cfg.contains("proxy")) {
    const json& p = cfg.at("proxy");
    const std::string kind = get_or<std::string>(p, "kind", "mlp");
    plan.proxy_kind = kind == "linear" ? ProxyKind::Linear : ProxyKind::Mlp;
    plan.proxy_train.lr = get_or(p, "lr", plan.proxy_train.lr);
    plan.proxy_train.weight_decay = get_or(p, "weight_decay", plan.proxy_train.weight_decay);
    plan.proxy_train.epochs = get_or(p, "epochs", plan.proxy_train.epochs);
    plan.proxy_train.lambda_mix = get_or(p, "lambda_mix", plan.proxy_train.lambda_mix);
    plan.proxy_train.batch_size = get_or(p, "batch_size", plan.proxy_train.batch_size);
    if (p.contains("hidden")) {
      plan.proxy_train.hidden.clear();
      for (const auto& h : p.at("hidden")) plan.proxy_train.hidden.push_back(h.get<int>());
    }
    plan.linear_train.lr = get_or(p, "linear_lr", plan.linear_train.lr);
    plan.linear_train.weight_decay =
        get_or(p, "linear_weight_decay", plan.linear_train.weight_decay);
    plan.linear_train.epochs = get_or(p, "linear_epochs", plan.linear_train.epochs);
  }
  if (cfg.contains("scale_override")) {
    const json& s = cfg.at("scale_override");
    plan.scale.n_generate = get_or(s, "n_generate", plan.scale.n_generate);
    plan.scale.n_train = get_or(s, "n_train", plan.scale.n_train);
    plan.scale.n_test = get_or(s, "n_test", plan.scale.n_test);
    plan.scale.n_weight_sets = get_or(s, "n_weight_sets", plan.scale.n_weight_sets);
    plan.scale.n_seeds = get_or(s, "n_seeds", plan.scale.n_seeds);
    plan.scale.n_ablation = get_or(s, "n_ablation", plan.scale.n_ablation);
  }
  if (cfg.contains("experiment")) {
    plan.exp3_generator =
        get_or<std::string>(cfg.at("experiment"), "generator", plan.exp3_generator);
  }
  plan.calibration_rounds = get_or(cfg, "calibration_rounds", plan.calibration_rounds);
}

std::string out_path(const RunOptions& opt, const std::string& file) {
  std::filesystem::create_directories(opt.out_dir);
  return (std::filesystem::path(opt.out_dir) / file).string();
}

void write_report(const RunOptions& opt, const AnalysisReport& report) {
  for (const ReportTable& t : report.tables) {
    const std::string suffix = t.nondeterministic ? "_timing.csv" : ".csv";
    io::atomic_write(out_path(opt, report.name + "_" + t.name + suffix), t.to_csv());
  }
  io::atomic_write(out_path(opt, report.name + "_summary.txt"), report.summary);
}

ExperimentSetup setup_with_bounds(const ExperimentPlan& plan, const json& cfg,
                                  const std::string& block) {
  std::string bounds_file;
  if (cfg.contains(block)) {
    bounds_file = get_or<std::string>(cfg.at(block), "bounds_file", "");
  }
  if (!bounds_file.empty()) {
    require_exists(bounds_file, "bounds file");
    const NormalizationBounds bounds = io::load_bounds(bounds_file);
    return prepare_setup(plan, &bounds);
  }
  return prepare_setup(plan);
}

}  // namespace

ExperimentPlan plan_from_config(const std::string& config_json, uint64_t master_seed,
                                const std::string& scale) {
  ExperimentPlan plan;
  plan.scale = preset_by_name(scale);
  plan.master_seed = master_seed;
  parse_into_plan(json::parse(config_json), plan);
  return plan;
}

int cmd_calibrate(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  ExperimentPlan plan;
  plan.scale = preset_by_name(opt.scale);
  plan.master_seed = opt.master_seed;
  parse_into_plan(cfg, plan);
  const ExperimentSetup setup = prepare_setup(plan);
  io::save_bounds(out_path(opt, "bounds.json"), setup.bounds);
  return 0;
}

int cmd_generate(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  ExperimentPlan plan;
  plan.scale = preset_by_name(opt.scale);
  plan.master_seed = opt.master_seed;
  parse_into_plan(cfg, plan);

  const json gen_cfg = cfg.contains("generate") ? cfg.at("generate") : json::object();
  const int n = get_or(gen_cfg, "n_trajectories", plan.scale.n_generate);
  const std::string generator = get_or<std::string>(gen_cfg, "generator", "mcto");
  const bool sampled_weights = get_or(gen_cfg, "sample_weights", false);
  const std::string out_file = get_or<std::string>(gen_cfg, "output", "dataset.jsonl");

  const ExperimentSetup setup = setup_with_bounds(plan, cfg, "generate");

  GenerationContext ctx;
  ctx.reward = setup.reward.get();
  ctx.policy = setup.policy.get();
  ctx.bounds = setup.bounds;
  ctx.history = nullptr;

  io::DatasetFile data;
  data.header.generator = generator;
  data.header.master_seed = plan.master_seed;
  data.header.bounds = setup.bounds;
  data.header.reward_id = setup.reward->name();
  data.header.policy_temperature = plan.providers.policy_temperature;
  data.header.weights_sampled = sampled_weights;
  data.header.weights = plan.weights;
  data.header.env_json = json{{"extent", plan.env.extent},
                              {"n_humans", plan.env.n_humans},
                              {"n_obstacles", plan.env.n_obstacles},
                              {"horizon", plan.env.horizon}}
                             .dump();
  json gcfg;
  if (generator == "mcto") {
    gcfg = {{"p_end", plan.mcto.p_end},
            {"threshold_a", plan.mcto.threshold_a},
            {"n_iterations", plan.mcto.n_iterations},
            {"c_uct", plan.mcto.c_uct},
            {"gamma", plan.mcto.gamma},
            {"n_starts", plan.mcto.n_starts}};
  } else if (generator == "dac") {
    gcfg = {{"n_deviations", plan.dac.n_deviations}, {"p_end", plan.dac.p_end}};
  } else {
    gcfg = {{"p_end", plan.random.p_end}};
  }
  data.header.generator_config_json = gcfg.dump();

  CteHistory history;
  Rng rng(mix_seed(plan.master_seed, 100));
  std::ostringstream timing;
  timing << "index,seconds\n";
  for (int k = 0; k < n; ++k) {
    const Trajectory tau = rollout(*setup.policy, plan.env, rng);
    const WeightVector w = sampled_weights ? sample_weights(rng) : plan.weights;
    ctx.weights = w;
    ctx.history = &history;
    const auto before = std::chrono::steady_clock::now();
    GenerationResult res;
    if (generator == "mcto") res = generate_mcto(tau, ctx, plan.mcto, rng);
    else if (generator == "dac") res = generate_dac(tau, ctx, plan.dac, rng);
    else if (generator == "random") res = generate_random(tau, ctx, plan.random, rng);
    else throw std::invalid_argument("unknown generator: " + generator);
    const auto after = std::chrono::steady_clock::now();
    history.append(res.cte);
    timing << k << "," << fmt_num(std::chrono::duration<double>(after - before).count())
           << "\n";
    io::CteRecord rec;
    rec.cte = std::move(res.cte);
    rec.criteria = res.criteria;
    rec.rho = res.rho;
    rec.weights = w;
    data.records.push_back(std::move(rec));
  }

  io::save_dataset(out_path(opt, out_file), data);
  io::atomic_write(out_path(opt, "timings.csv"), timing.str());
  return 0;
}

int cmd_evaluate(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  ExperimentPlan plan;
  plan.scale = preset_by_name(opt.scale);
  plan.master_seed = opt.master_seed;
  parse_into_plan(cfg, plan);

  if (!cfg.contains("evaluate")) throw std::runtime_error("config lacks an evaluate block");
  const json& ev = cfg.at("evaluate");
  const std::string train_path = ev.at("train_dataset").get<std::string>();
  require_exists(train_path, "train dataset");
  std::vector<std::string> test_paths;
  for (const auto& p : ev.at("test_datasets")) {
    test_paths.push_back(p.get<std::string>());
    require_exists(test_paths.back(), "test dataset");
  }
  const int n_seeds = get_or(ev, "seeds", plan.scale.n_seeds);
  const bool oracle_self_test = get_or(ev, "oracle_self_test", false);

  const io::DatasetFile train_file = io::load_dataset(train_path);
  Dataset train = io::dataset_from_records(train_file);
  std::vector<io::DatasetFile> test_files;
  std::vector<Dataset> tests;
  for (const std::string& p : test_paths) {
    test_files.push_back(io::load_dataset(p));
    tests.push_back(io::dataset_from_records(test_files.back()));
  }
  std::vector<const Dataset*> test_ptrs;
  for (const Dataset& d : tests) test_ptrs.push_back(&d);
  Dataset combined = Dataset::concat(test_ptrs);
  standardize(train, {&combined});

  std::ostringstream out;
  out << "generator,weight_set_id,seed,pearson_single,pearson_contrastive,n_test\n";
  const std::string weight_set_id = train_file.header.weights_sampled ? "sampled" : "fixed";

  for (int s = 0; s < n_seeds; ++s) {
    double p_single, p_contrastive;
    if (oracle_self_test) {
      // predictions replaced by the labels themselves: plumbing check
      std::vector<double> ys, yd;
      for (int i = 0; i < combined.rows(); ++i) {
        ys.push_back(combined.y_org(i));
        ys.push_back(combined.y_cf(i));
        yd.push_back(combined.y_org(i) - combined.y_cf(i));
      }
      p_single = pearson(ys, ys);
      p_contrastive = pearson(yd, yd);
    } else if (plan.proxy_kind == ProxyKind::Mlp) {
      ProxyTrainConfig tc = plan.proxy_train;
      tc.seed = mix_seed(plan.master_seed, 200 + static_cast<uint64_t>(s));
      const ProxyModel model = train_proxy(train, tc);
      const InformativenessReport rep = evaluate_informativeness(model, combined);
      p_single = rep.pearson_single;
      p_contrastive = rep.pearson_contrastive;
    } else {
      LinearTrainConfig tc = plan.linear_train;
      tc.seed = mix_seed(plan.master_seed, 200 + static_cast<uint64_t>(s));
      const ProxyModel model = train_linear(train, tc);
      const InformativenessReport rep = evaluate_informativeness(model, combined);
      p_single = rep.pearson_single;
      p_contrastive = rep.pearson_contrastive;
    }
    out << train_file.header.generator << "," << weight_set_id << "," << s << ","
        << fmt_num(p_single) << "," << fmt_num(p_contrastive) << "," << combined.rows()
        << "\n";
  }

  io::atomic_write(out_path(opt, "results.csv"), out.str());
  return 0;
}

int cmd_experiment(const RunOptions& opt) {
  const json cfg = load_config(opt.config_path);
  ExperimentPlan plan;
  plan.scale = preset_by_name(opt.scale);
  plan.master_seed = opt.master_seed;
  parse_into_plan(cfg, plan);

  if (!cfg.contains("experiment")) throw std::runtime_error("config lacks an experiment block");
  const json& ex = cfg.at("experiment");
  const std::string id = ex.at("id").get<std::string>();

  AnalysisReport report;
  if (id == "exp1") {
    report = run_experiment1(plan);
  } else if (id == "exp2") {
    report = run_experiment2(plan);
  } else if (id == "exp3") {
    report = run_experiment3(plan);
  } else if (id == "tradeoffs") {
    report = analyze_criterion_tradeoffs(plan);
  } else if (id == "influence") {
    report = analyze_criterion_influence(plan);
  } else if (id == "ablation") {
    const std::string knob = ex.at("knob").get<std::string>();
    std::vector<std::string> values;
    for (const auto& v : ex.at("values")) {
      values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    report = run_ablation(plan, knob, values);
  } else {
    throw std::invalid_argument("unknown experiment id: " + id);
  }

  write_report(opt, report);
  return 0;
}

std::string cmd_render(const std::string& dataset_path, int index) {
  require_exists(dataset_path, "dataset");
  const io::DatasetFile data = io::load_dataset(dataset_path);
  if (index < 0 || index >= static_cast<int>(data.records.size())) {
    throw std::out_of_range("record index out of range");
  }
  return io::render_cte(data.records[static_cast<size_t>(index)]);
}

}  // namespace cte::cli
