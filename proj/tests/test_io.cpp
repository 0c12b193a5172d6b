#include <filesystem>

#include "cte/commands.hpp"
#include "cte/io.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cte;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

io::DatasetFile sample_dataset(int n_records, uint64_t seed) {
  GroundTruthReward gt;
  Rng rng(seed);
  io::DatasetFile data;
  data.header.generator = "random";
  data.header.master_seed = seed;
  data.header.bounds = NormalizationBounds::unit();
  data.header.reward_id = "ground_truth";
  data.header.weights = sample_weights(rng);
  data.header.generator_config_json = R"({"p_end":0.15})";
  data.header.env_json = R"({"extent":6})";
  for (int i = 0; i < n_records; ++i) {
    PartialTrajectory a = testutil::random_partial(rng, 6);
    PartialTrajectory b = a;
    b.steps.resize(std::max<size_t>(1, a.steps.size() / 2));
    io::CteRecord rec;
    rec.cte = make_cte(a, b, gt);
    rec.rho = uniform_double(rng);
    rec.weights = sample_weights(rng);
    for (int c = 0; c < kNumCriteria; ++c) rec.criteria[c] = uniform_double(rng);
    data.records.push_back(std::move(rec));
  }
  data.header.n_records = n_records;
  return data;
}

}  // namespace

TEST_CASE("dataset files round-trip field-exact") {
  const std::string path = temp_path("cte_test_roundtrip.jsonl");
  const io::DatasetFile data = sample_dataset(5, 3);
  io::save_dataset(path, data);
  const io::DatasetFile loaded = io::load_dataset(path);

  CHECK(loaded.header.generator == data.header.generator);
  CHECK(loaded.header.master_seed == data.header.master_seed);
  REQUIRE(loaded.records.size() == data.records.size());
  for (size_t i = 0; i < data.records.size(); ++i) {
    const io::CteRecord& a = data.records[i];
    const io::CteRecord& b = loaded.records[i];
    CHECK(a.cte.t_org == b.cte.t_org);
    CHECK(a.cte.t_cf == b.cte.t_cf);
    CHECK(a.cte.r_org == b.cte.r_org);
    CHECK(a.cte.r_cf == b.cte.r_cf);
    CHECK(a.rho == b.rho);
    for (int c = 0; c < kNumCriteria; ++c) {
      CHECK(a.criteria[c] == b.criteria[c]);
      CHECK(a.weights[c] == b.weights[c]);
    }
  }

  // saving the loaded copy reproduces the bytes
  const std::string path2 = temp_path("cte_test_roundtrip2.jsonl");
  io::save_dataset(path2, loaded);
  CHECK(io::read_file(path) == io::read_file(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("dataset reader rejects unknown versions and schema drift") {
  const std::string path = temp_path("cte_test_version.jsonl");
  io::save_dataset(path, sample_dataset(2, 4));

  std::string content = io::read_file(path);
  const std::string needle = "\"format_version\":1";
  content.replace(content.find(needle), needle.size(), "\"format_version\":99");
  io::atomic_write(path, content);
  CHECK_THROWS_AS(io::load_dataset(path), std::runtime_error);

  io::save_dataset(path, sample_dataset(2, 4));
  content = io::read_file(path);
  const std::string col = "\"humans_saved\"";
  content.replace(content.find(col), col.size(), "\"humans_renamed\"");
  io::atomic_write(path, content);
  CHECK_THROWS_AS(io::load_dataset(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("dataset_from_records uses the stored averages as labels") {
  const io::DatasetFile data = sample_dataset(4, 5);
  const Dataset d = io::dataset_from_records(data);
  CHECK(d.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(d.y_org(i) == data.records[static_cast<size_t>(i)].cte.r_org);
    CHECK(d.y_cf(i) == data.records[static_cast<size_t>(i)].cte.r_cf);
  }
  CHECK_FALSE(d.standardized);
}

TEST_CASE("reward model files round-trip to identical predictions") {
  Rng rng(6);
  nn::Mlp net = nn::Mlp::make({MlpRewardModel::encoding_dim(6), 8, 1}, rng);
  const MlpRewardModel model(std::move(net), "distilled");
  const std::string path = temp_path("cte_test_reward.json");
  io::save_reward_model(path, model);
  const auto loaded = io::load_reward_model(path);
  CHECK(loaded->name() == "distilled");

  GridConfig cfg;
  Rng srng(7);
  for (int i = 0; i < 10; ++i) {
    const GridState s = init_random(cfg, srng);
    const auto a = static_cast<EnvAction>(uniform_int(srng, 0, kNumActions - 1));
    CHECK(model.evaluate(s, a) == loaded->evaluate(s, a));
  }
  std::filesystem::remove(path);
}

TEST_CASE("proxy model files round-trip for both kinds") {
  Rng rng(8);
  ProxyModel mlp;
  mlp.kind = ProxyKind::Mlp;
  mlp.body = nn::Mlp::make({2 * kNumFeatures, 8}, rng, nn::OutputActivation::Relu);
  mlp.head_single = nn::Affine::make(8, 2, rng);
  mlp.head_contrastive = nn::Affine::make(8, 1, rng);

  const std::string path = temp_path("cte_test_proxy.json");
  io::save_proxy_model(path, mlp);
  const ProxyModel loaded = io::load_proxy_model(path);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(kNumFeatures, 0.2);
  const ProxyPrediction a = mlp.predict(f, f);
  const ProxyPrediction b = loaded.predict(f, f);
  CHECK(a.r_org == b.r_org);
  CHECK(a.r_cf == b.r_cf);
  CHECK(a.d == b.d);

  ProxyModel lin;
  lin.kind = ProxyKind::Linear;
  lin.lin_single = nn::Affine::make(kNumFeatures, 1, rng);
  lin.lin_contrastive = nn::Affine::make(2 * kNumFeatures, 1, rng);
  io::save_proxy_model(path, lin);
  const ProxyModel lloaded = io::load_proxy_model(path);
  CHECK(lloaded.kind == ProxyKind::Linear);
  CHECK(lin.predict(f, f).d == lloaded.predict(f, f).d);
  std::filesystem::remove(path);
}

TEST_CASE("bounds files round-trip and reject other kinds") {
  NormalizationBounds b = NormalizationBounds::unit();
  b.lo[kStateImportance] = -2.3;
  b.hi[kSparsity] = 17.0;
  b.converged = false;
  const std::string path = temp_path("cte_test_bounds.json");
  io::save_bounds(path, b);
  const NormalizationBounds loaded = io::load_bounds(path);
  CHECK(loaded.lo == b.lo);
  CHECK(loaded.hi == b.hi);
  CHECK(loaded.converged == b.converged);

  io::atomic_write(path, R"({"format_version":1,"kind":"something_else"})");
  CHECK_THROWS_AS(io::load_bounds(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("atomic_write leaves no temp file behind") {
  const std::string path = temp_path("cte_test_atomic.txt");
  io::atomic_write(path, "hello\n");
  CHECK(io::read_file(path) == "hello\n");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove(path);
}

TEST_CASE("csv escaping quotes the awkward cells") {
  CHECK(io::csv_escape("plain") == "plain");
  CHECK(io::csv_escape("a,b") == "\"a,b\"");
  CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("seed mixing separates streams deterministically") {
  CHECK(mix_seed(1, 0) == mix_seed(1, 0));
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("render_cte shows both panels with the shared start state") {
  io::DatasetFile data = sample_dataset(1, 9);
  const std::string out = io::render_cte(data.records[0]);
  CHECK(out.find('#') != std::string::npos);
  CHECK(out.find("org:") != std::string::npos);
  CHECK(out.find("cf:") != std::string::npos);
  CHECK(out.find("avg reward org=") != std::string::npos);

  // shared start state: the first frame row must appear twice side by side
  const size_t first_newline = out.find('\n');
  const std::string first_line = out.substr(0, first_newline);
  CHECK(first_line.rfind("start_index=", 0) == 0);
}

TEST_CASE("plan_from_config applies overrides over defaults") {
  const std::string cfg = R"({
    "env": {"horizon": 30, "n_humans": 3},
    "policy": {"temperature": 0.7},
    "mcto": {"n_iterations": 4, "n_starts": 6},
    "dac": {"n_deviations": 2},
    "random": {"p_end": 0.5},
    "reward": {"kind": "ground_truth"},
    "weights": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
    "proxy": {"kind": "linear", "epochs": 12},
    "scale_override": {"n_generate": 9, "n_train": 6, "n_test": 3}
  })";
  const ExperimentPlan plan = cli::plan_from_config(cfg, 42, "desk");
  CHECK(plan.master_seed == 42);
  CHECK(plan.env.horizon == 30);
  CHECK(plan.env.n_humans == 3);
  CHECK(plan.providers.policy_temperature == 0.7);
  CHECK(plan.mcto.n_iterations == 4);
  CHECK(plan.mcto.n_starts == 6);
  CHECK(plan.dac.n_deviations == 2);
  CHECK(plan.random.p_end == 0.5);
  CHECK(plan.providers.reward_kind == "ground_truth");
  CHECK(plan.weights[kValidity] == 0.1);
  CHECK(plan.weights[kSparsity] == 0.6);
  CHECK(plan.proxy_kind == ProxyKind::Linear);
  CHECK(plan.proxy_train.epochs == 12);
  CHECK(plan.scale.n_generate == 9);
  // untouched fields keep their defaults
  CHECK(plan.mcto.p_end == 0.35);
  CHECK(plan.dac.p_end == 0.55);
  CHECK(plan.scale.n_seeds == desk_scale().n_seeds);
}
