#include "cte/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cte/features.hpp"
#include "json.hpp"

namespace cte::io {

using nlohmann::json;

namespace {

json cell_to_json(const Cell& c) { return json::array({c.x, c.y}); }

Cell cell_from_json(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

json state_to_json(const GridState& s) {
  json j;
  j["player"] = cell_to_json(s.player);
  json humans = json::array();
  for (const Cell& h : s.humans) humans.push_back(cell_to_json(h));
  j["humans"] = humans;
  json obstacles = json::array();
  for (const Cell& o : s.obstacles) obstacles.push_back(cell_to_json(o));
  j["obstacles"] = obstacles;
  j["t"] = s.t;
  j["saved"] = s.saved_count;
  j["extent"] = s.extent;
  j["horizon"] = s.horizon;
  return j;
}

GridState state_from_json(const json& j) {
  GridState s;
  s.player = cell_from_json(j.at("player"));
  for (const auto& h : j.at("humans")) s.humans.push_back(cell_from_json(h));
  for (const auto& o : j.at("obstacles")) s.obstacles.push_back(cell_from_json(o));
  s.t = j.at("t").get<int>();
  s.saved_count = j.at("saved").get<int>();
  s.extent = j.at("extent").get<int>();
  s.horizon = j.at("horizon").get<int>();
  return s;
}

json trajectory_to_json(const PartialTrajectory& t) {
  json steps = json::array();
  for (const TimeStep& ts : t.steps) {
    steps.push_back({{"state", state_to_json(ts.state)}, {"action", action_name(ts.action)}});
  }
  return {{"start_index", t.start_index}, {"steps", steps}};
}

PartialTrajectory trajectory_from_json(const json& j) {
  PartialTrajectory t;
  t.start_index = j.at("start_index").get<int>();
  for (const auto& step : j.at("steps")) {
    t.steps.push_back({state_from_json(step.at("state")),
                       action_from_name(step.at("action").get<std::string>())});
  }
  return t;
}

json weights_to_json(const WeightVector& w) {
  json arr = json::array();
  for (int i = 0; i < kNumCriteria; ++i) arr.push_back(w[i]);
  return arr;
}

WeightVector weights_from_json(const json& j) {
  WeightVector w;
  for (int i = 0; i < kNumCriteria; ++i) w[i] = j.at(static_cast<size_t>(i)).get<double>();
  return w;
}

json criteria_to_json(const CriterionVector& cv) {
  json arr = json::array();
  for (int i = 0; i < kNumCriteria; ++i) arr.push_back(cv[i]);
  return arr;
}

CriterionVector criteria_from_json(const json& j) {
  CriterionVector cv;
  for (int i = 0; i < kNumCriteria; ++i) cv[i] = j.at(static_cast<size_t>(i)).get<double>();
  return cv;
}

json bounds_to_json(const NormalizationBounds& b) {
  json lo = json::array(), hi = json::array();
  for (int i = 0; i < kNumCriteria; ++i) {
    lo.push_back(b.lo[static_cast<size_t>(i)]);
    hi.push_back(b.hi[static_cast<size_t>(i)]);
  }
  return {{"lo", lo}, {"hi", hi}, {"converged", b.converged}};
}

NormalizationBounds bounds_from_json(const json& j) {
  NormalizationBounds b;
  for (int i = 0; i < kNumCriteria; ++i) {
    b.lo[static_cast<size_t>(i)] = j.at("lo").at(static_cast<size_t>(i)).get<double>();
    b.hi[static_cast<size_t>(i)] = j.at("hi").at(static_cast<size_t>(i)).get<double>();
  }
  b.converged = j.at("converged").get<bool>();
  return b;
}

json affine_to_json(const nn::Affine& a) {
  json w = json::array();
  for (int r = 0; r < a.W.rows(); ++r) {
    for (int c = 0; c < a.W.cols(); ++c) w.push_back(a.W(r, c));
  }
  json b = json::array();
  for (int r = 0; r < a.b.size(); ++r) b.push_back(a.b(r));
  return {{"in", a.in_dim()}, {"out", a.out_dim()}, {"W", w}, {"b", b}};
}

nn::Affine affine_from_json(const json& j) {
  nn::Affine a = nn::Affine::zeros(j.at("in").get<int>(), j.at("out").get<int>());
  const auto& w = j.at("W");
  size_t k = 0;
  for (int r = 0; r < a.W.rows(); ++r) {
    for (int c = 0; c < a.W.cols(); ++c) a.W(r, c) = w.at(k++).get<double>();
  }
  const auto& b = j.at("b");
  for (int r = 0; r < a.b.size(); ++r) a.b(r) = b.at(static_cast<size_t>(r)).get<double>();
  return a;
}

json mlp_to_json(const nn::Mlp& m) {
  json dims = json::array();
  for (int d : m.dims()) dims.push_back(d);
  json params = json::array();
  for (double v : nn::flatten(m)) params.push_back(v);
  return {{"dims", dims},
          {"output_activation", m.output == nn::OutputActivation::Relu ? "relu" : "linear"},
          {"params", params}};
}

nn::Mlp mlp_from_json(const json& j) {
  std::vector<int> dims;
  for (const auto& d : j.at("dims")) dims.push_back(d.get<int>());
  Rng dummy(0);
  nn::Mlp m = nn::Mlp::make(dims, dummy,
                            j.at("output_activation").get<std::string>() == "relu"
                                ? nn::OutputActivation::Relu
                                : nn::OutputActivation::Linear);
  std::vector<double> params;
  for (const auto& v : j.at("params")) params.push_back(v.get<double>());
  nn::unflatten(m, params);
  return m;
}

void check_version(const json& j, int expected, const std::string& what) {
  const int v = j.at("format_version").get<int>();
  if (v != expected) {
    throw std::runtime_error("unsupported " + what + " format version " + std::to_string(v));
  }
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("rename failed: " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_dataset(const std::string& path, const DatasetFile& data) {
  std::ostringstream out;
  json header;
  header["record"] = "header";
  header["format_version"] = kDatasetFormatVersion;
  header["kind"] = "cte_dataset";
  header["generator"] = data.header.generator;
  header["master_seed"] = data.header.master_seed;
  header["bounds"] = bounds_to_json(data.header.bounds);
  header["generator_config"] =
      data.header.generator_config_json.empty()
          ? json::object()
          : json::parse(data.header.generator_config_json);
  header["env"] = data.header.env_json.empty() ? json::object()
                                               : json::parse(data.header.env_json);
  header["reward"] = data.header.reward_id;
  header["policy_temperature"] = data.header.policy_temperature;
  header["weights_sampled"] = data.header.weights_sampled;
  header["weights"] = weights_to_json(data.header.weights);
  json cols = json::array();
  for (const auto& name : feature_names()) cols.push_back(name);
  header["feature_columns"] = cols;
  header["n_records"] = static_cast<int>(data.records.size());
  out << header.dump() << "\n";

  int index = 0;
  for (const CteRecord& r : data.records) {
    json rec;
    rec["record"] = "cte";
    rec["index"] = index++;
    rec["start_index"] = r.cte.t_cf.start_index;
    rec["r_org"] = r.cte.r_org;
    rec["r_cf"] = r.cte.r_cf;
    rec["rho"] = r.rho;
    rec["criteria"] = criteria_to_json(r.criteria);
    rec["weights"] = weights_to_json(r.weights);
    rec["t_org"] = trajectory_to_json(r.cte.t_org);
    rec["t_cf"] = trajectory_to_json(r.cte.t_cf);
    out << rec.dump() << "\n";
  }
  atomic_write(path, out.str());
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);

  DatasetFile data;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
  json header = json::parse(line);
  check_version(header, kDatasetFormatVersion, "dataset");
  if (header.at("kind").get<std::string>() != "cte_dataset") {
    throw std::runtime_error("not a cte dataset: " + path);
  }

  // frozen feature order: reject any drift between writer and reader
  const auto& cols = header.at("feature_columns");
  const auto& names = feature_names();
  if (cols.size() != names.size()) {
    throw std::runtime_error("feature schema mismatch in " + path);
  }
  for (size_t i = 0; i < names.size(); ++i) {
    if (cols.at(i).get<std::string>() != names[i]) {
      throw std::runtime_error("feature schema mismatch in " + path);
    }
  }

  data.header.generator = header.at("generator").get<std::string>();
  data.header.master_seed = header.at("master_seed").get<uint64_t>();
  data.header.bounds = bounds_from_json(header.at("bounds"));
  data.header.generator_config_json = header.at("generator_config").dump();
  data.header.env_json = header.at("env").dump();
  data.header.reward_id = header.at("reward").get<std::string>();
  data.header.policy_temperature = header.at("policy_temperature").get<double>();
  data.header.weights_sampled = header.at("weights_sampled").get<bool>();
  data.header.weights = weights_from_json(header.at("weights"));
  data.header.n_records = header.at("n_records").get<int>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    CteRecord r;
    r.cte.t_org = trajectory_from_json(rec.at("t_org"));
    r.cte.t_cf = trajectory_from_json(rec.at("t_cf"));
    r.cte.r_org = rec.at("r_org").get<double>();
    r.cte.r_cf = rec.at("r_cf").get<double>();
    r.rho = rec.at("rho").get<double>();
    r.criteria = criteria_from_json(rec.at("criteria"));
    r.weights = weights_from_json(rec.at("weights"));
    data.records.push_back(std::move(r));
  }
  if (static_cast<int>(data.records.size()) != data.header.n_records) {
    throw std::runtime_error("dataset truncated: " + path);
  }
  return data;
}

Dataset dataset_from_records(const DatasetFile& data) {
  if (data.records.empty()) throw std::invalid_argument("dataset file has no records");
  Dataset d = Dataset::empty();
  const auto n = static_cast<Eigen::Index>(data.records.size());
  d.f_org.resize(n, kNumFeatures);
  d.f_cf.resize(n, kNumFeatures);
  d.y_org.resize(n);
  d.y_cf.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CteRecord& r = data.records[static_cast<size_t>(i)];
    const FeatureVector fo = extract_features(r.cte.t_org);
    const FeatureVector fc = extract_features(r.cte.t_cf);
    for (int k = 0; k < kNumFeatures; ++k) {
      d.f_org(i, k) = fo[static_cast<size_t>(k)];
      d.f_cf(i, k) = fc[static_cast<size_t>(k)];
    }
    d.y_org(i) = r.cte.r_org;
    d.y_cf(i) = r.cte.r_cf;
  }
  return d;
}

void save_bounds(const std::string& path, const NormalizationBounds& bounds) {
  json j = bounds_to_json(bounds);
  j["format_version"] = kBoundsFormatVersion;
  j["kind"] = "normalization_bounds";
  atomic_write(path, j.dump(2) + "\n");
}

NormalizationBounds load_bounds(const std::string& path) {
  json j = json::parse(read_file(path));
  check_version(j, kBoundsFormatVersion, "bounds");
  if (j.at("kind").get<std::string>() != "normalization_bounds") {
    throw std::runtime_error("not a bounds file: " + path);
  }
  return bounds_from_json(j);
}

void save_reward_model(const std::string& path, const MlpRewardModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "reward_mlp";
  j["id"] = model.name();
  j["net"] = mlp_to_json(model.net());
  atomic_write(path, j.dump() + "\n");
}

std::unique_ptr<MlpRewardModel> load_reward_model(const std::string& path) {
  json j = json::parse(read_file(path));
  check_version(j, kModelFormatVersion, "model");
  if (j.at("kind").get<std::string>() != "reward_mlp") {
    throw std::runtime_error("not a reward model file: " + path);
  }
  return std::make_unique<MlpRewardModel>(mlp_from_json(j.at("net")),
                                          j.at("id").get<std::string>());
}

void save_proxy_model(const std::string& path, const ProxyModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  if (model.kind == ProxyKind::Mlp) {
    j["kind"] = "proxy_mlp";
    j["body"] = mlp_to_json(model.body);
    j["head_single"] = affine_to_json(model.head_single);
    j["head_contrastive"] = affine_to_json(model.head_contrastive);
  } else {
    j["kind"] = "proxy_linear";
    j["single"] = affine_to_json(model.lin_single);
    j["contrastive"] = affine_to_json(model.lin_contrastive);
  }
  atomic_write(path, j.dump() + "\n");
}

ProxyModel load_proxy_model(const std::string& path) {
  json j = json::parse(read_file(path));
  check_version(j, kModelFormatVersion, "model");
  const std::string kind = j.at("kind").get<std::string>();
  ProxyModel m;
  if (kind == "proxy_mlp") {
    m.kind = ProxyKind::Mlp;
    m.body = mlp_from_json(j.at("body"));
    m.head_single = affine_from_json(j.at("head_single"));
    m.head_contrastive = affine_from_json(j.at("head_contrastive"));
  } else if (kind == "proxy_linear") {
    m.kind = ProxyKind::Linear;
    m.lin_single = affine_from_json(j.at("single"));
    m.lin_contrastive = affine_from_json(j.at("contrastive"));
  } else {
    throw std::runtime_error("not a proxy model file: " + path);
  }
  return m;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

namespace {

std::string frame_line(const std::string& frame, size_t line_idx, int width) {
  size_t pos = 0;
  for (size_t i = 0; i < line_idx; ++i) {
    pos = frame.find('\n', pos);
    if (pos == std::string::npos) return std::string(static_cast<size_t>(width), ' ');
    ++pos;
  }
  const size_t end = frame.find('\n', pos);
  std::string s = frame.substr(pos, end == std::string::npos ? end : end - pos);
  s.resize(static_cast<size_t>(width), ' ');
  return s;
}

}  // namespace

std::string render_cte(const CteRecord& record) {
  std::ostringstream out;
  const int len = std::max(record.cte.t_org.length(), record.cte.t_cf.length());
  out << "start_index=" << record.cte.t_cf.start_index << "\n";
  for (int k = 0; k < len; ++k) {
    std::string left, right;
    std::string left_info, right_info;
    if (k < record.cte.t_org.length()) {
      const TimeStep& ts = record.cte.t_org.steps[static_cast<size_t>(k)];
      left = render(ts.state);
      left_info = std::string("org: ") + action_name(ts.action) +
                  " gt=" + std::to_string(step(ts.state, ts.action).gt_reward);
    }
    if (k < record.cte.t_cf.length()) {
      const TimeStep& ts = record.cte.t_cf.steps[static_cast<size_t>(k)];
      right = render(ts.state);
      right_info = std::string("cf: ") + action_name(ts.action) +
                   " gt=" + std::to_string(step(ts.state, ts.action).gt_reward);
    }
    const int width = record.cte.t_org.steps.front().state.extent + 2;
    const size_t n_lines = static_cast<size_t>(width);
    out << "step " << k << "\n";
    for (size_t li = 0; li < n_lines; ++li) {
      out << frame_line(left, li, width) << "   " << frame_line(right, li, width) << "\n";
    }
    left_info.resize(std::max<size_t>(left_info.size(), static_cast<size_t>(width) + 3), ' ');
    out << left_info << right_info << "\n";
  }
  out << "avg reward org=" << record.cte.r_org << " cf=" << record.cte.r_cf << "\n";
  return out.str();
}

}  // namespace cte::io
