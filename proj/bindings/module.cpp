#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cte/commands.hpp"
#include "cte/experiments.hpp"
#include "cte/io.hpp"
#include "cte/stats.hpp"

namespace py = pybind11;
using namespace cte;

namespace {

std::vector<double> criteria_list(const CriterionVector& cv) {
  return {cv[0], cv[1], cv[2], cv[3], cv[4], cv[5]};
}

WeightVector weights_from_list(const std::vector<double>& w) {
  if (w.size() != kNumCriteria) throw std::invalid_argument("expected 6 weights");
  WeightVector out;
  for (int i = 0; i < kNumCriteria; ++i) out[i] = w[static_cast<size_t>(i)];
  return out;
}

}  // namespace

PYBIND11_MODULE(_ctexplain, m) {
  m.doc() = "Counterfactual trajectory explanations for gridworld reward functions";

  py::class_<Cell>(m, "Cell")
      .def(py::init<int, int>(), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Cell::x)
      .def_readwrite("y", &Cell::y)
      .def("__repr__", [](const Cell& c) {
        return "Cell(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
      });

  py::enum_<EnvAction>(m, "EnvAction")
      .value("MOVE_UP", EnvAction::MoveUp)
      .value("MOVE_DOWN", EnvAction::MoveDown)
      .value("MOVE_LEFT", EnvAction::MoveLeft)
      .value("MOVE_RIGHT", EnvAction::MoveRight)
      .value("INTERACT_UP", EnvAction::InteractUp)
      .value("INTERACT_DOWN", EnvAction::InteractDown)
      .value("INTERACT_LEFT", EnvAction::InteractLeft)
      .value("INTERACT_RIGHT", EnvAction::InteractRight)
      .value("STAND", EnvAction::Stand);

  py::class_<GridConfig>(m, "GridConfig")
      .def(py::init<>())
      .def_readwrite("extent", &GridConfig::extent)
      .def_readwrite("n_humans", &GridConfig::n_humans)
      .def_readwrite("n_obstacles", &GridConfig::n_obstacles)
      .def_readwrite("horizon", &GridConfig::horizon);

  py::class_<GridState>(m, "GridState")
      .def(py::init<>())
      .def_readwrite("player", &GridState::player)
      .def_readwrite("humans", &GridState::humans)
      .def_readwrite("obstacles", &GridState::obstacles)
      .def_readwrite("t", &GridState::t)
      .def_readwrite("saved_count", &GridState::saved_count)
      .def_readwrite("extent", &GridState::extent)
      .def_readwrite("horizon", &GridState::horizon)
      .def("__eq__", [](const GridState& a, const GridState& b) { return a == b; });

  m.def("init_random", [](const GridConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    return init_random(cfg, rng);
  });
  m.def("step", [](const GridState& s, EnvAction a) {
    StepResult r = step(s, a);
    return py::make_tuple(r.next, r.gt_reward, r.terminal);
  });
  m.def("render", &render);

  m.def("heuristic_policy", [](const GridState& s, double temperature) {
    return heuristic_policy(s, temperature).probs;
  });
  m.def("policy_entropy", [](const std::vector<double>& probs) {
    PolicyDistribution d;
    if (probs.size() != kNumActions) throw std::invalid_argument("expected 9 probabilities");
    for (int i = 0; i < kNumActions; ++i) d.probs[static_cast<size_t>(i)] = probs[static_cast<size_t>(i)];
    return policy_entropy(d);
  });

  py::class_<TimeStep>(m, "TimeStep")
      .def_readwrite("state", &TimeStep::state)
      .def_readwrite("action", &TimeStep::action);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("gt_rewards", &Trajectory::gt_rewards)
      .def("length", &Trajectory::length);

  py::class_<PartialTrajectory>(m, "PartialTrajectory")
      .def_readonly("start_index", &PartialTrajectory::start_index)
      .def_readonly("steps", &PartialTrajectory::steps)
      .def("length", &PartialTrajectory::length);

  py::class_<Cte>(m, "Cte")
      .def_readonly("t_org", &Cte::t_org)
      .def_readonly("t_cf", &Cte::t_cf)
      .def_readonly("r_org", &Cte::r_org)
      .def_readonly("r_cf", &Cte::r_cf);

  m.def("extract_features", [](const PartialTrajectory& t) {
    const FeatureVector f = extract_features(t);
    return std::vector<double>(f.begin(), f.end());
  });
  m.def("feature_names", [] {
    const auto& names = feature_names();
    return std::vector<std::string>(names.begin(), names.end());
  });

  m.def("mhd", [](const PartialTrajectory& a, const PartialTrajectory& b) {
    return mhd(a, b);
  });

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    return spearman(x, y);
  });
  m.def("welch_p_value", [](const std::vector<double>& a, const std::vector<double>& b) {
    return welch_p_value(a, b);
  });

  // End-to-end convenience: rolls out an episode with the heuristic policy
  // over the ground-truth reward and generates one CTE.
  m.def(
      "generate_cte",
      [](const GridConfig& cfg, const std::string& generator,
         const std::vector<double>& weights, uint64_t seed) {
        Rng rng(seed);
        GroundTruthReward reward;
        HeuristicPolicy policy(0.5);
        Trajectory tau = rollout(policy, cfg, rng);
        GenerationContext ctx;
        ctx.reward = &reward;
        ctx.policy = &policy;
        ctx.bounds = NormalizationBounds::unit();
        for (int c = 0; c < kNumCriteria; ++c) {
          ctx.bounds.lo[static_cast<size_t>(c)] = -10.0;
          ctx.bounds.hi[static_cast<size_t>(c)] = 10.0;
        }
        ctx.weights = weights_from_list(weights);
        GenerationResult res;
        if (generator == "mcto") {
          MctoConfig mcfg;
          res = generate_mcto(tau, ctx, mcfg, rng);
        } else if (generator == "dac") {
          DacConfig dcfg;
          res = generate_dac(tau, ctx, dcfg, rng);
        } else if (generator == "random") {
          RandomConfig rcfg;
          res = generate_random(tau, ctx, rcfg, rng);
        } else {
          throw std::invalid_argument("unknown generator: " + generator);
        }
        return py::make_tuple(res.cte, criteria_list(res.criteria), res.rho);
      },
      py::arg("cfg"), py::arg("generator"), py::arg("weights"), py::arg("seed"));

  m.def("render_cte_file", &cte::cli::cmd_render, py::arg("dataset_path"), py::arg("index"));
}
