#include <cstdint>
#include <iostream>

#include "CLI11.hpp"
#include "cte/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual trajectory explanations for gridworld reward functions"};
  app.require_subcommand(1);

  cte::cli::RunOptions opt;
  std::string render_dataset;
  int render_index = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Path to the JSON run config")->required();
    sub->add_option("--seed", opt.master_seed, "Master seed")->required();
    sub->add_option("--scale", opt.scale, "Scale preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--out", opt.out_dir, "Output directory");
  };

  CLI::App* gen = app.add_subcommand("generate", "Generate a CTE dataset");
  add_common(gen);
  CLI::App* eval = app.add_subcommand("evaluate", "Train and score proxy models on datasets");
  add_common(eval);
  CLI::App* exp = app.add_subcommand("experiment", "Run an experiment or analysis");
  add_common(exp);
  CLI::App* calib = app.add_subcommand("calibrate", "Calibrate normalization bounds");
  add_common(calib);

  CLI::App* render = app.add_subcommand("render", "Replay one stored CTE as ASCII frames");
  render->add_option("--dataset", render_dataset, "Dataset file")->required();
  render->add_option("--index", render_index, "Record index")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cte::cli::cmd_generate(opt);
    if (eval->parsed()) return cte::cli::cmd_evaluate(opt);
    if (exp->parsed()) return cte::cli::cmd_experiment(opt);
    if (calib->parsed()) return cte::cli::cmd_calibrate(opt);
    if (render->parsed()) {
      std::cout << cte::cli::cmd_render(render_dataset, render_index);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
