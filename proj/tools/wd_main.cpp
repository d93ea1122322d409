#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wd/config.hpp"
#include "wd/runner.hpp"

namespace {

wd::harness::ExperimentConfig load_config(const std::string& path, const std::string& agent,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::string& out) {
  auto cfg = wd::harness::parse_config_file(path);
  if (!agent.empty()) cfg.agent = wd::harness::agent_kind_from_string(agent);
  if (!seeds.empty()) cfg.seeds = seeds;
  if (!out.empty()) cfg.out_dir = out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wireless dreamer benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, agent_override, out_override, checkpoint_path;
  std::vector<std::uint64_t> seed_override;

  auto* train = app.add_subcommand("train", "train one agent over the configured seeds");
  train->add_option("--config", config_path, "experiment config file")->required();
  train->add_option("--agent", agent_override, "dreamer|dqn|random");
  train->add_option("--seed", seed_override, "seed list override");
  train->add_option("--out", out_override, "output directory override");

  auto* evaluate = app.add_subcommand("evaluate", "greedy evaluation of a saved dreamer agent");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("--config", config_path, "experiment config file")->required();
  evaluate->add_option("--out", out_override, "output directory override");

  auto* compare = app.add_subcommand("compare", "run dreamer, dqn and random over the seed list");
  compare->add_option("--config", config_path, "experiment config file")->required();
  compare->add_option("--seed", seed_override, "seed list override");
  compare->add_option("--out", out_override, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto cfg = load_config(config_path, agent_override, seed_override, out_override);
      const auto result = wd::harness::run_experiment(cfg);
      for (const auto& p : wd::harness::write_experiment_outputs(result, cfg.out_dir)) {
        std::cout << p << "\n";
      }
    } else if (evaluate->parsed()) {
      const auto cfg = load_config(config_path, "", {}, out_override);
      for (const auto& p : wd::harness::evaluate_checkpoint(cfg, checkpoint_path, cfg.out_dir)) {
        std::cout << p << "\n";
      }
    } else if (compare->parsed()) {
      const auto cfg = load_config(config_path, "", seed_override, out_override);
      const auto cmp = wd::harness::run_comparison(cfg);
      for (const auto& p : wd::harness::write_comparison_outputs(cmp, cfg.out_dir)) {
        std::cout << p << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
