#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wd/env.hpp"

namespace wd::harness {

enum class AgentKind { kDreamer, kDqn, kRandom };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& s);  // throws on unknown

struct ExperimentConfig {
  AgentKind agent = AgentKind::kDreamer;
  env::EnvConfig env;
  int episodes = 400;
  std::vector<std::uint64_t> seeds = {1};
  long warmup_steps = 1000;
  int eval_every = 25;     // episodes between evaluations
  int eval_episodes = 5;   // fresh greedy episodes per evaluation
  std::string out_dir = "out";
  bool desk_scale = false;  // grid 32x32, 5 users, T=50, 300 episodes

  void validate() const;  // throws naming the offending field
};

// Flat `key: value` text, one entry per line, '#' comments, blank lines
// ignored. Unknown keys are rejected. desk_scale is applied before any
// other key so explicit values win regardless of line order.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace wd::harness
