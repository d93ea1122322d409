#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "wd/checkpoint.hpp"
#include "wd/config.hpp"
#include "wd/dqn.hpp"
#include "wd/dreamer.hpp"
#include "wd/env.hpp"
#include "wd/metrics.hpp"

namespace wd::harness {

using nn::Vector;

// Policy interface for greedy evaluation episodes. act() may also return a
// per-step reward prediction (NaN when the policy has none).
class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual void begin_episode(const Vector& obs) = 0;
  virtual std::pair<int, double> act() = 0;
  virtual void observe(int action, const Vector& obs) = 0;
};

struct PredictionStats {
  std::vector<std::pair<double, double>> steps;  // (real, predicted)
  double mae = 0.0;
  double max_err = 0.0;
  double mean_rel_err = 0.0;  // mae / mean |real|
};

// Runs `episodes` greedy episodes recording realized vs predicted rewards.
// Throws std::invalid_argument if the policy yields no predictions.
PredictionStats evaluate_prediction(env::Env& e, EvalPolicy& policy, int episodes);

// Greedy lookahead policy over the agent's recurrent latent, with the
// model's reward prediction for the chosen action.
std::unique_ptr<EvalPolicy> make_dreamer_eval_policy(agent::DreamerAgent& agent);

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRow> train;
  std::vector<EvalRow> eval;
  bool has_prediction = false;
  PredictionStats prediction;          // final-evaluation stats (dreamer)
  std::vector<double> depth_error;     // decode error at prior depth k=1..5
  std::string checkpoint_bytes;        // empty for the random agent
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedRunResult> seeds;
  MetricsLog merged() const;
};

// Trains one agent for one seed; fully deterministic given (config, seed).
SeedRunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// All seeds of cfg.seeds, possibly in parallel threads, merged in seed-list
// order afterwards.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct AgentComparison {
  ExperimentResult dreamer;
  ExperimentResult dqn;
  ExperimentResult random;
};

// Runs all three agents over the same seed list (overriding cfg.agent).
AgentComparison run_comparison(const ExperimentConfig& cfg);

// train.csv / eval.csv / per-seed checkpoints for a single experiment.
std::vector<std::string> write_experiment_outputs(const ExperimentResult& result,
                                                  const std::string& dir);

// Per-agent subdirectories plus the learning-curve overlay SVG, the
// real-vs-predicted reward SVG, and prediction.csv.
std::vector<std::string> write_comparison_outputs(const AgentComparison& cmp,
                                                  const std::string& dir);

// Rebuilds a dreamer agent from config and restores a checkpoint.
std::unique_ptr<agent::DreamerAgent> make_dreamer(const ExperimentConfig& cfg, std::uint64_t seed);
void load_dreamer_checkpoint(agent::DreamerAgent& agent, const ckpt::Checkpoint& c);
ckpt::Checkpoint dreamer_checkpoint(agent::DreamerAgent& agent);
ckpt::Checkpoint dqn_checkpoint(agent::DqnAgent& agent);

// Greedy evaluation of a (possibly restored) dreamer agent; writes eval.csv
// and prediction.csv into dir. Returns the file paths.
std::vector<std::string> evaluate_checkpoint(const ExperimentConfig& cfg,
                                             const std::string& checkpoint_path,
                                             const std::string& dir);

}  // namespace wd::harness
