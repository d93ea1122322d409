#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wd::harness {

struct EpisodeRow {
  std::uint64_t seed = 0;
  int episode = 0;
  double episode_return = 0.0;
  double epsilon = 0.0;
  bool has_wm = false;
  double wm_rec_loss = 0.0;
  double wm_rew_loss = 0.0;
  double wm_cons_loss = 0.0;
  bool has_q = false;
  double q_loss = 0.0;
  double wall_ms = 0.0;
};

struct EvalRow {
  std::uint64_t seed = 0;
  int episode = 0;  // training episode at which the evaluation ran
  int step = 0;     // step index within the evaluation block
  double real_reward = 0.0;
  bool has_predicted = false;
  double predicted_reward = 0.0;
};

struct MetricsLog {
  std::vector<EpisodeRow> train;
  std::vector<EvalRow> eval;
};

// Left-truncated trailing mean: out[i] = mean(series[max(0,i-w+1)..i]).
std::vector<double> moving_average(const std::vector<double>& series, int window = 20);

// Writes train.csv and eval.csv into dir (created if needed); returns the
// two paths. Floats use 17 significant digits, '.' separator, LF endings.
std::vector<std::string> write_metrics_csv(const MetricsLog& log, const std::string& dir);

// Parses files produced by write_metrics_csv (used by round-trip checks
// and the plotting CLI).
MetricsLog read_metrics_csv(const std::string& train_path, const std::string& eval_path);

}  // namespace wd::harness
