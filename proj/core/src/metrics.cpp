#include "wd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wd::harness {

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i];
    if (i >= static_cast<std::size_t>(window)) acc -= series[i - window];
    const auto n = std::min<std::size_t>(i + 1, window);
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_open(const std::ofstream& f, const std::string& path) {
  if (!f) throw std::runtime_error("metrics: cannot open for write: " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::vector<std::string> write_metrics_csv(const MetricsLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string train_path = dir + "/train.csv";
  const std::string eval_path = dir + "/eval.csv";

  {
    std::ofstream f(train_path, std::ios::binary);
    check_open(f, train_path);
    f << "seed,episode,return,epsilon,wm_rec_loss,wm_rew_loss,wm_cons_loss,q_loss,wall_ms\n";
    for (const auto& r : log.train) {
      f << r.seed << ',' << r.episode << ',' << fmt(r.episode_return) << ',' << fmt(r.epsilon) << ',';
      if (r.has_wm) {
        f << fmt(r.wm_rec_loss) << ',' << fmt(r.wm_rew_loss) << ',' << fmt(r.wm_cons_loss);
      } else {
        f << ",,";
      }
      f << ',';
      if (r.has_q) f << fmt(r.q_loss);
      f << ',' << fmt(r.wall_ms) << '\n';
    }
  }
  {
    std::ofstream f(eval_path, std::ios::binary);
    check_open(f, eval_path);
    f << "seed,episode,step,real_reward,predicted_reward\n";
    for (const auto& r : log.eval) {
      f << r.seed << ',' << r.episode << ',' << r.step << ',' << fmt(r.real_reward) << ',';
      if (r.has_predicted) f << fmt(r.predicted_reward);
      f << '\n';
    }
  }
  return {train_path, eval_path};
}

MetricsLog read_metrics_csv(const std::string& train_path, const std::string& eval_path) {
  MetricsLog log;
  {
    std::ifstream f(train_path);
    if (!f) throw std::runtime_error("metrics: cannot open: " + train_path);
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto v = split_csv_line(line);
      if (v.size() != 9) throw std::runtime_error("metrics: bad train.csv row: " + line);
      EpisodeRow r;
      r.seed = std::stoull(v[0]);
      r.episode = std::stoi(v[1]);
      r.episode_return = std::stod(v[2]);
      r.epsilon = std::stod(v[3]);
      r.has_wm = !v[4].empty();
      if (r.has_wm) {
        r.wm_rec_loss = std::stod(v[4]);
        r.wm_rew_loss = std::stod(v[5]);
        r.wm_cons_loss = std::stod(v[6]);
      }
      r.has_q = !v[7].empty();
      if (r.has_q) r.q_loss = std::stod(v[7]);
      r.wall_ms = std::stod(v[8]);
      log.train.push_back(r);
    }
  }
  {
    std::ifstream f(eval_path);
    if (!f) throw std::runtime_error("metrics: cannot open: " + eval_path);
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto v = split_csv_line(line);
      if (v.size() != 5) throw std::runtime_error("metrics: bad eval.csv row: " + line);
      EvalRow r;
      r.seed = std::stoull(v[0]);
      r.episode = std::stoi(v[1]);
      r.step = std::stoi(v[2]);
      r.real_reward = std::stod(v[3]);
      r.has_predicted = !v[4].empty();
      if (r.has_predicted) r.predicted_reward = std::stod(v[4]);
      log.eval.push_back(r);
    }
  }
  return log;
}

}  // namespace wd::harness
