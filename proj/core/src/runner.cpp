#include "wd/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "wd/svg.hpp"

namespace wd::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-stream tags of each experiment seed's root RNG.
enum StreamTag : std::uint64_t {
  kStreamUsers = 1,
  kStreamEnvDynamics = 2,
  kStreamAgentInit = 3,
  kStreamExplore = 4,
  kStreamReplay = 5,
  kStreamEvalDynamics = 6,
  kStreamRandomPolicy = 7,
};

agent::DreamerConfig dreamer_config(const ExperimentConfig& cfg) {
  agent::DreamerConfig d;
  d.world_model.obs_size = cfg.env.obs_size();
  d.warmup_steps = cfg.warmup_steps;
  return d;
}

agent::DqnConfig dqn_config(const ExperimentConfig& cfg) {
  agent::DqnConfig d;
  d.obs_size = cfg.env.obs_size();
  d.warmup_steps = cfg.warmup_steps;
  return d;
}

class DreamerEvalPolicy : public EvalPolicy {
 public:
  explicit DreamerEvalPolicy(agent::DreamerAgent& a) : agent_(a) {}
  void begin_episode(const Vector& obs) override {
    z_ = agent_.world_model().encode_step(
        Vector::Zero(agent_.config().world_model.latent_size), env::kStay, obs);
  }
  std::pair<int, double> act() override { return agent_.greedy_action(z_); }
  void observe(int action, const Vector& obs) override {
    z_ = agent_.world_model().encode_step(z_, action, obs);
  }
  const Vector& latent() const { return z_; }

 private:
  agent::DreamerAgent& agent_;
  Vector z_;
};

class DqnEvalPolicy : public EvalPolicy {
 public:
  explicit DqnEvalPolicy(agent::DqnAgent& a) : agent_(a), rng_(0) {}
  void begin_episode(const Vector& obs) override { obs_ = obs; }
  std::pair<int, double> act() override { return {agent_.select_action(obs_, 0.0, rng_), kNaN}; }
  void observe(int, const Vector& obs) override { obs_ = obs; }

 private:
  agent::DqnAgent& agent_;
  Rng rng_;  // unused at eps = 0
  Vector obs_;
};

class RandomEvalPolicy : public EvalPolicy {
 public:
  explicit RandomEvalPolicy(Rng& rng) : rng_(rng) {}
  void begin_episode(const Vector&) override {}
  std::pair<int, double> act() override { return {rng_.uniform_int(env::kNumActions), kNaN}; }
  void observe(int, const Vector&) override {}

 private:
  Rng& rng_;
};

std::vector<EvalRow> run_eval_block(env::Env& e, EvalPolicy& policy, int episodes,
                                    std::uint64_t seed, int train_episode) {
  std::vector<EvalRow> rows;
  int step = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector obs = e.reset();
    policy.begin_episode(obs);
    bool done = false;
    while (!done) {
      const auto [action, predicted] = policy.act();
      const auto res = e.step(action);
      EvalRow row;
      row.seed = seed;
      row.episode = train_episode;
      row.step = step++;
      row.real_reward = res.reward;
      row.has_predicted = std::isfinite(predicted);
      row.predicted_reward = row.has_predicted ? predicted : 0.0;
      rows.push_back(row);
      policy.observe(action, res.obs);
      done = res.done;
    }
  }
  return rows;
}

// Decode error of prior rollouts at depths 1..max_depth, per-episode mean,
// median across episodes.
std::vector<double> measure_depth_errors(agent::DreamerAgent& agent, env::Env& e, int episodes,
                                         int max_depth) {
  std::vector<std::vector<double>> per_episode(max_depth);
  wm::WorldModel& model = agent.world_model();
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<Vector> obs_seq;
    std::vector<Vector> latents;
    std::vector<int> actions;
    Vector obs = e.reset();
    obs_seq.push_back(obs);
    Vector z = model.encode_step(Vector::Zero(agent.config().world_model.latent_size),
                                 env::kStay, obs);
    latents.push_back(z);
    bool done = false;
    while (!done) {
      const int action = agent.greedy_action(z).first;
      const auto res = e.step(action);
      actions.push_back(action);
      obs_seq.push_back(res.obs);
      z = model.encode_step(z, action, res.obs);
      latents.push_back(z);
      done = res.done;
    }
    const int steps = static_cast<int>(actions.size());
    for (int k = 1; k <= max_depth; ++k) {
      double sum = 0.0;
      int count = 0;
      for (int t = 0; t + k <= steps; ++t) {
        Vector zk = latents[t];
        for (int j = 0; j < k; ++j) zk = model.predict_next(zk, actions[t + j]);
        sum += (model.decode(zk) - obs_seq[t + k]).norm();
        ++count;
      }
      if (count > 0) per_episode[k - 1].push_back(sum / count);
    }
  }
  std::vector<double> out(max_depth, 0.0);
  for (int k = 0; k < max_depth; ++k) {
    auto& v = per_episode[k];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    out[k] = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  return out;
}

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Agent>
SeedRunResult run_training(const ExperimentConfig& cfg, std::uint64_t seed, Agent& agent,
                           env::Env& train_env, env::Env& eval_env, EvalPolicy& eval_policy,
                           bool is_dreamer) {
  SeedRunResult result;
  result.seed = seed;
  replay::ReplayBuffer buffer;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    Vector obs = train_env.reset();
    agent.begin_episode(obs);
    EpisodeRow row;
    row.seed = seed;
    row.episode = ep;
    double wm_rec = 0, wm_rew = 0, wm_cons = 0, q_loss = 0;
    int trained = 0;
    bool done = false;
    while (!done) {
      const auto info = agent.step(train_env, buffer);
      row.episode_return += info.reward;
      if (info.trained) {
        ++trained;
        q_loss += info.q_loss;
        if constexpr (std::is_same_v<Agent, agent::DreamerAgent>) {
          wm_rec += info.wm_losses.reconstruction;
          wm_rew += info.wm_losses.reward;
          wm_cons += info.wm_losses.consistency;
        }
      }
      done = info.done;
    }
    row.epsilon = agent.epsilon();
    if (trained > 0) {
      row.has_q = true;
      row.q_loss = q_loss / trained;
      if (is_dreamer) {
        row.has_wm = true;
        row.wm_rec_loss = wm_rec / trained;
        row.wm_rew_loss = wm_rew / trained;
        row.wm_cons_loss = wm_cons / trained;
      }
    }
    row.wall_ms = elapsed_ms(t0);
    result.train.push_back(row);

    if ((ep + 1) % cfg.eval_every == 0) {
      auto rows = run_eval_block(eval_env, eval_policy, cfg.eval_episodes, seed, ep);
      result.eval.insert(result.eval.end(), rows.begin(), rows.end());
    }
  }
  return result;
}

SeedRunResult run_seed_random(const ExperimentConfig& cfg, std::uint64_t seed,
                              env::Env& train_env, env::Env& eval_env, Rng policy_rng) {
  SeedRunResult result;
  result.seed = seed;
  Rng eval_rng = policy_rng.derive(1);
  RandomEvalPolicy eval_policy(eval_rng);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    train_env.reset();
    EpisodeRow row;
    row.seed = seed;
    row.episode = ep;
    row.epsilon = 1.0;
    bool done = false;
    while (!done) {
      const auto res = train_env.step(policy_rng.uniform_int(env::kNumActions));
      row.episode_return += res.reward;
      done = res.done;
    }
    row.wall_ms = elapsed_ms(t0);
    result.train.push_back(row);
    if ((ep + 1) % cfg.eval_every == 0) {
      auto rows = run_eval_block(eval_env, eval_policy, cfg.eval_episodes, seed, ep);
      result.eval.insert(result.eval.end(), rows.begin(), rows.end());
    }
  }
  return result;
}

}  // namespace

PredictionStats evaluate_prediction(env::Env& e, EvalPolicy& policy, int episodes) {
  PredictionStats stats;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector obs = e.reset();
    policy.begin_episode(obs);
    bool done = false;
    while (!done) {
      const auto [action, predicted] = policy.act();
      const auto res = e.step(action);
      stats.steps.emplace_back(res.reward, predicted);
      policy.observe(action, res.obs);
      done = res.done;
    }
  }
  double abs_err_sum = 0.0, abs_real_sum = 0.0;
  std::size_t n_pred = 0;
  for (const auto& [real, predicted] : stats.steps) {
    if (!std::isfinite(predicted)) continue;
    const double err = std::abs(real - predicted);
    abs_err_sum += err;
    abs_real_sum += std::abs(real);
    stats.max_err = std::max(stats.max_err, err);
    ++n_pred;
  }
  if (n_pred == 0) {
    throw std::invalid_argument("evaluate_prediction: policy provides no reward predictions");
  }
  stats.mae = abs_err_sum / static_cast<double>(n_pred);
  const double mean_abs_real = abs_real_sum / static_cast<double>(n_pred);
  stats.mean_rel_err = mean_abs_real > 0 ? stats.mae / mean_abs_real : 0.0;
  return stats;
}

std::unique_ptr<EvalPolicy> make_dreamer_eval_policy(agent::DreamerAgent& agent) {
  return std::make_unique<DreamerEvalPolicy>(agent);
}

std::unique_ptr<agent::DreamerAgent> make_dreamer(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng root(seed);
  return std::make_unique<agent::DreamerAgent>(dreamer_config(cfg), root.derive(kStreamAgentInit),
                                               root.derive(kStreamExplore),
                                               root.derive(kStreamReplay));
}

ckpt::Checkpoint dreamer_checkpoint(agent::DreamerAgent& agent) {
  ckpt::Checkpoint c;
  c.d_z = agent.config().world_model.latent_size;
  ckpt::Section wm_sec{"WM", {}};
  for (auto* p : agent.world_model().params()) wm_sec.arrays.emplace_back(p->name, p->value);
  ckpt::Section q_sec{"Q", {}};
  for (auto* p : agent.q_net().params()) q_sec.arrays.emplace_back(p->name, p->value);
  c.sections = {std::move(wm_sec), std::move(q_sec)};
  return c;
}

ckpt::Checkpoint dqn_checkpoint(agent::DqnAgent& agent) {
  ckpt::Checkpoint c;
  c.d_z = 0;
  ckpt::Section q_sec{"Q", {}};
  for (auto* p : agent.q_net().params()) q_sec.arrays.emplace_back(p->name, p->value);
  c.sections = {std::move(q_sec)};
  return c;
}

namespace {
void restore_params(const ckpt::Section& sec, std::vector<nn::Param*> params) {
  if (sec.arrays.size() != params.size()) {
    throw std::runtime_error("checkpoint: section '" + sec.name + "' has " +
                             std::to_string(sec.arrays.size()) + " arrays, expected " +
                             std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = sec.arrays[i];
    if (value.rows() != params[i]->value.rows() || value.cols() != params[i]->value.cols()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    params[i]->value = value;
  }
}
}  // namespace

void load_dreamer_checkpoint(agent::DreamerAgent& agent, const ckpt::Checkpoint& c) {
  if (c.d_z != agent.config().world_model.latent_size) {
    throw std::runtime_error("checkpoint: latent size mismatch");
  }
  restore_params(c.section("WM"), agent.world_model().params());
  restore_params(c.section("Q"), agent.q_net().params());
  agent.sync_target();
}

SeedRunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng root(seed);
  const std::uint64_t user_seed = root.derive(kStreamUsers).next_u64();
  env::Env train_env(cfg.env, user_seed, root.derive(kStreamEnvDynamics).next_u64());
  env::Env eval_env(cfg.env, user_seed, root.derive(kStreamEvalDynamics).next_u64());

  switch (cfg.agent) {
    case AgentKind::kDreamer: {
      auto agent = make_dreamer(cfg, seed);
      DreamerEvalPolicy policy(*agent);
      SeedRunResult result =
          run_training(cfg, seed, *agent, train_env, eval_env, policy, /*is_dreamer=*/true);
      result.has_prediction = true;
      result.prediction = evaluate_prediction(eval_env, policy, cfg.eval_episodes);
      result.depth_error = measure_depth_errors(*agent, eval_env, cfg.eval_episodes, 5);
      result.checkpoint_bytes = ckpt::serialize(dreamer_checkpoint(*agent));
      return result;
    }
    case AgentKind::kDqn: {
      agent::DqnAgent agent(dqn_config(cfg), root.derive(kStreamAgentInit),
                            root.derive(kStreamExplore), root.derive(kStreamReplay));
      DqnEvalPolicy policy(agent);
      SeedRunResult result =
          run_training(cfg, seed, agent, train_env, eval_env, policy, /*is_dreamer=*/false);
      result.checkpoint_bytes = ckpt::serialize(dqn_checkpoint(agent));
      return result;
    }
    case AgentKind::kRandom:
      return run_seed_random(cfg, seed, train_env, eval_env, root.derive(kStreamRandomPolicy));
  }
  throw std::logic_error("run_seed: unreachable agent kind");
}

MetricsLog ExperimentResult::merged() const {
  MetricsLog log;
  for (const auto& s : seeds) {
    log.train.insert(log.train.end(), s.train.begin(), s.train.end());
    log.eval.insert(log.eval.end(), s.eval.begin(), s.eval.end());
  }
  return log;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.seeds.resize(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n = cfg.seeds.size();
  std::size_t next = 0;
  while (next < n) {
    const std::size_t batch = std::min<std::size_t>(hw, n - next);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t idx = next + i;
      threads.emplace_back([&, idx] {
        try {
          result.seeds[idx] = run_seed(cfg, cfg.seeds[idx]);
        } catch (...) {
          errors[idx] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    next += batch;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw std::runtime_error("seed " + std::to_string(cfg.seeds[i]) + ": " + e.what());
      }
    }
  }
  return result;
}

AgentComparison run_comparison(const ExperimentConfig& cfg) {
  AgentComparison cmp;
  ExperimentConfig c = cfg;
  c.agent = AgentKind::kDreamer;
  cmp.dreamer = run_experiment(c);
  c.agent = AgentKind::kDqn;
  cmp.dqn = run_experiment(c);
  c.agent = AgentKind::kRandom;
  cmp.random = run_experiment(c);
  return cmp;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Pointwise mean across seeds of the per-seed 20-episode moving average.
std::vector<double> mean_moving_average(const ExperimentResult& r, int window = 20) {
  if (r.seeds.empty()) return {};
  const std::size_t episodes = r.seeds.front().train.size();
  std::vector<double> mean(episodes, 0.0);
  for (const auto& s : r.seeds) {
    std::vector<double> returns;
    returns.reserve(s.train.size());
    for (const auto& row : s.train) returns.push_back(row.episode_return);
    const auto ma = moving_average(returns, window);
    for (std::size_t i = 0; i < episodes && i < ma.size(); ++i) mean[i] += ma[i];
  }
  for (auto& v : mean) v /= static_cast<double>(r.seeds.size());
  return mean;
}

}  // namespace

std::vector<std::string> write_experiment_outputs(const ExperimentResult& result,
                                                  const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto paths = write_metrics_csv(result.merged(), dir);
  for (const auto& s : result.seeds) {
    if (s.checkpoint_bytes.empty()) continue;
    const std::string path = dir + "/checkpoint_seed" + std::to_string(s.seed) + ".wdm";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f.write(s.checkpoint_bytes.data(), static_cast<std::streamsize>(s.checkpoint_bytes.size()));
    paths.push_back(path);
  }
  return paths;
}

std::vector<std::string> write_comparison_outputs(const AgentComparison& cmp,
                                                  const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto* pair : {&cmp.dreamer, &cmp.dqn, &cmp.random}) {
    const auto sub = dir + "/" + to_string(pair->config.agent);
    auto p = write_experiment_outputs(*pair, sub);
    paths.insert(paths.end(), p.begin(), p.end());
  }

  // Return-curve overlay across agents.
  std::vector<svg::Series> curves;
  for (const auto* pair : {&cmp.dreamer, &cmp.dqn, &cmp.random}) {
    svg::Series s;
    s.name = to_string(pair->config.agent);
    s.y = mean_moving_average(*pair);
    s.x.resize(s.y.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] = static_cast<double>(i);
    curves.push_back(std::move(s));
  }
  const std::string fig4 = dir + "/returns.svg";
  svg::emit_plot_svg(curves, "Episodic return (20-episode moving average, mean over seeds)",
                     "episode", "return", fig4);
  paths.push_back(fig4);

  // Real vs predicted rewards of the first dreamer seed.
  if (!cmp.dreamer.seeds.empty() && cmp.dreamer.seeds.front().has_prediction) {
    const auto& steps = cmp.dreamer.seeds.front().prediction.steps;
    svg::Series real{"real", {}, {}}, predicted{"predicted", {}, {}};
    for (std::size_t i = 0; i < steps.size(); ++i) {
      real.x.push_back(static_cast<double>(i));
      real.y.push_back(steps[i].first);
      predicted.x.push_back(static_cast<double>(i));
      predicted.y.push_back(steps[i].second);
    }
    const std::string fig5 = dir + "/prediction.svg";
    svg::emit_plot_svg({real, predicted}, "Real vs predicted reward (evaluation)", "step",
                       "reward", fig5);
    paths.push_back(fig5);
  }

  // Per-seed prediction summary.
  const std::string pred_csv = dir + "/prediction.csv";
  {
    std::ofstream f(pred_csv, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write: " + pred_csv);
    f << "seed,mae,max_err,mean_rel_err,depth1,depth2,depth3,depth4,depth5\n";
    for (const auto& s : cmp.dreamer.seeds) {
      if (!s.has_prediction) continue;
      f << s.seed << ',' << fmt17(s.prediction.mae) << ',' << fmt17(s.prediction.max_err) << ','
        << fmt17(s.prediction.mean_rel_err);
      for (double d : s.depth_error) f << ',' << fmt17(d);
      f << '\n';
    }
  }
  paths.push_back(pred_csv);
  return paths;
}

std::vector<std::string> evaluate_checkpoint(const ExperimentConfig& cfg,
                                             const std::string& checkpoint_path,
                                             const std::string& dir) {
  const auto c = ckpt::load(checkpoint_path);
  if (c.sections.size() < 2) {
    throw std::runtime_error("evaluate: checkpoint does not contain a dreamer agent (WM + Q)");
  }
  const std::uint64_t seed = cfg.seeds.front();
  auto agent = make_dreamer(cfg, seed);
  load_dreamer_checkpoint(*agent, c);

  Rng root(seed);
  const std::uint64_t user_seed = root.derive(kStreamUsers).next_u64();
  env::Env eval_env(cfg.env, user_seed, root.derive(kStreamEvalDynamics).next_u64());

  DreamerEvalPolicy policy(*agent);
  const auto stats = evaluate_prediction(eval_env, policy, cfg.eval_episodes);
  const auto depth = measure_depth_errors(*agent, eval_env, cfg.eval_episodes, 5);

  std::filesystem::create_directories(dir);
  MetricsLog log;
  for (std::size_t i = 0; i < stats.steps.size(); ++i) {
    EvalRow row;
    row.seed = seed;
    row.episode = 0;
    row.step = static_cast<int>(i);
    row.real_reward = stats.steps[i].first;
    row.has_predicted = true;
    row.predicted_reward = stats.steps[i].second;
    log.eval.push_back(row);
  }
  auto paths = write_metrics_csv(log, dir);
  const std::string pred_csv = dir + "/prediction.csv";
  std::ofstream f(pred_csv, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write: " + pred_csv);
  f << "seed,mae,max_err,mean_rel_err,depth1,depth2,depth3,depth4,depth5\n";
  f << seed << ',' << fmt17(stats.mae) << ',' << fmt17(stats.max_err) << ','
    << fmt17(stats.mean_rel_err);
  for (double d : depth) f << ',' << fmt17(d);
  f << '\n';
  paths.push_back(pred_csv);
  return paths;
}

}  // namespace wd::harness
