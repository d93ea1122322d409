#pragma once

#include "wd/agent_common.hpp"
#include "wd/env.hpp"
#include "wd/nn.hpp"
#include "wd/replay.hpp"
#include "wd/rng.hpp"

namespace wd::agent {

struct DqnConfig {
  int obs_size = 37;
  int n_actions = 5;
  double gamma = 0.99;
  double lr = 5e-4;
  int sync_interval = 100;
  long warmup_steps = 1000;
  int batch_size = 32;
  EpsSchedule eps;
};

// Model-free baseline: epsilon-greedy Q-learning on raw observations with
// a periodically synced target network. Shares the dreamer's schedules and
// per-env-step gradient budget.
class DqnAgent {
 public:
  DqnAgent(DqnConfig cfg, Rng init_rng, Rng explore_rng, Rng sample_rng);

  void begin_episode(const Vector& obs);

  struct StepInfo {
    double reward = 0.0;
    bool done = false;
    bool trained = false;
    double q_loss = 0.0;
  };
  StepInfo step(env::Env& e, replay::ReplayBuffer& buffer);

  int select_action(const Vector& obs, double eps, Rng& rng) const;

  // One Adam step on targets y = r + gamma * (1 - done) * max Q_target(x').
  double td_update(const std::vector<replay::Transition>& batch);

  void sync_target();

  double epsilon() const { return cfg_.eps.at(env_steps_); }
  long env_steps() const { return env_steps_; }
  long grad_steps() const { return grad_steps_; }
  nn::Mlp& q_net() { return q_; }
  nn::Mlp& target_net() { return target_; }
  const DqnConfig& config() const { return cfg_; }

 private:
  DqnConfig cfg_;
  nn::Mlp q_;
  nn::Mlp target_;
  nn::Adam adam_;
  Rng explore_rng_;
  Rng sample_rng_;
  Vector last_obs_;
  long env_steps_ = 0;
  long grad_steps_ = 0;
  long episode_ = 0;
  bool in_episode_ = false;
};

}  // namespace wd::agent
