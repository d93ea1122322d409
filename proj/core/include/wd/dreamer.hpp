#pragma once

#include <utility>

#include "wd/agent_common.hpp"
#include "wd/env.hpp"
#include "wd/nn.hpp"
#include "wd/replay.hpp"
#include "wd/rng.hpp"
#include "wd/world_model.hpp"

namespace wd::agent {

using nn::Matrix;
using nn::Vector;

struct DreamerConfig {
  wm::WorldModelConfig world_model;
  double gamma = 0.99;
  double q_lr = 5e-4;
  int sync_interval = 100;  // gradient steps between hard target syncs
  int horizon = 5;          // imagined rollout length for value learning
  long warmup_steps = 1000;
  int batch_size = 32;
  int seq_len = 16;
  EpsSchedule eps;
};

// Model-based value learner: latent world model + Q / target Q networks
// trained on imagined latent trajectories, with one-step model lookahead
// action selection.
class DreamerAgent {
 public:
  DreamerAgent(DreamerConfig cfg, Rng init_rng, Rng explore_rng, Rng sample_rng);

  // Resets the recurrent belief for a new episode and encodes its first
  // observation (z_prev = 0, a_prev = Stay).
  void begin_episode(const Vector& obs);

  struct StepInfo {
    double reward = 0.0;
    bool done = false;
    bool trained = false;
    wm::WmLosses wm_losses;
    double q_loss = 0.0;
  };
  // One workflow cycle: select an action from the current latent, execute
  // it, store the transition, re-encode, and (after warmup) run one
  // world-model batch and one TD update.
  StepInfo step(env::Env& e, replay::ReplayBuffer& buffer);

  // Epsilon-greedy over the one-step lookahead score
  //   score(a) = r_hat(z, a) + gamma * max_a' Q(z_next(z, a), a').
  int select_action(const Vector& z, double eps, Rng& rng) const;

  // Greedy action plus the model's reward prediction for it.
  std::pair<int, double> greedy_action(const Vector& z) const;

  // One Adam step on the mean squared TD error over horizon-step imagined
  // rollouts from the given start latents (columns). Returns the loss.
  double td_update(const Matrix& start_latents);

  void sync_target();

  double epsilon() const { return cfg_.eps.at(env_steps_); }
  long env_steps() const { return env_steps_; }
  long grad_steps() const { return grad_steps_; }
  const Vector& latent() const { return z_; }
  const DreamerConfig& config() const { return cfg_; }

  wm::WorldModel& world_model() { return wm_; }
  nn::Mlp& q_net() { return q_; }
  nn::Mlp& target_net() { return target_; }

 private:
  DreamerConfig cfg_;
  wm::WorldModel wm_;
  nn::Mlp q_;
  nn::Mlp target_;
  nn::Adam q_adam_;
  Rng explore_rng_;
  Rng sample_rng_;
  Vector z_;
  Vector last_obs_;
  long env_steps_ = 0;
  long grad_steps_ = 0;
  long episode_ = 0;
  bool in_episode_ = false;
};

}  // namespace wd::agent
