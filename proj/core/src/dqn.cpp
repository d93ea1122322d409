#include "wd/dqn.hpp"

#include <cmath>
#include <stdexcept>

namespace wd::agent {

DqnAgent::DqnAgent(DqnConfig cfg, Rng init_rng, Rng explore_rng, Rng sample_rng)
    : cfg_(cfg),
      q_("dqn", {cfg.obs_size, 128, 128, cfg.n_actions}, init_rng),
      target_("dqn_target", {cfg.obs_size, 128, 128, cfg.n_actions}, init_rng),
      explore_rng_(explore_rng),
      sample_rng_(sample_rng),
      last_obs_(Vector::Zero(cfg.obs_size)) {
  adam_.lr = cfg_.lr;
  sync_target();
}

void DqnAgent::begin_episode(const Vector& obs) {
  last_obs_ = obs;
  in_episode_ = true;
}

int DqnAgent::select_action(const Vector& obs, double eps, Rng& rng) const {
  if (eps > 0.0 && rng.uniform() < eps) return rng.uniform_int(cfg_.n_actions);
  const Vector q = q_.forward(obs);
  int best = 0;
  for (int a = 1; a < cfg_.n_actions; ++a) {
    if (q(a) > q(best)) best = a;  // ties keep the lowest index
  }
  return best;
}

double DqnAgent::td_update(const std::vector<replay::Transition>& batch) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (B == 0) throw std::invalid_argument("DqnAgent::td_update: empty batch");
  Matrix X(cfg_.obs_size, B), Xn(cfg_.obs_size, B);
  Matrix mask = Matrix::Zero(cfg_.n_actions, B);
  Matrix masked_y = Matrix::Zero(cfg_.n_actions, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    X.col(b) = batch[b].obs;
    Xn.col(b) = batch[b].next_obs;
    mask(batch[b].action, b) = 1.0;
  }
  const Matrix q_target = target_.forward(Xn);
  for (Eigen::Index b = 0; b < B; ++b) {
    double y = batch[b].reward;
    if (!batch[b].done) y += cfg_.gamma * q_target.col(b).maxCoeff();
    masked_y(batch[b].action, b) = y;
  }

  nn::Tape tape;
  const int loss = masked_td_loss(tape, q_, X, mask, masked_y);
  const double loss_value = tape.scalar(loss);
  if (!std::isfinite(loss_value)) {
    throw std::runtime_error("DqnAgent::td_update: non-finite loss");
  }
  for (auto* p : q_.params()) p->zero_grad();
  tape.backward(loss);
  auto ps = q_.params();
  nn::adam_update(std::span<nn::Param* const>(ps.data(), ps.size()), adam_);
  grad_steps_ += 1;
  return loss_value;
}

void DqnAgent::sync_target() {
  for (std::size_t i = 0; i < q_.layers.size(); ++i) {
    target_.layers[i].W.value = q_.layers[i].W.value;
    target_.layers[i].b.value = q_.layers[i].b.value;
  }
}

DqnAgent::StepInfo DqnAgent::step(env::Env& e, replay::ReplayBuffer& buffer) {
  if (!in_episode_) throw std::logic_error("DqnAgent::step: call begin_episode first");
  StepInfo info;
  const int action = select_action(last_obs_, epsilon(), explore_rng_);
  const auto res = e.step(action);
  buffer.append({last_obs_, action, res.reward, res.obs, res.done, episode_});
  env_steps_ += 1;
  last_obs_ = res.obs;
  info.reward = res.reward;
  info.done = res.done;
  if (res.done) {
    episode_ += 1;
    in_episode_ = false;
  }
  if (env_steps_ > cfg_.warmup_steps) {
    info.q_loss = td_update(buffer.sample_transitions(cfg_.batch_size, sample_rng_));
    info.trained = true;
    if (grad_steps_ % cfg_.sync_interval == 0) sync_target();
  }
  return info;
}

}  // namespace wd::agent
