#include "wd/dreamer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wd::agent {

DreamerAgent::DreamerAgent(DreamerConfig cfg, Rng init_rng, Rng explore_rng, Rng sample_rng)
    : cfg_(cfg),
      wm_(cfg.world_model, init_rng),
      q_("q", {cfg.world_model.latent_size, 128, cfg.world_model.n_actions}, init_rng),
      target_("q_target", {cfg.world_model.latent_size, 128, cfg.world_model.n_actions}, init_rng),
      explore_rng_(explore_rng),
      sample_rng_(sample_rng),
      z_(Vector::Zero(cfg.world_model.latent_size)),
      last_obs_(Vector::Zero(cfg.world_model.obs_size)) {
  q_adam_.lr = cfg_.q_lr;
  sync_target();
}

void DreamerAgent::begin_episode(const Vector& obs) {
  z_ = wm_.encode_step(Vector::Zero(cfg_.world_model.latent_size), env::kStay, obs);
  last_obs_ = obs;
  in_episode_ = true;
}

std::pair<int, double> DreamerAgent::greedy_action(const Vector& z) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_reward = 0.0;
  for (int a = 0; a < cfg_.world_model.n_actions; ++a) {
    const double r_hat = wm_.predict_reward(z, a);
    const Vector z_next = wm_.predict_next(z, a);
    const double q_max = q_.forward(z_next).maxCoeff();
    const double score = r_hat + cfg_.gamma * q_max;
    if (score > best_score) {  // ties keep the lowest action index
      best_score = score;
      best = a;
      best_reward = r_hat;
    }
  }
  return {best, best_reward};
}

int DreamerAgent::select_action(const Vector& z, double eps, Rng& rng) const {
  if (eps > 0.0 && rng.uniform() < eps) return rng.uniform_int(cfg_.world_model.n_actions);
  return greedy_action(z).first;
}

double DreamerAgent::td_update(const Matrix& starts) {
  const int n_actions = cfg_.world_model.n_actions;
  const int latent = cfg_.world_model.latent_size;
  const auto B = starts.cols();
  const int H = cfg_.horizon;

  Matrix z_all(latent, H * B);
  Matrix mask = Matrix::Zero(n_actions, H * B);
  Matrix masked_y = Matrix::Zero(n_actions, H * B);

  Matrix z = starts;
  for (int k = 0; k < H; ++k) {
    // Greedy (eps = 0) rollout policy under the online Q, batched per action.
    std::vector<Matrix> next_per_action(n_actions);
    std::vector<Eigen::RowVectorXd> reward_per_action(n_actions);
    Matrix scores(n_actions, B);
    for (int a = 0; a < n_actions; ++a) {
      std::vector<int> acts(B, a);
      const Matrix oh = wm_.onehot(acts);
      reward_per_action[a] = wm_.predict_reward(z, oh);
      next_per_action[a] = wm_.predict_next(z, oh);
      const Matrix q_next = q_.forward(next_per_action[a]);
      scores.row(a) = reward_per_action[a] + cfg_.gamma * q_next.colwise().maxCoeff();
    }

    Matrix z_next(latent, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      int a_star = 0;
      for (int a = 1; a < n_actions; ++a) {
        if (scores(a, b) > scores(a_star, b)) a_star = a;
      }
      z_next.col(b) = next_per_action[a_star].col(b);
      const Eigen::Index col = k * B + b;
      mask(a_star, col) = 1.0;
      z_all.col(col) = z.col(b);
      masked_y(a_star, col) = reward_per_action[a_star](b);
    }
    // Bootstrap from the frozen target network at the imagined next latent.
    const Matrix q_target = target_.forward(z_next);
    for (Eigen::Index b = 0; b < B; ++b) {
      const Eigen::Index col = k * B + b;
      for (int a = 0; a < n_actions; ++a) {
        if (mask(a, col) != 0.0) masked_y(a, col) += cfg_.gamma * q_target.col(b).maxCoeff();
      }
    }
    z = z_next;
  }

  nn::Tape tape;
  const int loss = masked_td_loss(tape, q_, z_all, mask, masked_y);
  const double loss_value = tape.scalar(loss);
  if (!std::isfinite(loss_value)) {
    throw std::runtime_error("DreamerAgent::td_update: non-finite loss");
  }
  for (auto* p : q_.params()) p->zero_grad();
  tape.backward(loss);
  auto ps = q_.params();
  nn::adam_update(std::span<nn::Param* const>(ps.data(), ps.size()), q_adam_);
  grad_steps_ += 1;
  return loss_value;
}

void DreamerAgent::sync_target() {
  for (std::size_t i = 0; i < q_.layers.size(); ++i) {
    target_.layers[i].W.value = q_.layers[i].W.value;
    target_.layers[i].b.value = q_.layers[i].b.value;
  }
}

DreamerAgent::StepInfo DreamerAgent::step(env::Env& e, replay::ReplayBuffer& buffer) {
  if (!in_episode_) throw std::logic_error("DreamerAgent::step: call begin_episode first");
  StepInfo info;
  const int action = select_action(z_, epsilon(), explore_rng_);
  const auto res = e.step(action);
  buffer.append({last_obs_, action, res.reward, res.obs, res.done, episode_});
  env_steps_ += 1;
  z_ = wm_.encode_step(z_, action, res.obs);
  last_obs_ = res.obs;
  info.reward = res.reward;
  info.done = res.done;
  if (res.done) {
    episode_ += 1;
    in_episode_ = false;
  }

  if (env_steps_ > cfg_.warmup_steps) {
    auto batch = buffer.sample_sequences(cfg_.batch_size, cfg_.seq_len, sample_rng_);
    auto train = wm_.train_batch(batch);
    info.wm_losses = train.losses;
    // TD start latents: one posterior latent per subsequence, uniform over t.
    Matrix starts(cfg_.world_model.latent_size, cfg_.batch_size);
    for (int b = 0; b < cfg_.batch_size; ++b) {
      const int t = sample_rng_.uniform_int(cfg_.seq_len);
      starts.col(b) = train.posterior[t].col(b);
    }
    info.q_loss = td_update(starts);
    info.trained = true;
    if (grad_steps_ % cfg_.sync_interval == 0) sync_target();
  }
  return info;
}

}  // namespace wd::agent
