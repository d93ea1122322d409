#include <doctest.h>

#include <cmath>
#include <vector>

#include "wd/env.hpp"
#include "wd/nn.hpp"
#include "wd/replay.hpp"
#include "wd/rng.hpp"
#include "wd/world_model.hpp"

using namespace wd;
using wm::WorldModel;
using wm::WorldModelConfig;

namespace {

WorldModelConfig tiny_config() {
  WorldModelConfig cfg;
  cfg.obs_size = 6;
  cfg.latent_size = 4;
  cfg.hidden_size = 8;
  return cfg;
}

// A short synthetic dataset: obs follows a noiseless linear recurrence so the
// model has something learnable; rewards depend on the action taken.
replay::ReplayBuffer synthetic_buffer(const WorldModelConfig& cfg, int n_episodes, int ep_len,
                                      Rng& rng) {
  replay::ReplayBuffer buf;
  for (int e = 0; e < n_episodes; ++e) {
    wm::Vector x(cfg.obs_size);
    for (int i = 0; i < cfg.obs_size; ++i) x(i) = rng.uniform(0.0, 1.0);
    for (int t = 0; t < ep_len; ++t) {
      replay::Transition tr;
      tr.obs = x;
      tr.action = rng.uniform_int(cfg.n_actions);
      wm::Vector nx = 0.9 * x;
      nx(tr.action % cfg.obs_size) += 0.05;
      tr.reward = 0.1 * tr.action + x.sum() / cfg.obs_size;
      tr.next_obs = nx;
      tr.done = (t == ep_len - 1);
      tr.episode = e;
      buf.append(std::move(tr));
      x = nx;
    }
  }
  return buf;
}

}  // namespace

TEST_CASE("shapes, boundedness, and determinism of the heads") {
  WorldModelConfig cfg = tiny_config();
  Rng r1(5), r2(5);
  WorldModel a(cfg, r1), b(cfg, r2);

  Rng probe(9);
  wm::Vector z(cfg.latent_size), x(cfg.obs_size);
  for (int i = 0; i < cfg.latent_size; ++i) z(i) = probe.uniform(-1.0, 1.0);
  for (int i = 0; i < cfg.obs_size; ++i) x(i) = probe.uniform(0.0, 1.0);

  const auto z1 = a.encode_step(z, 2, x);
  CHECK(z1.size() == cfg.latent_size);
  CHECK(z1.lpNorm<Eigen::Infinity>() <= 1.0);  // GRU output stays in [-1, 1]
  CHECK((z1 - b.encode_step(z, 2, x)).lpNorm<Eigen::Infinity>() == 0.0);

  const auto zn = a.predict_next(z, 1);
  CHECK(zn.size() == cfg.latent_size);
  CHECK(zn.lpNorm<Eigen::Infinity>() < 1.0);  // tanh output head

  CHECK(a.decode(z).size() == cfg.obs_size);
  CHECK(a.predict_reward(z, 0) == b.predict_reward(z, 0));
}

TEST_CASE("batched heads agree with the vector heads column by column") {
  WorldModelConfig cfg = tiny_config();
  Rng init(3);
  WorldModel m(cfg, init);

  const int B = 7;
  Rng probe(31);
  wm::Matrix Z(cfg.latent_size, B);
  std::vector<int> actions(B);
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < cfg.latent_size; ++i) Z(i, b) = probe.uniform(-1.0, 1.0);
    actions[b] = probe.uniform_int(cfg.n_actions);
  }
  const wm::Matrix A = m.onehot(actions);
  REQUIRE(A.rows() == cfg.n_actions);
  REQUIRE(A.cols() == B);

  const wm::Matrix Zn = m.predict_next(Z, A);
  const Eigen::RowVectorXd R = m.predict_reward(Z, A);
  for (int b = 0; b < B; ++b) {
    const wm::Vector zn = m.predict_next(Z.col(b), actions[b]);
    CHECK((Zn.col(b) - zn).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(R(b) == doctest::Approx(m.predict_reward(Z.col(b), actions[b])).epsilon(1e-12));
  }
}

TEST_CASE("onehot layout") {
  WorldModelConfig cfg = tiny_config();
  Rng init(1);
  WorldModel m(cfg, init);
  const wm::Matrix A = m.onehot({0, 4, 2});
  CHECK(A.sum() == 3.0);
  CHECK(A(0, 0) == 1.0);
  CHECK(A(4, 1) == 1.0);
  CHECK(A(2, 2) == 1.0);
}

TEST_CASE("training-loss gradients pass a finite-difference check") {
  WorldModelConfig cfg = tiny_config();
  cfg.hidden_size = 5;
  cfg.latent_size = 3;
  Rng init(17);
  WorldModel m(cfg, init);

  Rng data_rng(23);
  replay::ReplayBuffer buf = synthetic_buffer(cfg, 2, 6, data_rng);
  Rng sample_rng(2);
  const auto batch = buf.sample_sequences(3, 4, sample_rng);

  auto params = m.params();

  // Reconstruction + reward: differentiable end to end, check every param.
  auto smooth_fn = [&](bool with_grad) {
    nn::Tape tape;
    const auto nodes = m.build_training_loss(tape, batch);
    const int node = tape.add(nodes.reconstruction, nodes.reward);
    const double value = tape.value(node)(0, 0);
    if (with_grad) {
      for (auto* p : params) p->zero_grad();
      tape.backward(node);
    }
    return value;
  };
  CHECK(nn::finite_diff_check(smooth_fn, params, 1e-5) < 1e-4);

  // The consistency target sits behind a stop-gradient, so a numeric probe
  // only agrees with the analytic gradient for parameters the target does
  // not depend on: the prior head's.
  std::vector<nn::Param*> prior_params;
  for (auto* p : params) {
    if (p->name.rfind("wm.prior", 0) == 0) prior_params.push_back(p);
  }
  REQUIRE(prior_params.size() == 4);
  auto cons_fn = [&](bool with_grad) {
    nn::Tape tape;
    const auto nodes = m.build_training_loss(tape, batch);
    const double value = tape.value(nodes.consistency)(0, 0);
    if (with_grad) {
      for (auto* p : params) p->zero_grad();
      tape.backward(nodes.consistency);
    }
    return value;
  };
  CHECK(nn::finite_diff_check(cons_fn, prior_params, 1e-5) < 1e-4);
}

TEST_CASE("train_batch reduces the loss on a fixed batch") {
  WorldModelConfig cfg = tiny_config();
  Rng init(29);
  WorldModel m(cfg, init);

  Rng data_rng(41);
  replay::ReplayBuffer buf = synthetic_buffer(cfg, 4, 12, data_rng);
  Rng sample_rng(6);
  const auto batch = buf.sample_sequences(8, 5, sample_rng);

  const double first = m.train_batch(batch).losses.total;
  double last = first;
  for (int i = 0; i < 200; ++i) last = m.train_batch(batch).losses.total;
  CHECK(last < 0.5 * first);
  CHECK(std::isfinite(last));
}

TEST_CASE("loss components are non-negative and combine with the pinned weights") {
  WorldModelConfig cfg = tiny_config();
  Rng init(7);
  WorldModel m(cfg, init);
  Rng data_rng(8);
  replay::ReplayBuffer buf = synthetic_buffer(cfg, 2, 8, data_rng);
  Rng sample_rng(9);
  const auto batch = buf.sample_sequences(4, 4, sample_rng);

  const auto res = m.train_batch(batch);
  CHECK(res.losses.reconstruction >= 0.0);
  CHECK(res.losses.reward >= 0.0);
  CHECK(res.losses.consistency >= 0.0);
  CHECK(res.losses.total == doctest::Approx(cfg.lambda_rec * res.losses.reconstruction +
                                            cfg.lambda_rew * res.losses.reward +
                                            cfg.lambda_cons * res.losses.consistency)
                                .epsilon(1e-9));
  CHECK(res.posterior.size() == 4);
  CHECK(res.posterior[0].rows() == cfg.latent_size);
  CHECK(res.posterior[0].cols() == 4);
}

TEST_CASE("imagine: horizon, action rule, and prior consistency") {
  WorldModelConfig cfg = tiny_config();
  Rng init(13);
  WorldModel m(cfg, init);

  wm::Vector z0 = wm::Vector::Zero(cfg.latent_size);
  int calls = 0;
  auto rule = [&](const wm::Vector& z) {
    (void)z;
    return calls++ % cfg.n_actions;
  };
  const auto traj = m.imagine(z0, rule, 5);
  REQUIRE(traj.size() == 5);
  wm::Vector z = z0;
  for (int t = 0; t < 5; ++t) {
    CHECK(traj[t].action == t % cfg.n_actions);
    CHECK((traj[t].z - z).lpNorm<Eigen::Infinity>() == 0.0);  // latent the action was taken from
    CHECK(traj[t].reward == doctest::Approx(m.predict_reward(z, traj[t].action)).epsilon(1e-12));
    z = m.predict_next(z, traj[t].action);
  }
}

TEST_CASE("world model learns one-step prediction on the real environment") {
  // Small env, scripted random policy: after a few hundred updates the
  // model's one-step latent rollout should reconstruct the next observation
  // much better than a constant-mean predictor.
  env::EnvConfig ecfg;
  ecfg.grid_w = 16;
  ecfg.grid_h = 16;
  ecfg.n_users = 3;
  ecfg.horizon = 20;
  env::Env e(ecfg, 71);

  WorldModelConfig cfg;
  cfg.obs_size = ecfg.obs_size();
  cfg.latent_size = 16;
  cfg.hidden_size = 32;
  Rng init(101);
  WorldModel m(cfg, init);

  replay::ReplayBuffer buf;
  Rng act_rng(55);
  for (int ep = 0; ep < 30; ++ep) {
    wm::Vector obs = e.reset();
    bool done = false;
    while (!done) {
      const int a = act_rng.uniform_int(env::kNumActions);
      const auto r = e.step(a);
      buf.append({obs, a, r.reward, r.obs, r.done, ep});
      obs = r.obs;
      done = r.done;
    }
  }

  Rng sample_rng(77);
  double loss = 0.0;
  for (int i = 0; i < 300; ++i) {
    loss = m.train_batch(buf.sample_sequences(16, 8, sample_rng)).losses.total;
  }
  CHECK(std::isfinite(loss));

  // constant-mean baseline over everything stored so far
  wm::Vector mean_obs = wm::Vector::Zero(cfg.obs_size);
  for (std::size_t i = 0; i < buf.size(); ++i) mean_obs += buf[i].next_obs;
  mean_obs /= static_cast<double>(buf.size());

  // evaluate one-step observation prediction along a fresh episode
  wm::Vector obs = e.reset();
  wm::Vector z = m.encode_step(wm::Vector::Zero(cfg.latent_size), env::kStay, obs);
  double model_err = 0.0, base_err = 0.0;
  bool done = false;
  while (!done) {
    const int a = act_rng.uniform_int(env::kNumActions);
    const auto r = e.step(a);
    const wm::Vector pred = m.decode(m.predict_next(z, a));
    model_err += (pred - r.obs).squaredNorm();
    base_err += (mean_obs - r.obs).squaredNorm();
    z = m.encode_step(z, a, r.obs);
    obs = r.obs;
    done = r.done;
  }
  CHECK(model_err < base_err);
}
