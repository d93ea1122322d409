#include "wd/world_model.hpp"

#include <cmath>
#include <stdexcept>

namespace wd::wm {

WorldModel::WorldModel(WorldModelConfig cfg, Rng& init_rng)
    : cfg_(cfg),
      embed_("wm.embed", cfg.hidden_size, cfg.obs_size, init_rng),
      gru_("wm.gru", cfg.latent_size, cfg.hidden_size + cfg.n_actions, init_rng),
      prior1_("wm.prior1", cfg.hidden_size, cfg.latent_size + cfg.n_actions, init_rng),
      prior2_("wm.prior2", cfg.latent_size, cfg.hidden_size, init_rng),
      reward1_("wm.reward1", cfg.hidden_size, cfg.latent_size + cfg.n_actions, init_rng),
      reward2_("wm.reward2", 1, cfg.hidden_size, init_rng),
      dec1_("wm.dec1", cfg.hidden_size, cfg.latent_size, init_rng),
      dec2_("wm.dec2", cfg.obs_size, cfg.hidden_size, init_rng) {
  adam_.lr = cfg.lr;
}

std::vector<nn::Param*> WorldModel::params() {
  std::vector<nn::Param*> out;
  for (auto* p : embed_.params()) out.push_back(p);
  for (auto* p : gru_.params()) out.push_back(p);
  for (auto* p : prior1_.params()) out.push_back(p);
  for (auto* p : prior2_.params()) out.push_back(p);
  for (auto* p : reward1_.params()) out.push_back(p);
  for (auto* p : reward2_.params()) out.push_back(p);
  for (auto* p : dec1_.params()) out.push_back(p);
  for (auto* p : dec2_.params()) out.push_back(p);
  return out;
}

Matrix WorldModel::onehot(const std::vector<int>& actions) const {
  Matrix out = Matrix::Zero(cfg_.n_actions, static_cast<Eigen::Index>(actions.size()));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= cfg_.n_actions) {
      throw std::invalid_argument("WorldModel: invalid action index");
    }
    out(actions[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return out;
}

Vector WorldModel::encode_step(const Vector& z_prev, int a_prev, const Vector& x) const {
  if (z_prev.size() != cfg_.latent_size || x.size() != cfg_.obs_size) {
    throw std::invalid_argument("encode_step: dimension mismatch");
  }
  Vector gin(cfg_.hidden_size + cfg_.n_actions);
  gin.head(cfg_.hidden_size) = Vector(embed_.forward(x).array().tanh().matrix());
  gin.tail(cfg_.n_actions) = onehot({a_prev}).col(0);
  return gru_.step(z_prev, gin);
}

Matrix WorldModel::predict_next(const Matrix& Z, const Matrix& actions_onehot) const {
  Matrix in(cfg_.latent_size + cfg_.n_actions, Z.cols());
  in << Z, actions_onehot;
  return prior2_.forward(Matrix(prior1_.forward(in).array().tanh().matrix())).array().tanh().matrix();
}

Vector WorldModel::predict_next(const Vector& z, int action) const {
  return predict_next(Matrix(z), onehot({action})).col(0);
}

Eigen::RowVectorXd WorldModel::predict_reward(const Matrix& Z, const Matrix& actions_onehot) const {
  Matrix in(cfg_.latent_size + cfg_.n_actions, Z.cols());
  in << Z, actions_onehot;
  return reward2_.forward(Matrix(reward1_.forward(in).array().tanh().matrix())).row(0);
}

double WorldModel::predict_reward(const Vector& z, int action) const {
  return predict_reward(Matrix(z), onehot({action}))(0);
}

Vector WorldModel::decode(const Vector& z) const {
  return dec2_.forward(Vector(dec1_.forward(z).array().tanh().matrix()));
}

WorldModel::LossNodes WorldModel::build_training_loss(nn::Tape& tape,
                                                      const replay::SequenceBatch& batch,
                                                      std::vector<int>* posterior_nodes) {
  const int L = batch.seq_len;
  const auto B = static_cast<Eigen::Index>(batch.sequences.size());
  if (L < 1 || B < 1) throw std::invalid_argument("train_batch: empty batch");

  // Per-step data matrices across the batch.
  std::vector<Matrix> X(L), Aprev(L), At(L), R(L);
  for (int t = 0; t < L; ++t) {
    Matrix xs(cfg_.obs_size, B);
    std::vector<int> aprev(B), at(B);
    Matrix r(1, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const replay::Transition& tr = *batch.sequences[b][t];
      if (tr.obs.size() != cfg_.obs_size) throw std::invalid_argument("train_batch: obs size mismatch");
      xs.col(b) = tr.obs;
      at[b] = tr.action;
      aprev[b] = t == 0 ? 0 : batch.sequences[b][t - 1]->action;
      r(0, b) = tr.reward;
    }
    X[t] = std::move(xs);
    Aprev[t] = onehot(aprev);
    At[t] = onehot(at);
    R[t] = std::move(r);
  }

  int z = tape.input(Matrix::Zero(cfg_.latent_size, B));
  int rec_sum = -1, rew_sum = -1, cons_sum = -1;
  int prev_z = -1, prev_a = -1;
  for (int t = 0; t < L; ++t) {
    const int emb = tape.tanh_op(tape.dense(embed_, tape.input(X[t])));
    const int gin = tape.concat_rows(emb, tape.input(Aprev[t]));
    z = tape.gru(gru_, z, gin);
    if (posterior_nodes) posterior_nodes->push_back(z);

    // Reconstruction of the current observation from the posterior latent.
    const int dec = tape.dense(dec2_, tape.tanh_op(tape.dense(dec1_, z)));
    const int rec = tape.sum_sq(tape.sub(dec, tape.input(X[t])));
    rec_sum = rec_sum < 0 ? rec : tape.add(rec_sum, rec);

    // Reward of the action taken from this latent.
    const int rin = tape.concat_rows(z, tape.input(At[t]));
    const int rhat = tape.dense(reward2_, tape.tanh_op(tape.dense(reward1_, rin)));
    const int rew = tape.sum_sq(tape.sub(rhat, tape.input(R[t])));
    rew_sum = rew_sum < 0 ? rew : tape.add(rew_sum, rew);

    // Prior chases the next posterior (stop-gradient on the target).
    if (t > 0) {
      const int pin = tape.concat_rows(prev_z, prev_a);
      const int pred = tape.tanh_op(tape.dense(prior2_, tape.tanh_op(tape.dense(prior1_, pin))));
      const int cons = tape.sum_sq(tape.sub(pred, tape.stop_gradient(z)));
      cons_sum = cons_sum < 0 ? cons : tape.add(cons_sum, cons);
    }
    prev_z = z;
    prev_a = tape.input(At[t]);
  }

  const double nb = static_cast<double>(B);
  LossNodes nodes;
  nodes.reconstruction = tape.affine(rec_sum, 1.0 / (L * nb * cfg_.obs_size), 0.0);
  nodes.reward = tape.affine(rew_sum, 1.0 / (L * nb), 0.0);
  nodes.consistency =
      L > 1 ? tape.affine(cons_sum, 1.0 / ((L - 1) * nb * cfg_.latent_size), 0.0) : -1;
  const int cons_term = nodes.consistency >= 0 ? tape.affine(nodes.consistency, cfg_.lambda_cons, 0.0)
                                               : tape.input(Matrix::Zero(1, 1));
  nodes.total = tape.add(tape.add(tape.affine(nodes.reconstruction, cfg_.lambda_rec, 0.0),
                                  tape.affine(nodes.reward, cfg_.lambda_rew, 0.0)),
                         cons_term);
  return nodes;
}

WorldModel::TrainResult WorldModel::train_batch(const replay::SequenceBatch& batch) {
  nn::Tape tape;
  std::vector<int> post_nodes;
  const LossNodes nodes = build_training_loss(tape, batch, &post_nodes);

  TrainResult out;
  out.losses.reconstruction = tape.scalar(nodes.reconstruction);
  out.losses.reward = tape.scalar(nodes.reward);
  out.losses.consistency = nodes.consistency >= 0 ? tape.scalar(nodes.consistency) : 0.0;
  out.losses.total = tape.scalar(nodes.total);
  if (!std::isfinite(out.losses.total)) {
    throw std::runtime_error("WorldModel::train_batch: non-finite loss");
  }

  for (auto* p : params()) p->zero_grad();
  tape.backward(nodes.total);
  auto ps = params();
  nn::adam_update(std::span<nn::Param* const>(ps.data(), ps.size()), adam_);

  out.posterior.reserve(post_nodes.size());
  for (int id : post_nodes) out.posterior.push_back(tape.value(id));
  return out;
}

std::vector<ImaginedStep> WorldModel::imagine(const Vector& z0,
                                              const std::function<int(const Vector&)>& action_rule,
                                              int horizon) const {
  if (horizon < 1) throw std::invalid_argument("imagine: horizon must be >= 1");
  std::vector<ImaginedStep> out;
  out.reserve(horizon);
  Vector z = z0;
  for (int k = 0; k < horizon; ++k) {
    ImaginedStep s;
    s.z = z;
    s.action = action_rule(z);
    s.reward = predict_reward(z, s.action);
    out.push_back(s);
    z = predict_next(z, s.action);
  }
  return out;
}

}  // namespace wd::wm
