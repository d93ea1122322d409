#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "wd/nn.hpp"
#include "wd/replay.hpp"
#include "wd/rng.hpp"

namespace wd::wm {

using nn::Matrix;
using nn::Vector;

struct WorldModelConfig {
  int obs_size = 37;
  int n_actions = 5;
  int latent_size = 64;
  int hidden_size = 128;
  double lr = 1e-3;
  double lambda_rec = 1.0;
  double lambda_rew = 10.0;
  double lambda_cons = 1.0;
};

struct WmLosses {
  double reconstruction = 0.0;
  double reward = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

struct ImaginedStep {
  Vector z;
  int action = 0;
  double reward = 0.0;
};

// Recurrent latent world model: posterior encoder (obs embedder + GRU),
// deterministic latent transition prior, reward head, observation decoder.
// Trained on replayed subsequences; used to roll out imagined trajectories.
class WorldModel {
 public:
  WorldModel(WorldModelConfig cfg, Rng& init_rng);

  // z_t = GRU(z_prev, [tanh(embed(x)) || one-hot(a_prev)]).
  // At an episode start pass z_prev = 0 and a_prev = Stay.
  Vector encode_step(const Vector& z_prev, int a_prev, const Vector& x) const;

  // Latent transition prior; tanh output keeps every component in (-1, 1).
  Vector predict_next(const Vector& z, int action) const;
  Matrix predict_next(const Matrix& Z, const Matrix& actions_onehot) const;

  double predict_reward(const Vector& z, int action) const;
  Eigen::RowVectorXd predict_reward(const Matrix& Z, const Matrix& actions_onehot) const;

  Vector decode(const Vector& z) const;

  struct TrainResult {
    WmLosses losses;
    // Posterior latents per unroll step; posterior[t] is latent x batch.
    std::vector<Matrix> posterior;
  };
  // One Adam step on lambda_rec*rec + lambda_rew*rew + lambda_cons*cons over
  // the batch, unrolling the posterior from z = 0 per subsequence.
  // Throws std::runtime_error on a non-finite loss.
  TrainResult train_batch(const replay::SequenceBatch& batch);

  struct LossNodes {
    int reconstruction = -1;
    int reward = -1;
    int consistency = -1;  // -1 when seq_len == 1
    int total = -1;
  };
  // Builds the training loss on a caller-provided tape without the
  // optimizer step; used by train_batch and by gradient checks.
  LossNodes build_training_loss(nn::Tape& tape, const replay::SequenceBatch& batch,
                                std::vector<int>* posterior_nodes = nullptr);

  std::vector<ImaginedStep> imagine(const Vector& z0,
                                    const std::function<int(const Vector&)>& action_rule,
                                    int horizon) const;

  std::vector<nn::Param*> params();
  const WorldModelConfig& config() const { return cfg_; }

  Matrix onehot(const std::vector<int>& actions) const;

 private:
  WorldModelConfig cfg_;
  nn::DenseLayer embed_;    // obs -> hidden, tanh
  nn::GruCell gru_;         // (hidden + |A|) -> latent
  nn::DenseLayer prior1_;   // latent + |A| -> hidden, tanh
  nn::DenseLayer prior2_;   // hidden -> latent, tanh
  nn::DenseLayer reward1_;  // latent + |A| -> hidden, tanh
  nn::DenseLayer reward2_;  // hidden -> 1
  nn::DenseLayer dec1_;     // latent -> hidden, tanh
  nn::DenseLayer dec2_;     // hidden -> obs
  nn::Adam adam_;
};

}  // namespace wd::wm
