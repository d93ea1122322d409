#pragma once

#include "wd/nn.hpp"

namespace wd::agent {

using nn::Matrix;
using nn::Vector;

// Linear exploration schedule over environment steps.
struct EpsSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 20000;

  double at(long env_steps) const {
    if (env_steps >= decay_steps) return end;
    const double f = static_cast<double>(env_steps) / static_cast<double>(decay_steps);
    return start + (end - start) * f;
  }
};

// Mean squared TD error over chosen actions: builds Q(X), masks it to the
// taken action per column and regresses against the masked targets.
// Returns the loss node. mask is one-hot per column; masked_targets carries
// the TD target in the taken-action row and zero elsewhere.
inline int masked_td_loss(nn::Tape& tape, nn::Mlp& q, const nn::Matrix& inputs,
                          const nn::Matrix& mask, const nn::Matrix& masked_targets) {
  const int q_out = q.build(tape, tape.input(inputs));
  const int masked = tape.mul(q_out, tape.input(mask));
  const int diff = tape.sub(masked, tape.input(masked_targets));
  return tape.affine(tape.sum_sq(diff), 1.0 / static_cast<double>(inputs.cols()), 0.0);
}

}  // namespace wd::agent
