#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <vector>

#include "wd/rng.hpp"

namespace wd::replay {

using Vector = Eigen::VectorXd;

struct Transition {
  Vector obs;
  int action = 0;
  double reward = 0.0;
  Vector next_obs;
  bool done = false;
  long episode = 0;
};

// B contiguous subsequences of length L; each lies entirely within one
// episode. starts_episode marks subsequences beginning at an episode's
// first stored transition.
struct SequenceBatch {
  int seq_len = 0;
  std::vector<std::vector<const Transition*>> sequences;
  std::vector<bool> starts_episode;
};

// FIFO ring of transitions with episode bookkeeping. Single writer,
// single reader, one experiment thread.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void append(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }

  // B subsequences with start offsets uniform over all valid positions.
  // Throws std::runtime_error("insufficient data") if no valid offset exists.
  SequenceBatch sample_sequences(int batch, int seq_len, Rng& rng) const;

  // B i.i.d. uniform draws with replacement. Throws on empty buffer.
  std::vector<Transition> sample_transitions(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> data_;
};

}  // namespace wd::replay
