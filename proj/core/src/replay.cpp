#include "wd/replay.hpp"

#include <stdexcept>

namespace wd::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::append(Transition t) {
  if (data_.size() == capacity_) data_.pop_front();
  data_.push_back(std::move(t));
}

SequenceBatch ReplayBuffer::sample_sequences(int batch, int seq_len, Rng& rng) const {
  if (batch < 0 || seq_len < 1) throw std::invalid_argument("sample_sequences: bad batch/seq_len");
  // Valid starts: seq_len consecutive stored transitions from one episode.
  std::vector<std::size_t> starts;
  const std::size_t n = data_.size();
  for (std::size_t i = 0; i + seq_len <= n; ++i) {
    const long ep = data_[i].episode;
    bool ok = true;
    for (int k = 1; k < seq_len; ++k) {
      if (data_[i + k].episode != ep) {
        ok = false;
        break;
      }
    }
    if (ok) starts.push_back(i);
  }
  if (starts.empty()) throw std::runtime_error("sample_sequences: insufficient data");

  SequenceBatch out;
  out.seq_len = seq_len;
  out.sequences.reserve(batch);
  out.starts_episode.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    const std::size_t s = starts[rng.uniform_int(static_cast<int>(starts.size()))];
    std::vector<const Transition*> seq(seq_len);
    for (int k = 0; k < seq_len; ++k) seq[k] = &data_[s + k];
    out.starts_episode.push_back(s == 0 || data_[s - 1].episode != data_[s].episode);
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::vector<Transition> ReplayBuffer::sample_transitions(int batch, Rng& rng) const {
  if (batch < 0) throw std::invalid_argument("sample_transitions: bad batch");
  if (data_.empty() && batch > 0) throw std::runtime_error("sample_transitions: empty buffer");
  std::vector<Transition> out;
  out.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    out.push_back(data_[rng.uniform_int(static_cast<int>(data_.size()))]);
  }
  return out;
}

}  // namespace wd::replay
