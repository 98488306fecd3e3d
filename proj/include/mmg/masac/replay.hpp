#pragma once

#include <stdexcept>
#include <vector>

#include "mmg/util/rng.hpp"

namespace mmg::masac {

/// One joint step of all agents: observations, post-scaling actions in
/// environment units, rewards and successor observations.
struct JointTransition {
  std::vector<std::vector<double>> x;       // [agent][obs]
  std::vector<std::vector<double>> a;       // [agent][action], env units
  std::vector<double> r;                    // [agent]
  std::vector<std::vector<double>> x_next;  // [agent][obs]
  bool done = false;
};

/// Bounded FIFO store with uniform with-replacement sampling.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
    ring_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }

  void push(JointTransition t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[write_] = std::move(t);  // overwrite the oldest entry
      write_ = (write_ + 1) % capacity_;
    }
  }

  /// i-th stored transition, oldest first.
  const JointTransition& at(std::size_t i) const {
    if (i >= ring_.size()) throw std::out_of_range("ReplayBuffer::at");
    if (ring_.size() < capacity_) return ring_[i];
    return ring_[(write_ + i) % capacity_];
  }

  /// Uniform with replacement, so batch_n may exceed size(); only an empty
  /// buffer is an error. Training gates updates on size() >= batch_n anyway.
  std::vector<const JointTransition*> sample(std::size_t batch_n, util::Rng& rng) const {
    if (ring_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
    std::vector<const JointTransition*> batch(batch_n);
    for (auto& p : batch) p = &ring_[rng.uniform_below(ring_.size())];
    return batch;
  }

private:
  std::size_t capacity_;
  std::vector<JointTransition> ring_;
  std::size_t write_ = 0;
};

}  // namespace mmg::masac
