#pragma once

#include <cstddef>
#include <deque>
#include <stdexcept>

#include "raildelay/policy.hpp"

namespace raildelay {

/// Bounded FIFO store of (features, synthetic action, weight) triples.
/// Pushing beyond capacity evicts the oldest entry first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void push(TrainingSample sample) {
    entries_.push_back(std::move(sample));
    while (entries_.size() > capacity_) entries_.pop_front();
    if (entries_.size() > capacity_) {
      throw std::logic_error("replay buffer exceeded capacity");
    }
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const TrainingSample& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::size_t capacity_;
  std::deque<TrainingSample> entries_;
};

}  // namespace raildelay
