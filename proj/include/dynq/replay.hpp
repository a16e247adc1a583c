#pragma once

#include <stdexcept>
#include <vector>

#include "mdp.hpp"
#include "rng.hpp"

namespace dynq {

/// Fixed-capacity ring buffer of transitions. Once full, each push evicts
/// the oldest entry. Sampling is uniform with replacement over the current
/// contents.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1)
      throw std::invalid_argument("replay capacity must be at least 1");
    buffer_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return buffer_.size(); }

  void push(const Transition& t) {
    if (buffer_.size() < capacity_) {
      buffer_.push_back(t);
    } else {
      buffer_[cursor_] = t;
      cursor_ = (cursor_ + 1) % capacity_;
    }
  }

  /// Entry by storage slot, for inspection in tests.
  const Transition& at(std::size_t i) const { return buffer_.at(i); }

  /// Draws batch_size transitions uniformly with replacement into out.
  void sample(std::size_t batch_size, Rng& rng,
              std::vector<Transition>& out) const {
    if (buffer_.size() < batch_size)
      throw std::logic_error("replay memory holds fewer transitions than batch");
    out.clear();
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
      out.push_back(buffer_[static_cast<std::size_t>(
          next_index(rng, static_cast<int>(buffer_.size())))]);
  }

  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const {
    std::vector<Transition> out;
    sample(batch_size, rng, out);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> buffer_;
};

}  // namespace dynq
