#pragma once

#include <cstddef>
#include <vector>

#include "td3sched/domain.hpp"
#include "td3sched/random.hpp"

namespace td3sched {

inline constexpr std::size_t kDefaultReplayCapacity = 100000;

// Bounded FIFO of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = kDefaultReplayCapacity);

  void push(Transition t);

  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;

  // Index 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  std::size_t size() const noexcept { return storage_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return storage_.empty(); }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // oldest entry once full
};

}  // namespace td3sched
