#include "td3sched/replay_buffer.hpp"

#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("replay capacity must be > 0");
  storage_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
  t.validate();
  if (!storage_.empty()) {
    const Transition& first = storage_.front();
    if (t.state.size() != first.state.size() || t.action.services() != first.action.services()) {
      throw DimensionError("transition dimensions differ from the buffer's existing entries");
    }
  }
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
    return;
  }
  storage_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0) throw ValidationError("batch size must be > 0");
  if (storage_.size() < batch_size) {
    throw ContractViolation("cannot sample " + std::to_string(batch_size) + " from a buffer of " +
                            std::to_string(storage_.size()));
  }
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<std::size_t> idx(batch_size);
  for (std::size_t& i : idx) i = pick(rng);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size, rng)) batch.push_back(at(i));
  return batch;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw ContractViolation("replay index out of range");
  return storage_[(head_ + i) % storage_.size()];
}

}  // namespace td3sched
