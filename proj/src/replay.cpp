#include "pdsan/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace pdsan {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : state_dim_(state_dim), action_dim_(action_dim), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::grow_to(std::size_t n) {
  const auto cols = static_cast<Eigen::Index>(n);
  s_.conservativeResize(state_dim_, cols);
  a_.conservativeResize(action_dim_, cols);
  s_next_.conservativeResize(state_dim_, cols);
  r_.conservativeResize(cols);
  done_.conservativeResize(cols);
  truncated_.conservativeResize(cols);
}

void ReplayBuffer::add(const Transition& t) {
  if (t.s.size() != state_dim_ || t.s_next.size() != state_dim_ || t.a.size() != action_dim_) {
    throw std::invalid_argument("replay buffer: transition shape mismatch");
  }
  if (next_ >= static_cast<std::size_t>(s_.cols())) {
    const std::size_t want = std::min(capacity_, std::max<std::size_t>(1024, 2 * static_cast<std::size_t>(s_.cols())));
    grow_to(want);
  }
  const auto k = static_cast<Eigen::Index>(next_);
  s_.col(k) = t.s;
  a_.col(k) = t.a;
  s_next_.col(k) = t.s_next;
  r_[k] = t.r;
  done_[k] = t.done ? 1.0 : 0.0;
  truncated_[k] = t.truncated ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw std::out_of_range("replay buffer slot out of range");
  const auto k = static_cast<Eigen::Index>(slot);
  return {s_.col(k), a_.col(k), r_[k], s_next_.col(k), done_[k] != 0.0, truncated_[k] != 0.0};
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Batch b{Matrix(state_dim_, n), Matrix(action_dim_, n), RowVector(n), Matrix(state_dim_, n), RowVector(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t slot = slots[static_cast<std::size_t>(j)];
    if (slot >= size_) throw std::out_of_range("replay buffer slot out of range");
    const auto k = static_cast<Eigen::Index>(slot);
    b.states.col(j) = s_.col(k);
    b.actions.col(j) = a_.col(k);
    b.rewards[j] = r_[k];
    b.next_states.col(j) = s_next_.col(k);
    b.done[j] = done_[k];
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("replay buffer is empty");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = rng.index(size_);
  return gather(slots);
}

}  // namespace pdsan
