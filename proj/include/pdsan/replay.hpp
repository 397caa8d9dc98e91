#pragma once

#include "pdsan/parameters.hpp"
#include "pdsan/rng.hpp"

#include <cstddef>

namespace pdsan {

struct Transition {
  Vector s;
  Vector a;  // actor space, [-1, 1]^m
  double r = 0.0;
  Vector s_next;
  bool done = false;
  bool truncated = false;
};

/// Column-batched sample; `done` holds 1.0 for true terminals.
struct Batch {
  Matrix states;
  Matrix actions;
  RowVector rewards;
  Matrix next_states;
  RowVector done;

  Eigen::Index size() const { return states.cols(); }
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(int state_dim, int action_dim, std::size_t capacity);

  void add(const Transition& t);
  Batch sample(std::size_t n, Rng& rng) const;
  /// Gathers the given slots (oldest-first indexing is not implied).
  Batch gather(const std::vector<std::size_t>& slots) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  Transition at(std::size_t slot) const;

 private:
  void grow_to(std::size_t n);

  int state_dim_;
  int action_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  // Storage grows on demand up to capacity (column per slot).
  Matrix s_, a_, s_next_;
  RowVector r_, done_, truncated_;
};

}  // namespace pdsan
