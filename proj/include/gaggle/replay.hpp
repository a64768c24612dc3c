#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/encoding.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

struct Transition {
  StateTensor s;
  int action = 0;  // Action index
  double reward = 0.0;
  StateTensor s_next;
  bool terminal = false;
};

// Fixed-capacity ring with strict FIFO eviction and uniform sampling with
// replacement over the current contents.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
    store_.reserve(capacity);
  }

  void push(Transition t) {
    if (store_.size() < capacity_) {
      store_.push_back(std::move(t));
    } else {
      store_[next_] = std::move(t);
      next_ = (next_ + 1) % capacity_;
    }
    ++inserted_;
  }

  size_t size() const { return store_.size(); }
  size_t capacity() const { return capacity_; }
  size_t inserted() const { return inserted_; }

  // Oldest-first logical indexing (0 = oldest surviving transition).
  const Transition& at(size_t i) const {
    expects(i < store_.size(), "ReplayBuffer::at: index out of range");
    if (store_.size() < capacity_) return store_[i];
    return store_[(next_ + i) % capacity_];
  }

  // Uniform with replacement; empty optional while the buffer holds fewer
  // than batch_size transitions (caller skips the training step).
  std::optional<std::vector<const Transition*>> sample(size_t batch_size, SplitMix64& rng) const {
    if (store_.size() < batch_size) return std::nullopt;
    std::vector<const Transition*> out;
    out.reserve(batch_size);
    for (size_t i = 0; i < batch_size; ++i)
      out.push_back(&store_[rng.bounded(static_cast<uint32_t>(store_.size()))]);
    return out;
  }

 private:
  size_t capacity_;
  size_t next_ = 0;  // eviction cursor once full
  size_t inserted_ = 0;
  std::vector<Transition> store_;
};

}  // namespace gaggle
