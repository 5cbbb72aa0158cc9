#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "fggan/tensor.hpp"

namespace fggan {

// Cross-batch memory: a fixed-capacity FIFO queue of real-image embeddings
// and their subclass labels. Stored rows are plain copies; nothing in here
// ever receives gradients.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  // Appends N rows, evicting the oldest entries past capacity. Rows must be
  // unit-norm and N must not exceed the capacity.
  void enqueue_batch(const Tensor& embeddings, const std::vector<int>& labels);

  // Snapshot in insertion order (oldest first). Safe to mutate.
  struct Snapshot {
    Tensor embeddings;        // [L x d]
    std::vector<int> labels;  // [L]
    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
  };
  Snapshot contents() const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::vector<double> embedding;
    int label;
  };
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

}  // namespace fggan
