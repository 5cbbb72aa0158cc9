#include "fggan/xbm.hpp"

#include <cmath>

namespace fggan {

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw ValueError("memory bank: capacity must be >= 1");
}

void MemoryBank::enqueue_batch(const Tensor& embeddings, const std::vector<int>& labels) {
  if (embeddings.rank() != 2 || embeddings.rows() != labels.size()) {
    throw ShapeError("memory bank: embeddings " + embeddings.shape_str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (n > capacity_) {
    throw ValueError("memory bank: batch of " + std::to_string(n) + " exceeds capacity " +
                     std::to_string(capacity_));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = embeddings.row_ptr(i);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) norm2 += row[j] * row[j];
    if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-6) {
      throw ValueError("memory bank: row " + std::to_string(i) + " is not unit-norm");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (entries_.size() == capacity_) entries_.pop_front();
    const double* row = embeddings.row_ptr(i);
    entries_.push_back({std::vector<double>(row, row + d), labels[i]});
  }
}

MemoryBank::Snapshot MemoryBank::contents() const {
  Snapshot snap;
  const std::size_t l = entries_.size();
  const std::size_t d = l == 0 ? 0 : entries_.front().embedding.size();
  snap.embeddings = Tensor({l, d});
  snap.labels.reserve(l);
  std::size_t i = 0;
  for (const Entry& e : entries_) {
    for (std::size_t j = 0; j < d; ++j) snap.embeddings.at(i, j) = e.embedding[j];
    snap.labels.push_back(e.label);
    ++i;
  }
  return snap;
}

}  // namespace fggan
