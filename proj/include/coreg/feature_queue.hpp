#pragma once

#include <cstddef>
#include <vector>

#include "coreg/common.hpp"

namespace coreg::fqueue {

struct QueueEntry {
  Vector embedding;  // unit-norm, projection-space
  int label = -1;    // argmax of the sharpened pseudo-label at enqueue time
  bool confident = false;
};

enum class SelectMode {
  NoiseTolerant,  // honor the confident flags
  Supervised,     // positives by label regardless of confidence
};

// Fixed-capacity FIFO of momentum-encoder embeddings; evicts strictly oldest-first.
class FeatureQueue {
 public:
  explicit FeatureQueue(std::size_t capacity);

  void enqueue(const Vector& embedding, int label, bool confident);
  void enqueue_batch(const Matrix& embeddings, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& confident_flags);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

  // Entries in push order, oldest first.
  std::vector<QueueEntry> snapshot() const;
  const QueueEntry& at(std::size_t i) const;  // i = 0 is oldest

  struct Selection {
    std::vector<Vector> positives;
    std::vector<Vector> negatives;
  };

  // Confident anchor: positives are confident same-label entries, negatives any
  // different-label entry. Unconfident anchor: no positives (the caller falls
  // back to the anchor's own momentum view), negatives are confident
  // different-label entries. Supervised mode ignores all confidence flags.
  Selection select_pos_neg(int anchor_label, bool anchor_confident,
                           SelectMode mode = SelectMode::NoiseTolerant) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest entry
  std::vector<QueueEntry> entries_;
};

}  // namespace coreg::fqueue
