#include "coreg/feature_queue.hpp"

namespace coreg::fqueue {

FeatureQueue::FeatureQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("queue capacity must be >= 1");
  entries_.reserve(capacity);
}

void FeatureQueue::enqueue(const Vector& embedding, int label, bool confident) {
  if (std::abs(embedding.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("enqueue: embedding is not unit-norm");
  if (entries_.size() < capacity_) {
    entries_.push_back(QueueEntry{embedding, label, confident});
  } else {
    entries_[head_] = QueueEntry{embedding, label, confident};
    head_ = (head_ + 1) % capacity_;
  }
}

void FeatureQueue::enqueue_batch(const Matrix& embeddings, const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& confident_flags) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (labels.size() != n || confident_flags.size() != n)
    throw std::invalid_argument("enqueue_batch: length mismatch");
  for (std::size_t i = 0; i < n; ++i)
    enqueue(embeddings.row(static_cast<Eigen::Index>(i)).transpose(), labels[i],
            confident_flags[i] != 0);
}

const QueueEntry& FeatureQueue::at(std::size_t i) const {
  if (i >= entries_.size()) throw std::out_of_range("queue index out of range");
  if (entries_.size() < capacity_) return entries_[i];
  return entries_[(head_ + i) % capacity_];
}

std::vector<QueueEntry> FeatureQueue::snapshot() const {
  std::vector<QueueEntry> out;
  out.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) out.push_back(at(i));
  return out;
}

FeatureQueue::Selection FeatureQueue::select_pos_neg(int anchor_label, bool anchor_confident,
                                                     SelectMode mode) const {
  Selection sel;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const QueueEntry& e = at(i);
    bool same = e.label == anchor_label;
    if (mode == SelectMode::Supervised) {
      (same ? sel.positives : sel.negatives).push_back(e.embedding);
      continue;
    }
    if (anchor_confident) {
      if (same && e.confident) sel.positives.push_back(e.embedding);
      if (!same) sel.negatives.push_back(e.embedding);
    } else {
      if (!same && e.confident) sel.negatives.push_back(e.embedding);
    }
  }
  return sel;
}

}  // namespace coreg::fqueue
