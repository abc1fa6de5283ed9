#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coreg/common.hpp"

namespace coreg::datagen {

struct LabeledDataset {
  Matrix features;                       // N x D
  std::vector<int> labels;               // in [0, C)
  int num_classes = 0;
  std::vector<std::string> class_names;  // exactly C entries

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  void validate() const;
};

struct PartialDataset {
  LabeledDataset base;
  IntMatrix candidates;            // N x C, 0/1, every row has >= 1 set
  std::vector<std::uint8_t> fewshot_mask;  // rows pinned to the ground-truth singleton

  Eigen::Index size() const { return base.size(); }
  int num_classes() const { return base.num_classes; }
  bool is_fewshot(Eigen::Index i) const { return !fewshot_mask.empty() && fewshot_mask[i] != 0; }
  void validate() const;
};

struct PartialStats {
  double partial_acc = 0.0;  // fraction of rows whose true label is a candidate
  double avg_num = 0.0;      // mean candidate-set size
};

// Gaussian clusters with centers on a simplex (C <= dim) or circle layout.
LabeledDataset make_blobs(int n_per_class, int num_classes, int dim, double spread,
                          std::uint64_t seed);

// Concentric rings in 2-D, radius c+1 for class c.
LabeledDataset make_rings(int n_per_class, int num_classes, double noise, std::uint64_t seed);

// Flips each negative label to a false-positive candidate with probability q.
// The ground-truth label is always a candidate.
PartialDataset synthesize_partial(const LabeledDataset& ds, double q, std::uint64_t seed);

// For each selected row, clears the ground-truth candidate and sets one uniformly
// chosen non-candidate. All-ones rows are skipped and counted; fewshot rows are exempt.
struct NoiseReport {
  PartialDataset data;
  int skipped_full_rows = 0;
};
NoiseReport inject_noise(const PartialDataset& pd, double eta, std::uint64_t seed);

// One simulated prompt template: an affine classifier trained on a corrupted
// view (fixed coordinate dropout mask + additive train-time feature noise).
struct Annotator {
  double dropout = 0.0;      // probability each coordinate is dropped from its view
  double noise_scale = 0.0;  // stddev of additive feature noise during fitting
  std::uint64_t seed = 0;

  std::vector<std::uint8_t> mask;  // fixed per-annotator view, 1 = coordinate kept
  Matrix weights;                  // D x C
  Vector bias;                     // C
  bool fitted = false;

  void fit(const Matrix& probe_x, const std::vector<int>& probe_y, int num_classes);
  int predict(const Vector& x) const;
  double accuracy(const LabeledDataset& ds) const;
};

struct AnnotatorEnsemble {
  std::vector<Annotator> annotators;
  double probe_fraction = 0.2;
  std::uint64_t seed = 0;

  // d annotators with corruption levels derived from (seed, index).
  static AnnotatorEnsemble make(int d, double dropout, double noise_scale, std::uint64_t seed,
                                double probe_fraction = 0.2);

  bool fitted() const;
  // Trains every annotator on its own corrupted view of a probe split of ds.
  void fit(const LabeledDataset& ds);
  int size() const { return static_cast<int>(annotators.size()); }
};

// Candidate row = union of all annotators' argmax predictions. Requires a fitted ensemble.
PartialDataset ensemble_annotate(const LabeledDataset& ds, const AnnotatorEnsemble& ens);

PartialStats partial_stats(const PartialDataset& pd);

// Marks `shots` rows per class as human-verified: candidates forced to the
// ground-truth singleton and fewshot_mask set.
PartialDataset apply_fewshot(const PartialDataset& pd, int shots_per_class, std::uint64_t seed);

}  // namespace coreg::datagen
