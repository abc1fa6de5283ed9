#pragma once

#include <vector>

#include "coreg/config.hpp"
#include "coreg/datagen.hpp"
#include "coreg/losses.hpp"

namespace coreg {

// Mutable training-loop state: the two networks with their momentum copies,
// the shared prototype bank, one feature queue per network, optimizer state,
// and the augmentation policy bound to the training features.
struct TrainState {
  nn::NetworkPair pair;
  PrototypeBank bank;
  std::vector<fqueue::FeatureQueue> queues;
  nn::SgdState opt1, opt2;
  augment::AugmentPolicy policy;

  static TrainState init(const datagen::PartialDataset& data, const CoRegConfig& cfg);
  nn::SgdState& opt(int idx) { return idx == 0 ? opt1 : opt2; }
};

// Per-direction co-training statistics (direction 0: net1 teaches net2).
struct DirectionMetrics {
  int n_partial = 0;
  int n_unlabeled = 0;
  double gmm_mu1 = 0.0, gmm_mu2 = 0.0, gmm_pi = 0.0;
  double tau_div = 0.0;
  bool gmm_degenerate = false;
  double pseudo_acc = 0.0;
  int rescale_fallbacks = 0;
  int trained_samples = 0;
};

struct EpochMetrics {
  int epoch = 0;
  bool warmup = false;
  double loss_warm = 0.0;
  double loss_cr = 0.0;
  double loss_prot = 0.0;
  double loss_cont = 0.0;
  double loss_total = 0.0;
  DirectionMetrics dir[2];
  std::size_t queue_size[2] = {0, 0};
};

// Result of the co-pseudo-labeling phase for one direction.
struct PseudoLabels {
  gmm::SplitAssignment assign;  // tags, w, sharpened pseudo-label rows
  DirectionMetrics stats;
};

// Division losses with the teacher on weak views over the full set, GMM split,
// candidate rescaling / K-view averaging, fusion with the student's own K-view
// average, and sharpening. Few-shot rows are pinned Partial with w = 1 and a
// ground-truth singleton, and are excluded from the GMM fit.
PseudoLabels build_pseudo_labels(const nn::DenseNetwork& teacher,
                                 const nn::DenseNetwork& student,
                                 const datagen::PartialDataset& data, const CoRegConfig& cfg,
                                 const augment::AugmentPolicy& policy, int epoch, int direction);

// One warm-up epoch over both networks.
EpochMetrics warmup_epoch(TrainState& state, const datagen::PartialDataset& data,
                          const CoRegConfig& cfg, int epoch);

// One co-training epoch: both directions in sequence.
EpochMetrics co_train_epoch(TrainState& state, const datagen::PartialDataset& data,
                            const CoRegConfig& cfg, int epoch);

}  // namespace coreg
