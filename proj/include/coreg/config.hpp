#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coreg/augment.hpp"

namespace coreg {

enum class Variant {
  Full,
  NoCoPL,    // each net pseudo-labels from its own predictions
  SupCont,   // positives by pseudo-label regardless of confidence
  NoProto,   // prototype alignment disabled
  NoU,       // unlabeled split dropped from training
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct CoRegConfig {
  int warm_epochs = 10;
  int total_epochs = 40;
  int batch_size = 128;

  int weak_views = 2;          // K
  double sharpen_t = 0.5;      // T
  double proto_t = 0.5;        // T'
  double contrast_t = 0.07;    // T''
  double proto_gamma = 0.99;   // prototype momentum
  double beta1 = 0.5;          // prototype loss weight
  double beta2 = 0.3;          // contrastive loss weight
  double w_threshold = 0.5;
  double mixup_alpha = 4.0;

  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool cosine_lr = false;
  double ema_m = 0.99;

  std::vector<int> hidden = {64, 64};
  int proj_dim = 16;
  std::size_t queue_capacity = 1024;

  augment::AugmentPolicy augment;
  Variant variant = Variant::Full;
  std::uint64_t seed = 1;

  void validate() const;
  // Learning rate at a given epoch (constant, or cosine-decayed over the
  // co-training phase when cosine_lr is set).
  double lr_at(int epoch) const;
};

CoRegConfig ablation_variant(const CoRegConfig& cfg, Variant variant);
CoRegConfig ablation_variant(const CoRegConfig& cfg, const std::string& variant_name);

}  // namespace coreg
