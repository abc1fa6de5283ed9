#pragma once

#include <random>
#include <vector>

#include "coreg/common.hpp"

namespace coreg::augment {

enum class Mode { Weak, Strong };

// Vector-space analogs of image shift / cutout / rescale. Jitter bounds are
// fractions of each dimension's dataset range, so the policy must be bound to
// the training features before use.
struct AugmentPolicy {
  double weak_jitter_frac = 0.125;
  double strong_jitter_frac = 0.25;
  double strong_mask_frac = 0.25;
  double strong_scale_min = 0.8;
  double strong_scale_max = 1.25;
  std::vector<double> dim_range;  // per-dimension data range (max - min)

  void validate() const;
  void bind_ranges(const Matrix& features);
};

// Weak: additive uniform jitter bounded by weak_jitter_frac of each dimension's
// range. Strong: larger jitter, then per-coordinate masking, then a global scale.
Vector apply(const Vector& x, Mode mode, const AugmentPolicy& policy, std::mt19937_64& rng);

Matrix apply_rows(const Matrix& x, Mode mode, const AugmentPolicy& policy, std::mt19937_64& rng);

struct MixupConfig {
  double alpha = 4.0;  // Beta concentration
  void validate() const;
};

struct MixupResult {
  Vector x_mix;
  Vector p_mix;
  double lambda_prime = 1.0;
};

// lambda' = max(lambda, 1-lambda), so the first argument always dominates.
MixupResult mixup_with_lambda(const Vector& x1, const Vector& x2, const Vector& p1,
                              const Vector& p2, double lambda);

MixupResult mixup(const Vector& x1, const Vector& x2, const Vector& p1, const Vector& p2,
                  double alpha, std::mt19937_64& rng);

double sample_beta(double alpha, std::mt19937_64& rng);

}  // namespace coreg::augment
