#pragma once

#include <vector>

#include "coreg/common.hpp"

namespace coreg::gmm {

// All loss values identical: the caller falls back to all-Partial with w = 1.
class degenerate_input_error : public std::runtime_error {
 public:
  explicit degenerate_input_error(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kVarianceFloor = 1e-6;

// Two-component 1-D mixture; component 1 is the low-mean ("clean") one.
struct Gmm2 {
  double mu1 = 0.0, mu2 = 0.0;
  double var1 = 1.0, var2 = 1.0;
  double pi = 0.5;  // weight of component 1
  int iters = 0;
  double log_likelihood = 0.0;
};

// EM fit; log-likelihood is non-decreasing every iteration (asserted internally).
// Initialization: split at the median, per-half moments.
Gmm2 fit_em(const std::vector<double>& losses, int max_iters = 100, double tol = 1e-8);

// Bayes posterior of the low-mean component at the given loss value.
double posterior_clean(const Gmm2& g, double loss);

enum class Tag : std::uint8_t { Partial = 0, Unlabeled = 1 };

std::vector<Tag> split(const std::vector<double>& losses, const Gmm2& g,
                       double w_threshold = 0.5);

// Loss value where the clean posterior crosses w_threshold; logged as the
// division threshold implied by the posterior rule.
double implied_tau(const Gmm2& g, double w_threshold = 0.5);

// Per-sample Partial/Unlabeled tag, clean posterior w, and pseudo-label
// distribution p over classes. Filled in stages by the co-training loop.
struct SplitAssignment {
  std::vector<Tag> tags;
  std::vector<double> w;
  Matrix p;  // N x C rows summing to 1

  Eigen::Index size() const { return static_cast<Eigen::Index>(tags.size()); }
};

// Min-max normalization to [0,1]; constant input maps to all zeros.
std::vector<double> minmax_normalize(const std::vector<double>& values);

}  // namespace coreg::gmm
