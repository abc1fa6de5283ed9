#include "coreg/augment.hpp"

namespace coreg::augment {

void AugmentPolicy::validate() const {
  auto frac_ok = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!frac_ok(weak_jitter_frac) || !frac_ok(strong_jitter_frac) || !frac_ok(strong_mask_frac))
    throw std::invalid_argument("augment fractions must be in [0,1]");
  if (!(strong_scale_min > 0.0) || strong_scale_min > strong_scale_max)
    throw std::invalid_argument("scale range must be positive with min <= max");
}

void AugmentPolicy::bind_ranges(const Matrix& features) {
  if (features.rows() == 0) throw std::invalid_argument("bind_ranges: empty feature matrix");
  dim_range.resize(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index j = 0; j < features.cols(); ++j)
    dim_range[j] = features.col(j).maxCoeff() - features.col(j).minCoeff();
}

namespace {

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Vector apply(const Vector& x, Mode mode, const AugmentPolicy& policy, std::mt19937_64& rng) {
  policy.validate();
  if (static_cast<std::size_t>(x.size()) != policy.dim_range.size())
    throw std::invalid_argument("augment: policy not bound to this dimension");

  Vector out = x;
  double jitter = mode == Mode::Weak ? policy.weak_jitter_frac : policy.strong_jitter_frac;
  if (jitter > 0.0) {
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      double bound = jitter * policy.dim_range[j];
      out[j] += draw_uniform(rng, -bound, bound);
    }
  }
  if (mode == Mode::Strong) {
    if (policy.strong_mask_frac > 0.0) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (Eigen::Index j = 0; j < out.size(); ++j)
        if (unif(rng) < policy.strong_mask_frac) out[j] = 0.0;
    }
    double scale = draw_uniform(rng, policy.strong_scale_min, policy.strong_scale_max);
    if (scale != 1.0) out *= scale;
  }
  return out;
}

Matrix apply_rows(const Matrix& x, Mode mode, const AugmentPolicy& policy, std::mt19937_64& rng) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out.row(i) = apply(x.row(i).transpose(), mode, policy, rng).transpose();
  return out;
}

void MixupConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("mixup alpha must be > 0");
}

double sample_beta(double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  double a = gamma(rng);
  double b = gamma(rng);
  double s = a + b;
  return s > 0.0 ? a / s : 0.5;
}

MixupResult mixup_with_lambda(const Vector& x1, const Vector& x2, const Vector& p1,
                              const Vector& p2, double lambda) {
  if (x1.size() != x2.size() || p1.size() != p2.size())
    throw std::invalid_argument("mixup: size mismatch");
  auto check_dist = [](const Vector& p) {
    if (p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9)
      throw std::invalid_argument("mixup: inputs must be distributions");
  };
  check_dist(p1);
  check_dist(p2);

  MixupResult r;
  r.lambda_prime = std::max(lambda, 1.0 - lambda);
  r.x_mix = r.lambda_prime * x1 + (1.0 - r.lambda_prime) * x2;
  r.p_mix = r.lambda_prime * p1 + (1.0 - r.lambda_prime) * p2;
  return r;
}

MixupResult mixup(const Vector& x1, const Vector& x2, const Vector& p1, const Vector& p2,
                  double alpha, std::mt19937_64& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("mixup alpha must be > 0");
  return mixup_with_lambda(x1, x2, p1, p2, sample_beta(alpha, rng));
}

}  // namespace coreg::augment
