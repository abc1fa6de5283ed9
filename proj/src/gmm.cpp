#include "coreg/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coreg::gmm {

namespace {

double log_gauss(double x, double mu, double var) {
  double d = x - mu;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b) {
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

Gmm2 fit_em(const std::vector<double>& losses, int max_iters, double tol) {
  const std::size_t n = losses.size();
  if (n < 2) throw std::invalid_argument("fit_em: need at least 2 values");
  double lo = *std::min_element(losses.begin(), losses.end());
  double hi = *std::max_element(losses.begin(), losses.end());
  if (!(hi > lo)) throw degenerate_input_error("fit_em: all loss values identical");

  // Median split initialization with per-half moments.
  std::vector<double> sorted = losses;
  std::sort(sorted.begin(), sorted.end());
  std::size_t half = n / 2;
  auto moments = [](const double* begin, const double* end) {
    std::size_t m = static_cast<std::size_t>(end - begin);
    double mean = 0.0;
    for (const double* p = begin; p != end; ++p) mean += *p;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (const double* p = begin; p != end; ++p) var += (*p - mean) * (*p - mean);
    var = m > 1 ? var / static_cast<double>(m) : 0.0;
    return std::pair<double, double>(mean, std::max(var, kVarianceFloor));
  };
  auto [m1, v1] = moments(sorted.data(), sorted.data() + half);
  auto [m2, v2] = moments(sorted.data() + half, sorted.data() + n);

  Gmm2 g;
  g.mu1 = m1;
  g.var1 = v1;
  g.mu2 = m2;
  g.var2 = v2;
  g.pi = 0.5;

  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> resp(n);  // responsibility of component 1
  for (int it = 0; it < max_iters; ++it) {
    // E-step in log space.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double l1 = std::log(g.pi) + log_gauss(losses[i], g.mu1, g.var1);
      double l2 = std::log(1.0 - g.pi) + log_gauss(losses[i], g.mu2, g.var2);
      double denom = log_add(l1, l2);
      resp[i] = std::exp(l1 - denom);
      ll += denom;
    }
    if (it > 0 && ll + 1e-9 < prev_ll)
      throw numeric_error("fit_em: log-likelihood decreased");
    bool converged = it > 0 && ll - prev_ll < tol;
    prev_ll = ll;
    g.log_likelihood = ll;
    g.iters = it + 1;
    if (converged) break;

    // M-step.
    double r1 = 0.0, r2 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r1 += resp[i];
      r2 += 1.0 - resp[i];
      s1 += resp[i] * losses[i];
      s2 += (1.0 - resp[i]) * losses[i];
    }
    r1 = std::max(r1, 1e-12);
    r2 = std::max(r2, 1e-12);
    double mu1 = s1 / r1;
    double mu2 = s2 / r2;
    double q1 = 0.0, q2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q1 += resp[i] * (losses[i] - mu1) * (losses[i] - mu1);
      q2 += (1.0 - resp[i]) * (losses[i] - mu2) * (losses[i] - mu2);
    }
    g.mu1 = mu1;
    g.mu2 = mu2;
    g.var1 = std::max(q1 / r1, kVarianceFloor);
    g.var2 = std::max(q2 / r2, kVarianceFloor);
    g.pi = std::min(std::max(r1 / static_cast<double>(n), 1e-6), 1.0 - 1e-6);
  }

  // Component 1 must be the low-mean one.
  if (g.mu1 > g.mu2) {
    std::swap(g.mu1, g.mu2);
    std::swap(g.var1, g.var2);
    g.pi = 1.0 - g.pi;
  }
  return g;
}

double posterior_clean(const Gmm2& g, double loss) {
  double l1 = std::log(g.pi) + log_gauss(loss, g.mu1, g.var1);
  double l2 = std::log(1.0 - g.pi) + log_gauss(loss, g.mu2, g.var2);
  return std::exp(l1 - log_add(l1, l2));
}

std::vector<Tag> split(const std::vector<double>& losses, const Gmm2& g, double w_threshold) {
  std::vector<Tag> tags(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    tags[i] = posterior_clean(g, losses[i]) >= w_threshold ? Tag::Partial : Tag::Unlabeled;
  return tags;
}

double implied_tau(const Gmm2& g, double w_threshold) {
  if (posterior_clean(g, g.mu1) < w_threshold) return g.mu1;
  if (posterior_clean(g, g.mu2) >= w_threshold) return g.mu2;
  double lo = g.mu1, hi = g.mu2;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (posterior_clean(g, mid) >= w_threshold ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
  if (values.empty()) return {};
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

}  // namespace coreg::gmm
