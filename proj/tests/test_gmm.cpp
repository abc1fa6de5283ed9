#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coreg/gmm.hpp"

using namespace coreg;
using namespace coreg::gmm;

namespace {

std::vector<double> two_cluster_trace(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> lo(0.1, 0.01), hi(5.0, 0.01);
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(lo(rng));
  for (int i = 0; i < 50; ++i) v.push_back(hi(rng));
  return v;
}

// 1-D k-means style oracle: alternate nearest-center assignment and means.
std::pair<double, double> kmeans2_oracle(const std::vector<double>& v) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  double c1 = lo, c2 = hi;
  for (int it = 0; it < 100; ++it) {
    double s1 = 0.0, s2 = 0.0;
    int n1 = 0, n2 = 0;
    for (double x : v) {
      if (std::abs(x - c1) <= std::abs(x - c2)) {
        s1 += x;
        ++n1;
      } else {
        s2 += x;
        ++n2;
      }
    }
    if (n1 > 0) c1 = s1 / n1;
    if (n2 > 0) c2 = s2 / n2;
  }
  return {std::min(c1, c2), std::max(c1, c2)};
}

}  // namespace

TEST_CASE("fit recovers well-separated cluster means within 5%") {
  auto trace = two_cluster_trace(1);
  auto g = fit_em(trace);
  auto [o1, o2] = kmeans2_oracle(trace);
  CHECK(std::abs(g.mu1 - o1) / o1 < 0.05);
  CHECK(std::abs(g.mu2 - o2) / o2 < 0.05);
}

TEST_CASE("pi recovered within 0.1 on a 70/30 mixture of 2000 draws") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> lo(0.1, 0.1), hi(5.0, 0.1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v;
  for (int i = 0; i < 2000; ++i) v.push_back(unif(rng) < 0.7 ? lo(rng) : hi(rng));
  auto g = fit_em(v);
  CHECK(std::abs(g.pi - 0.7) < 0.1);
  CHECK(std::abs(g.mu1 - 0.1) / 0.1 < 0.05);
  CHECK(std::abs(g.mu2 - 5.0) / 5.0 < 0.05);
}

TEST_CASE("log-likelihood is non-decreasing on random traces") {
  // fit_em asserts monotonicity internally and throws on violation; 100 random
  // datasets of mixed shapes must all fit cleanly.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v;
    int n = 20 + static_cast<int>(unif(rng) * 400);
    double mu_a = unif(rng) * 2.0;
    double mu_b = mu_a + unif(rng) * 5.0;
    double sd = 0.05 + unif(rng);
    for (int i = 0; i < n; ++i)
      v.push_back((unif(rng) < 0.5 ? mu_a : mu_b) + sd * gauss(rng));
    CHECK_NOTHROW(fit_em(v));
  }
}

TEST_CASE("identical losses are a degenerate input") {
  std::vector<double> v(10, 0.3);
  CHECK_THROWS_AS(fit_em(v), degenerate_input_error);
  CHECK_THROWS_AS(fit_em({0.1}), std::invalid_argument);
}

TEST_CASE("variance floor holds after fitting") {
  std::vector<double> v = {0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
  auto g = fit_em(v);
  CHECK(g.var1 >= kVarianceFloor);
  CHECK(g.var2 >= kVarianceFloor);
  CHECK(g.mu1 <= g.mu2);
}

TEST_CASE("posterior at the clean mean is about 1 when components are far apart") {
  Gmm2 g;
  g.mu1 = 0.1;
  g.mu2 = 10.0;
  g.var1 = g.var2 = 0.01;
  g.pi = 0.5;
  // Direct Bayes evaluation: the second density underflows at mu1.
  CHECK(posterior_clean(g, 0.1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equal components give posterior 0.5 everywhere") {
  Gmm2 g;
  g.mu1 = g.mu2 = 1.0;
  g.var1 = g.var2 = 0.5;
  g.pi = 0.5;
  for (double x : {-3.0, 0.0, 1.0, 2.5}) CHECK(posterior_clean(g, x) == doctest::Approx(0.5));
}

TEST_CASE("posterior is non-increasing in loss under equal variances") {
  Gmm2 g;
  g.mu1 = 0.2;
  g.mu2 = 2.0;
  g.var1 = g.var2 = 0.3;
  g.pi = 0.4;
  double prev = 1.0;
  for (double x = -1.0; x < 4.0; x += 0.05) {
    double w = posterior_clean(g, x);
    CHECK(w <= prev + 1e-12);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    prev = w;
  }
}

TEST_CASE("component posteriors sum to one") {
  Gmm2 g;
  g.mu1 = 0.1;
  g.mu2 = 1.4;
  g.var1 = 0.02;
  g.var2 = 0.3;
  g.pi = 0.6;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    double x = unif(rng);
    double w1 = posterior_clean(g, x);
    Gmm2 flipped = g;
    std::swap(flipped.mu1, flipped.mu2);
    std::swap(flipped.var1, flipped.var2);
    flipped.pi = 1.0 - g.pi;
    double w2 = posterior_clean(flipped, x);
    CHECK(std::abs(w1 + w2 - 1.0) <= 1e-12);
  }
}

TEST_CASE("split thresholds tags as the posterior does") {
  auto trace = two_cluster_trace(7);
  auto g = fit_em(trace);
  auto tags = split(trace, g, 0.5);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    Tag expected = posterior_clean(g, trace[i]) >= 0.5 ? Tag::Partial : Tag::Unlabeled;
    CHECK(tags[i] == expected);
  }
  // Bimodal trace: the low-loss half is Partial, the high-loss half not.
  int low_partial = 0, high_partial = 0;
  for (std::size_t i = 0; i < 50; ++i) low_partial += tags[i] == Tag::Partial;
  for (std::size_t i = 50; i < 100; ++i) high_partial += tags[i] == Tag::Partial;
  CHECK(low_partial == 50);
  CHECK(high_partial == 0);
}

TEST_CASE("w_threshold 0 marks everything Partial") {
  auto trace = two_cluster_trace(9);
  auto g = fit_em(trace);
  for (Tag t : split(trace, g, 0.0)) CHECK(t == Tag::Partial);
}

TEST_CASE("implied tau sits between the component means at the 0.5 crossing") {
  auto trace = two_cluster_trace(11);
  auto g = fit_em(trace);
  double tau = implied_tau(g, 0.5);
  CHECK(tau > g.mu1);
  CHECK(tau < g.mu2);
  CHECK(posterior_clean(g, tau) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("minmax_normalize maps to [0,1] and handles constants") {
  auto v = minmax_normalize({2.0, 4.0, 3.0});
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(1.0));
  CHECK(v[2] == doctest::Approx(0.5));
  auto c = minmax_normalize({1.0, 1.0});
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
}
