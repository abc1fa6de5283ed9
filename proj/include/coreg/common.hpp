#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace coreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;

// Thrown when training state turns non-finite. The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on bad configs or malformed input files. The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64 finalizer; used to derive independent RNG streams from (seed, tag).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(mix64(seed) ^ mix64(tag + 0x517cc1b727220a95ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
  return derive_seed(derive_seed(seed, tag_a), tag_b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag) {
  return std::mt19937_64(derive_seed(seed, tag));
}

// log with the -30 floor used by every loss that takes a log of a probability.
constexpr double kLogFloor = -30.0;

inline double clamped_log(double p) {
  if (!(p > 0.0)) return kLogFloor;
  double l = std::log(p);
  return l < kLogFloor ? kLogFloor : l;
}

// Derivative of clamped_log; zero in the clamped region.
inline double clamped_log_grad(double p) {
  if (!(p > 0.0)) return 0.0;
  return std::log(p) < kLogFloor ? 0.0 : 1.0 / p;
}

// Row-wise softmax with max subtraction.
inline Vector softmax(const Vector& logits) {
  Vector shifted = logits.array() - logits.maxCoeff();
  Vector e = shifted.array().exp();
  return e / e.sum();
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out.row(i) = softmax(logits.row(i).transpose()).transpose();
  return out;
}

// Maps dL/dprobs to dL/dlogits through the softmax Jacobian.
inline Vector softmax_backward(const Vector& probs, const Vector& dprobs) {
  double dot = probs.dot(dprobs);
  return probs.array() * (dprobs.array() - dot);
}

inline int argmax_lowest_tie(const Vector& v) {
  int best = 0;
  for (int j = 1; j < v.size(); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

// FNV-1a over a byte string; used for config hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace coreg
