#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coreg/common.hpp"

namespace coreg::nn {

struct LinearLayer {
  Matrix w;  // in x out
  Vector b;  // out
};

struct NetworkShape {
  int input_dim = 0;
  std::vector<int> hidden = {64, 64};
  int num_classes = 0;
  int proj_dim = 16;

  bool operator==(const NetworkShape&) const = default;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> enc_pre;   // pre-activation per encoder layer
  std::vector<Matrix> enc_post;  // rectified
  Matrix logits;
  Matrix proj_pre;               // projector hidden pre-activation
  Matrix proj_post;
  Matrix proj_raw;               // projector output before normalization
  Matrix projected;              // unit rows
  Vector proj_norms;
  bool valid = false;

  const Matrix& features() const { return enc_post.back(); }
};

// MLP encoder with a softmax classifier head and a two-layer projection head
// whose outputs are L2-normalized.
struct DenseNetwork {
  NetworkShape shape;
  std::vector<LinearLayer> encoder;
  LinearLayer classifier;
  LinearLayer proj_hidden;
  LinearLayer proj_out;

  static DenseNetwork init(const NetworkShape& shape, std::uint64_t seed);

  ForwardCache forward(const Matrix& batch) const;

  // Convenience single-pass class probabilities (softmax of logits).
  Matrix predict_probs(const Matrix& batch) const;
  Matrix project(const Matrix& batch) const;

  std::vector<Matrix*> weight_params();
  std::vector<Vector*> bias_params();
  std::vector<const Matrix*> weight_params() const;
  std::vector<const Vector*> bias_params() const;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const DenseNetwork& net);
  void add_scaled(const Gradients& other, double scale);
  bool all_finite() const;
};

// Exact reverse-mode pass for the cached forward computation. d_logits and
// d_projected are loss gradients w.r.t. the logits and the normalized
// projection rows; either may be empty (treated as zero).
Gradients backward(const DenseNetwork& net, const ForwardCache& cache, const Matrix& d_logits,
                   const Matrix& d_projected);

// Momentum SGD with velocity kept by the caller: v <- momentum*v + g + wd*theta,
// theta <- theta - lr*v.
struct SgdState {
  Gradients velocity;
  static SgdState zeros_like(const DenseNetwork& net);
};

void sgd_step(DenseNetwork& net, SgdState& state, const Gradients& grads, double lr,
              double momentum, double weight_decay);

// p_ema <- m*p_ema + (1-m)*p_src for every parameter.
void ema_update(DenseNetwork& ema, const DenseNetwork& source, double m);

struct NetworkPair {
  DenseNetwork net1, net2;
  DenseNetwork ema1, ema2;
  double ema_m = 0.99;

  static NetworkPair init(const NetworkShape& shape, std::uint64_t seed1, std::uint64_t seed2,
                          double ema_m);
  DenseNetwork& net(int idx) { return idx == 0 ? net1 : net2; }
  DenseNetwork& ema(int idx) { return idx == 0 ? ema1 : ema2; }
  const DenseNetwork& net(int idx) const { return idx == 0 ? net1 : net2; }
  const DenseNetwork& ema(int idx) const { return idx == 0 ? ema1 : ema2; }
};

// Flat binary dump of all parameter arrays with shape headers; bit-exact round trip.
void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const DenseNetwork*>>& nets,
                   std::uint64_t config_hash);
std::vector<std::pair<std::string, DenseNetwork>> load_networks(const std::string& path,
                                                                std::uint64_t* config_hash_out);

}  // namespace coreg::nn
