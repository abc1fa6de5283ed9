#include "coreg/nn.hpp"

#include <cstring>
#include <fstream>

namespace coreg::nn {

namespace {

LinearLayer init_layer(int in, int out, std::mt19937_64& rng) {
  // Uniform fan-in scaling for weights and biases. A nonzero bias draw also
  // keeps the projector output away from the exact zero vector, where the L2
  // normalization is not differentiable.
  double a = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> unif(-a, a);
  LinearLayer layer;
  layer.w.resize(in, out);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) layer.w(i, j) = unif(rng);
  layer.b.resize(out);
  for (int j = 0; j < out; ++j) layer.b[j] = unif(rng);
  return layer;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& pre, const Matrix& dpost) {
  return (pre.array() > 0.0).cast<double>() * dpost.array();
}

Matrix affine(const Matrix& x, const LinearLayer& l) {
  return (x * l.w).rowwise() + l.b.transpose();
}

}  // namespace

DenseNetwork DenseNetwork::init(const NetworkShape& shape, std::uint64_t seed) {
  if (shape.input_dim < 1 || shape.num_classes < 1 || shape.proj_dim < 1 || shape.hidden.empty())
    throw std::invalid_argument("network shape fields must all be >= 1");
  DenseNetwork net;
  net.shape = shape;
  auto rng = make_rng(seed, /*tag=*/0x11717);
  int in = shape.input_dim;
  for (int h : shape.hidden) {
    net.encoder.push_back(init_layer(in, h, rng));
    in = h;
  }
  net.classifier = init_layer(in, shape.num_classes, rng);
  net.proj_hidden = init_layer(in, in, rng);
  net.proj_out = init_layer(in, shape.proj_dim, rng);
  return net;
}

ForwardCache DenseNetwork::forward(const Matrix& batch) const {
  if (batch.cols() != shape.input_dim)
    throw std::invalid_argument("forward: batch width does not match input_dim");
  ForwardCache c;
  c.input = batch;
  Matrix x = batch;
  for (const auto& layer : encoder) {
    c.enc_pre.push_back(affine(x, layer));
    c.enc_post.push_back(relu(c.enc_pre.back()));
    x = c.enc_post.back();
  }
  c.logits = affine(x, classifier);
  c.proj_pre = affine(x, proj_hidden);
  c.proj_post = relu(c.proj_pre);
  c.proj_raw = affine(c.proj_post, proj_out);
  c.proj_norms = c.proj_raw.rowwise().norm();
  c.projected.resize(c.proj_raw.rows(), c.proj_raw.cols());
  for (Eigen::Index i = 0; i < c.proj_raw.rows(); ++i) {
    double n = c.proj_norms[i];
    c.projected.row(i) = n > 0.0 ? (c.proj_raw.row(i) / n).eval() : c.proj_raw.row(i);
  }
  c.valid = true;
  return c;
}

Matrix DenseNetwork::predict_probs(const Matrix& batch) const {
  Matrix x = batch;
  for (const auto& layer : encoder) x = relu(affine(x, layer));
  return softmax_rows(affine(x, classifier));
}

Matrix DenseNetwork::project(const Matrix& batch) const {
  Matrix x = batch;
  for (const auto& layer : encoder) x = relu(affine(x, layer));
  Matrix v = affine(relu(affine(x, proj_hidden)), proj_out);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    double n = v.row(i).norm();
    if (n > 0.0) v.row(i) /= n;
  }
  return v;
}

std::vector<Matrix*> DenseNetwork::weight_params() {
  std::vector<Matrix*> out;
  for (auto& l : encoder) out.push_back(&l.w);
  out.push_back(&classifier.w);
  out.push_back(&proj_hidden.w);
  out.push_back(&proj_out.w);
  return out;
}

std::vector<Vector*> DenseNetwork::bias_params() {
  std::vector<Vector*> out;
  for (auto& l : encoder) out.push_back(&l.b);
  out.push_back(&classifier.b);
  out.push_back(&proj_hidden.b);
  out.push_back(&proj_out.b);
  return out;
}

std::vector<const Matrix*> DenseNetwork::weight_params() const {
  auto mutable_this = const_cast<DenseNetwork*>(this);
  auto ps = mutable_this->weight_params();
  return {ps.begin(), ps.end()};
}

std::vector<const Vector*> DenseNetwork::bias_params() const {
  auto mutable_this = const_cast<DenseNetwork*>(this);
  auto ps = mutable_this->bias_params();
  return {ps.begin(), ps.end()};
}

Gradients Gradients::zeros_like(const DenseNetwork& net) {
  Gradients g;
  for (const auto* w : net.weight_params()) g.weights.push_back(Matrix::Zero(w->rows(), w->cols()));
  for (const auto* b : net.bias_params()) g.biases.push_back(Vector::Zero(b->size()));
  return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += scale * other.weights[i];
  for (std::size_t i = 0; i < biases.size(); ++i) biases[i] += scale * other.biases[i];
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Gradients backward(const DenseNetwork& net, const ForwardCache& cache, const Matrix& d_logits,
                   const Matrix& d_projected) {
  if (!cache.valid) throw std::logic_error("backward: no cached forward pass");
  const Eigen::Index batch = cache.input.rows();
  Gradients g = Gradients::zeros_like(net);
  const std::size_t n_enc = net.encoder.size();
  const auto& feats = cache.features();

  Matrix d_feats = Matrix::Zero(batch, feats.cols());

  if (d_logits.size() > 0) {
    if (d_logits.rows() != batch || d_logits.cols() != net.shape.num_classes)
      throw std::invalid_argument("backward: d_logits shape mismatch");
    g.weights[n_enc] = feats.transpose() * d_logits;
    g.biases[n_enc] = d_logits.colwise().sum().transpose();
    d_feats += d_logits * net.classifier.w.transpose();
  }

  if (d_projected.size() > 0) {
    if (d_projected.rows() != batch || d_projected.cols() != net.shape.proj_dim)
      throw std::invalid_argument("backward: d_projected shape mismatch");
    // Through L2 normalization: dv = (dz - z (z . dz)) / ||v||.
    Matrix d_raw(batch, net.shape.proj_dim);
    for (Eigen::Index i = 0; i < batch; ++i) {
      double n = cache.proj_norms[i];
      if (n > 0.0) {
        auto z = cache.projected.row(i);
        double dot = z.dot(d_projected.row(i));
        d_raw.row(i) = (d_projected.row(i) - dot * z) / n;
      } else {
        d_raw.row(i) = d_projected.row(i);
      }
    }
    g.weights[n_enc + 2] = cache.proj_post.transpose() * d_raw;
    g.biases[n_enc + 2] = d_raw.colwise().sum().transpose();
    Matrix d_proj_pre = relu_backward(cache.proj_pre, d_raw * net.proj_out.w.transpose());
    g.weights[n_enc + 1] = feats.transpose() * d_proj_pre;
    g.biases[n_enc + 1] = d_proj_pre.colwise().sum().transpose();
    d_feats += d_proj_pre * net.proj_hidden.w.transpose();
  }

  Matrix d_post = d_feats;
  for (std::size_t k = n_enc; k-- > 0;) {
    Matrix d_pre = relu_backward(cache.enc_pre[k], d_post);
    const Matrix& layer_in = k == 0 ? cache.input : cache.enc_post[k - 1];
    g.weights[k] = layer_in.transpose() * d_pre;
    g.biases[k] = d_pre.colwise().sum().transpose();
    if (k > 0) d_post = d_pre * net.encoder[k].w.transpose();
  }
  return g;
}

SgdState SgdState::zeros_like(const DenseNetwork& net) {
  return SgdState{Gradients::zeros_like(net)};
}

void sgd_step(DenseNetwork& net, SgdState& state, const Gradients& grads, double lr,
              double momentum, double weight_decay) {
  if (!(lr >= 0.0)) throw std::invalid_argument("sgd_step: lr must be >= 0");
  if (!grads.all_finite()) throw numeric_error("sgd_step: non-finite gradient");

  auto ws = net.weight_params();
  auto bs = net.bias_params();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    state.velocity.weights[i] =
        momentum * state.velocity.weights[i] + grads.weights[i] + weight_decay * (*ws[i]);
    *ws[i] -= lr * state.velocity.weights[i];
  }
  for (std::size_t i = 0; i < bs.size(); ++i) {
    state.velocity.biases[i] = momentum * state.velocity.biases[i] + grads.biases[i];
    *bs[i] -= lr * state.velocity.biases[i];
  }
}

void ema_update(DenseNetwork& ema, const DenseNetwork& source, double m) {
  if (m < 0.0 || m > 1.0) throw std::invalid_argument("ema_update: m must be in [0,1]");
  if (!(ema.shape == source.shape))
    throw std::invalid_argument("ema_update: network structures differ");
  auto ews = ema.weight_params();
  auto sws = source.weight_params();
  for (std::size_t i = 0; i < ews.size(); ++i) *ews[i] = m * (*ews[i]) + (1.0 - m) * (*sws[i]);
  auto ebs = ema.bias_params();
  auto sbs = source.bias_params();
  for (std::size_t i = 0; i < ebs.size(); ++i) *ebs[i] = m * (*ebs[i]) + (1.0 - m) * (*sbs[i]);
}

NetworkPair NetworkPair::init(const NetworkShape& shape, std::uint64_t seed1, std::uint64_t seed2,
                              double ema_m) {
  NetworkPair pair;
  pair.net1 = DenseNetwork::init(shape, seed1);
  pair.net2 = DenseNetwork::init(shape, seed2);
  pair.ema1 = pair.net1;
  pair.ema2 = pair.net2;
  pair.ema_m = ema_m;
  return pair;
}

// --- checkpoint io ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'R', 'G', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_array(std::ofstream& out, const double* data, std::uint64_t rows, std::uint64_t cols) {
  write_pod(out, rows);
  write_pod(out, cols);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

void read_array(std::ifstream& in, double* data, std::uint64_t rows, std::uint64_t cols) {
  auto r = read_pod<std::uint64_t>(in);
  auto c = read_pod<std::uint64_t>(in);
  if (r != rows || c != cols) throw std::runtime_error("checkpoint: array shape mismatch");
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated array");
}

}  // namespace

void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const DenseNetwork*>>& nets,
                   std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, config_hash);
  write_pod(out, static_cast<std::uint32_t>(nets.size()));
  for (const auto& [name, net] : nets) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint32_t>(net->shape.input_dim));
    write_pod(out, static_cast<std::uint32_t>(net->shape.hidden.size()));
    for (int h : net->shape.hidden) write_pod(out, static_cast<std::uint32_t>(h));
    write_pod(out, static_cast<std::uint32_t>(net->shape.num_classes));
    write_pod(out, static_cast<std::uint32_t>(net->shape.proj_dim));
    for (const auto* w : net->weight_params())
      write_array(out, w->data(), static_cast<std::uint64_t>(w->rows()),
                  static_cast<std::uint64_t>(w->cols()));
    for (const auto* b : net->bias_params())
      write_array(out, b->data(), static_cast<std::uint64_t>(b->size()), 1);
  }
}

std::vector<std::pair<std::string, DenseNetwork>> load_networks(const std::string& path,
                                                                std::uint64_t* config_hash_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  auto hash = read_pod<std::uint64_t>(in);
  if (config_hash_out) *config_hash_out = hash;

  auto count = read_pod<std::uint32_t>(in);
  std::vector<std::pair<std::string, DenseNetwork>> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    NetworkShape shape;
    shape.input_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    auto n_hidden = read_pod<std::uint32_t>(in);
    shape.hidden.clear();
    for (std::uint32_t i = 0; i < n_hidden; ++i)
      shape.hidden.push_back(static_cast<int>(read_pod<std::uint32_t>(in)));
    shape.num_classes = static_cast<int>(read_pod<std::uint32_t>(in));
    shape.proj_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    DenseNetwork net = DenseNetwork::init(shape, /*seed=*/0);
    for (auto* w : net.weight_params())
      read_array(in, w->data(), static_cast<std::uint64_t>(w->rows()),
                 static_cast<std::uint64_t>(w->cols()));
    for (auto* b : net.bias_params())
      read_array(in, b->data(), static_cast<std::uint64_t>(b->size()), 1);
    out.emplace_back(std::move(name), std::move(net));
  }
  return out;
}

}  // namespace coreg::nn
