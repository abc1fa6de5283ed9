#include "coreg/losses.hpp"

#include <cmath>

namespace coreg {

namespace {

void check_candidates(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand) {
  if (probs.size() != cand.size()) throw std::invalid_argument("probs/candidate size mismatch");
  if (cand.sum() < 1) throw std::invalid_argument("candidate row has no entries set");
}

// Gradient of u = sharpen(s, T) applied to an upstream du: the sharpening map
// has the same softmax-like Jacobian structure, (u_k/(T s_k)) (du_k - sum_j du_j u_j).
Vector sharpen_backward(const Vector& s, const Vector& u, double temperature, const Vector& du) {
  double dot = du.dot(u);
  Vector ds(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    ds[k] = s[k] > 0.0 ? u[k] / (temperature * s[k]) * (du[k] - dot) : 0.0;
  return ds;
}

}  // namespace

ValueGrad warmup_loss(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand) {
  check_candidates(probs, cand);
  double cand_mass = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j)
    if (cand[j]) cand_mass += probs[j];

  ValueGrad out;
  out.grad = Vector::Zero(probs.size());
  double l_sup = -clamped_log(cand_mass);
  double dsup = -clamped_log_grad(cand_mass);
  double l_neg = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    double p = probs[j];
    if (p > 0.0) {
      double lp = clamped_log(p);
      l_neg += p * lp;
      out.grad[j] += lp + p * clamped_log_grad(p);
    }
    if (cand[j]) out.grad[j] += dsup;
  }
  out.value = l_sup + l_neg;
  return out;
}

ValueGrad division_loss(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand) {
  check_candidates(probs, cand);
  int best = -1;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (!cand[j]) continue;
    if (best < 0 || probs[j] > probs[best]) best = static_cast<int>(j);
  }
  ValueGrad out;
  out.value = -clamped_log(probs[best]);
  out.grad = Vector::Zero(probs.size());
  out.grad[best] = -clamped_log_grad(probs[best]);
  return out;
}

Vector rescale_to_candidates(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand,
                             bool* fell_back) {
  check_candidates(probs, cand);
  Vector out = Vector::Zero(probs.size());
  double mass = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j)
    if (cand[j]) mass += probs[j];
  if (fell_back) *fell_back = false;
  if (mass > 0.0) {
    for (Eigen::Index j = 0; j < probs.size(); ++j)
      if (cand[j]) out[j] = probs[j] / mass;
  } else {
    if (fell_back) *fell_back = true;
    double u = 1.0 / static_cast<double>(cand.sum());
    for (Eigen::Index j = 0; j < probs.size(); ++j)
      if (cand[j]) out[j] = u;
  }
  return out;
}

Vector weak_average(const nn::DenseNetwork& net, const Vector& x, int k,
                    const augment::AugmentPolicy& policy, std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("weak_average: K must be >= 1");
  Vector acc = Vector::Zero(net.shape.num_classes);
  for (int v = 0; v < k; ++v) {
    Vector view = augment::apply(x, augment::Mode::Weak, policy, rng);
    acc += net.predict_probs(view.transpose()).row(0).transpose();
  }
  return acc / static_cast<double>(k);
}

Vector fuse(const Vector& p_peer, const Vector& p_self_avg, double w, Tag tag) {
  if (p_peer.size() != p_self_avg.size()) throw std::invalid_argument("fuse: size mismatch");
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("fuse: w must be in [0,1]");
  if (tag == Tag::Partial) return w * p_peer + (1.0 - w) * p_self_avg;
  return 0.5 * (p_peer + p_self_avg);
}

Vector sharpen(const Vector& p, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be > 0");
  // Scale by the max entry so the powers stay in range.
  double pmax = p.maxCoeff();
  if (!(pmax > 0.0)) throw std::invalid_argument("sharpen: input has no mass");
  Vector out(p.size());
  double inv_t = 1.0 / temperature;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    out[j] = p[j] > 0.0 ? std::pow(p[j] / pmax, inv_t) : 0.0;
  return out / out.sum();
}

ValueGrad consistency_loss(const Vector& p_tilde, const Vector& probs_strong, Tag tag) {
  if (p_tilde.size() != probs_strong.size())
    throw std::invalid_argument("consistency_loss: size mismatch");
  ValueGrad out;
  out.grad = Vector::Zero(probs_strong.size());
  if (tag == Tag::Partial) {
    for (Eigen::Index j = 0; j < probs_strong.size(); ++j) {
      out.value -= p_tilde[j] * clamped_log(probs_strong[j]);
      out.grad[j] = -p_tilde[j] * clamped_log_grad(probs_strong[j]);
    }
  } else {
    for (Eigen::Index j = 0; j < probs_strong.size(); ++j) {
      double d = p_tilde[j] - probs_strong[j];
      out.value += d * d;
      out.grad[j] = -2.0 * d;
    }
  }
  return out;
}

PrototypeBank PrototypeBank::init(int num_classes, int proj_dim, std::uint64_t seed) {
  if (num_classes < 1 || proj_dim < 1)
    throw std::invalid_argument("prototype bank dimensions must be >= 1");
  PrototypeBank bank;
  bank.prototypes.resize(num_classes, proj_dim);
  auto rng = make_rng(seed, /*tag=*/0x9707);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < proj_dim; ++j) bank.prototypes(c, j) = gauss(rng);
    double n = bank.prototypes.row(c).norm();
    bank.prototypes.row(c) /= n;
  }
  return bank;
}

Vector prototype_similarity(const Vector& z, const PrototypeBank& bank) {
  if (z.size() != bank.prototypes.cols())
    throw std::invalid_argument("prototype_similarity: dimension mismatch");
  return softmax(bank.prototypes * z);
}

ValueGrad prototype_loss(const Vector& p_tilde, const Vector& s, Tag tag, double t_prot) {
  if (p_tilde.size() != s.size()) throw std::invalid_argument("prototype_loss: size mismatch");
  ValueGrad out;
  out.grad = Vector::Zero(s.size());
  if (tag == Tag::Partial) {
    Vector t = sharpen(p_tilde, t_prot);
    Vector u = sharpen(s, t_prot);
    Vector du = Vector::Zero(s.size());
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (t[j] > 0.0) out.value += t[j] * (clamped_log(t[j]) - clamped_log(u[j]));
      du[j] = -t[j] * clamped_log_grad(u[j]);
    }
    out.grad = sharpen_backward(s, u, t_prot, du);
  } else {
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      double d = p_tilde[j] - s[j];
      out.value += d * d;
      out.grad[j] = -2.0 * d;
    }
  }
  return out;
}

ValueGrad prototype_loss_grad_z(const Vector& p_tilde, const Vector& z, const PrototypeBank& bank,
                                Tag tag, double t_prot) {
  Vector s = prototype_similarity(z, bank);
  ValueGrad on_s = prototype_loss(p_tilde, s, tag, t_prot);
  Vector d_dots = softmax_backward(s, on_s.grad);
  ValueGrad out;
  out.value = on_s.value;
  out.grad = bank.prototypes.transpose() * d_dots;
  return out;
}

void update_prototypes(PrototypeBank& bank, const Vector& z_w, const Vector& p_tilde,
                       double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("prototype gamma must be in [0,1]");
  if (z_w.size() != bank.prototypes.cols())
    throw std::invalid_argument("update_prototypes: dimension mismatch");
  if (gamma == 1.0) return;
  int j = argmax_lowest_tie(p_tilde);
  Vector blended = gamma * bank.prototypes.row(j).transpose() + (1.0 - gamma) * z_w;
  double n = blended.norm();
  if (n > 0.0) blended /= n; else blended = z_w;
  bank.prototypes.row(j) = blended.transpose();
}

ValueGrad contrastive_loss(const Vector& z, const std::vector<Vector>& positives,
                           const std::vector<Vector>& negatives, double t_cont) {
  if (positives.empty())
    throw std::logic_error("contrastive_loss: positives must be non-empty (caller fallback)");
  if (!(t_cont > 0.0)) throw std::invalid_argument("contrastive temperature must be > 0");

  // L = -(1/|P|) sum_p z.z_p/T + logsumexp over P u N of z.z_k/T.
  const std::size_t np = positives.size();
  std::vector<double> sims;
  sims.reserve(np + negatives.size());
  double pos_sum = 0.0;
  for (const auto& zp : positives) {
    double s = z.dot(zp) / t_cont;
    sims.push_back(s);
    pos_sum += s;
  }
  for (const auto& zn : negatives) sims.push_back(z.dot(zn) / t_cont);

  double hi = *std::max_element(sims.begin(), sims.end());
  double denom = 0.0;
  for (double s : sims) denom += std::exp(s - hi);

  ValueGrad out;
  out.value = -pos_sum / static_cast<double>(np) + hi + std::log(denom);
  out.grad = Vector::Zero(z.size());
  for (const auto& zp : positives) out.grad -= zp / (static_cast<double>(np) * t_cont);
  std::size_t k = 0;
  for (const auto& zp : positives) out.grad += std::exp(sims[k++] - hi) / denom / t_cont * zp;
  for (const auto& zn : negatives) out.grad += std::exp(sims[k++] - hi) / denom / t_cont * zn;
  return out;
}

ValueGrad contrastive_from_queue(const Vector& z, const fqueue::FeatureQueue& queue,
                                 int anchor_label, bool anchor_confident, fqueue::SelectMode mode,
                                 const Vector* fallback_positive, double t_cont) {
  auto sel = queue.select_pos_neg(anchor_label, anchor_confident, mode);
  if (sel.positives.empty()) {
    if (!fallback_positive)
      throw std::logic_error("contrastive_from_queue: no positives and no fallback");
    sel.positives.push_back(*fallback_positive);
  }
  return contrastive_loss(z, sel.positives, sel.negatives, t_cont);
}

double total_loss(double l_cr, double l_prot, double l_ncont, double beta1, double beta2) {
  if (beta1 < 0.0 || beta2 < 0.0) throw std::invalid_argument("loss weights must be >= 0");
  return l_cr + beta1 * l_prot + beta2 * l_ncont;
}

}  // namespace coreg
