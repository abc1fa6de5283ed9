#pragma once

#include <random>
#include <vector>

#include "coreg/augment.hpp"
#include "coreg/common.hpp"
#include "coreg/feature_queue.hpp"
#include "coreg/gmm.hpp"
#include "coreg/nn.hpp"

namespace coreg {

using gmm::Tag;

// Loss value plus gradient w.r.t. the documented input.
struct ValueGrad {
  double value = 0.0;
  Vector grad;
};

// Partial cross-entropy over the candidate set plus negative entropy:
// L = -log sum_{j in cand} p_j + sum_j p_j log p_j. Gradient w.r.t. probs.
ValueGrad warmup_loss(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand);

// -log p_{j*} with j* the most probable candidate (lowest index on ties).
ValueGrad division_loss(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand);

// Zeroes non-candidate mass and renormalizes. Zero candidate mass falls back
// to uniform over candidates; the flag reports that.
Vector rescale_to_candidates(const Vector& probs, const Eigen::Ref<const Eigen::VectorXi>& cand,
                             bool* fell_back = nullptr);

// Mean class distribution over K weakly-augmented views.
Vector weak_average(const nn::DenseNetwork& net, const Vector& x, int k,
                    const augment::AugmentPolicy& policy, std::mt19937_64& rng);

// Partial: w*p_peer + (1-w)*p_self_avg. Unlabeled: plain average.
Vector fuse(const Vector& p_peer, const Vector& p_self_avg, double w, Tag tag);

// Temperature sharpening: p_j^{1/T} renormalized.
Vector sharpen(const Vector& p, double temperature);

// Partial: cross-entropy -sum p~_j log f_j. Unlabeled: sum (p~_j - f_j)^2.
// Gradient w.r.t. probs_strong.
ValueGrad consistency_loss(const Vector& p_tilde, const Vector& probs_strong, Tag tag);

// C unit-norm class vectors in the shared projection space.
struct PrototypeBank {
  Matrix prototypes;  // C x P, unit rows

  static PrototypeBank init(int num_classes, int proj_dim, std::uint64_t seed);
  int num_classes() const { return static_cast<int>(prototypes.rows()); }
};

// softmax(z . o_1, ..., z . o_C).
Vector prototype_similarity(const Vector& z, const PrototypeBank& bank);

// Partial: KL between p~ and s, both sharpened with T'. Unlabeled: squared error
// on the unsharpened distributions. Gradient w.r.t. s.
ValueGrad prototype_loss(const Vector& p_tilde, const Vector& s, Tag tag, double t_prot);

// Same loss chained through s = prototype_similarity(z, bank); gradient w.r.t. z.
ValueGrad prototype_loss_grad_z(const Vector& p_tilde, const Vector& z, const PrototypeBank& bank,
                                Tag tag, double t_prot);

// o_j <- gamma*o_j + (1-gamma)*z_w for j = argmax p~, renormalized.
void update_prototypes(PrototypeBank& bank, const Vector& z_w, const Vector& p_tilde,
                       double gamma);

// Noise-tolerant contrastive loss; positives must be non-empty (the trainer
// substitutes the anchor's own momentum view when the queue yields none).
// Gradient w.r.t. the anchor z.
ValueGrad contrastive_loss(const Vector& z, const std::vector<Vector>& positives,
                           const std::vector<Vector>& negatives, double t_cont);

// Queue-backed path, identical in value/gradient to selecting lists first.
ValueGrad contrastive_from_queue(const Vector& z, const fqueue::FeatureQueue& queue,
                                 int anchor_label, bool anchor_confident,
                                 fqueue::SelectMode mode, const Vector* fallback_positive,
                                 double t_cont);

double total_loss(double l_cr, double l_prot, double l_ncont, double beta1, double beta2);

}  // namespace coreg
