#include "coreg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace coreg {

namespace {

// RNG stream purposes; combined with (seed, epoch, who) they give every draw
// site its own deterministic stream.
enum Purpose : std::uint64_t {
  kDivView = 1,
  kTeacherAvg = 2,
  kStudentAvg = 3,
  kBatchOrder = 4,
  kStrongView = 5,
  kWeakView = 6,
  kMixPartner = 7,
  kMixLambda = 8,
  kWarmOrder = 9,
  kWarmView = 10,
};

std::mt19937_64 stream(const CoRegConfig& cfg, int epoch, Purpose purpose, int who) {
  std::uint64_t tag = (static_cast<std::uint64_t>(epoch) << 8) | static_cast<std::uint64_t>(purpose);
  return std::mt19937_64(derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(who)));
}

Vector one_hot(int label, int c) {
  Vector v = Vector::Zero(c);
  v[label] = 1.0;
  return v;
}

Matrix k_view_average(const nn::DenseNetwork& net, const Matrix& features, int k,
                      const augment::AugmentPolicy& policy, std::mt19937_64& rng) {
  Matrix acc = Matrix::Zero(features.rows(), net.shape.num_classes);
  for (int v = 0; v < k; ++v)
    acc += net.predict_probs(augment::apply_rows(features, augment::Mode::Weak, policy, rng));
  return acc / static_cast<double>(k);
}

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

bool near_unit(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return std::abs(row.norm() - 1.0) <= 1e-6;
}

void require_finite_forward(const nn::ForwardCache& cache, int epoch, const char* where) {
  if (!cache.logits.allFinite() || !cache.projected.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite network output at epoch " << epoch << " (" << where << ")";
    throw numeric_error(msg.str());
  }
}

}  // namespace

TrainState TrainState::init(const datagen::PartialDataset& data, const CoRegConfig& cfg) {
  cfg.validate();
  data.validate();
  nn::NetworkShape shape;
  shape.input_dim = static_cast<int>(data.base.dim());
  shape.hidden = cfg.hidden;
  shape.num_classes = data.num_classes();
  shape.proj_dim = cfg.proj_dim;

  TrainState st{
      nn::NetworkPair::init(shape, derive_seed(cfg.seed, 0x4E01), derive_seed(cfg.seed, 0x4E02),
                            cfg.ema_m),
      PrototypeBank::init(shape.num_classes, shape.proj_dim, derive_seed(cfg.seed, 0xBA4E)),
      {fqueue::FeatureQueue(cfg.queue_capacity), fqueue::FeatureQueue(cfg.queue_capacity)},
      nn::SgdState{},
      nn::SgdState{},
      cfg.augment};
  st.opt1 = nn::SgdState::zeros_like(st.pair.net1);
  st.opt2 = nn::SgdState::zeros_like(st.pair.net2);
  st.policy.bind_ranges(data.base.features);
  return st;
}

PseudoLabels build_pseudo_labels(const nn::DenseNetwork& teacher,
                                 const nn::DenseNetwork& student,
                                 const datagen::PartialDataset& data, const CoRegConfig& cfg,
                                 const augment::AugmentPolicy& policy, int epoch, int direction) {
  const Eigen::Index n = data.size();
  const int c = data.num_classes();

  PseudoLabels out;
  out.assign.tags.assign(static_cast<std::size_t>(n), Tag::Partial);
  out.assign.w.assign(static_cast<std::size_t>(n), 1.0);
  out.assign.p.resize(n, c);

  // Teacher predictions on one weak view drive both the division losses and
  // the candidate rescaling.
  auto rng_div = stream(cfg, epoch, kDivView, direction);
  Matrix x_div = augment::apply_rows(data.base.features, augment::Mode::Weak, policy, rng_div);
  Matrix probs_div = teacher.predict_probs(x_div);

  std::vector<double> div_losses(static_cast<std::size_t>(n), 0.0);
  std::vector<Eigen::Index> fit_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.is_fewshot(i)) continue;
    div_losses[i] = division_loss(probs_div.row(i).transpose(), data.candidates.row(i)).value;
    fit_rows.push_back(i);
  }

  // GMM over min-max normalized losses; degenerate traces fall back to
  // all-Partial with w = 1.
  bool fitted = false;
  gmm::Gmm2 g;
  std::vector<double> norm(static_cast<std::size_t>(n), 0.0);
  if (fit_rows.size() >= 2) {
    double lo = div_losses[fit_rows[0]], hi = lo;
    for (Eigen::Index i : fit_rows) {
      lo = std::min(lo, div_losses[i]);
      hi = std::max(hi, div_losses[i]);
    }
    if (hi > lo) {
      std::vector<double> fit_vals;
      fit_vals.reserve(fit_rows.size());
      for (Eigen::Index i : fit_rows) {
        norm[i] = (div_losses[i] - lo) / (hi - lo);
        fit_vals.push_back(norm[i]);
      }
      try {
        g = gmm::fit_em(fit_vals);
        fitted = true;
      } catch (const gmm::degenerate_input_error&) {
        fitted = false;
      }
    }
  }
  out.stats.gmm_degenerate = !fitted;
  if (fitted) {
    out.stats.gmm_mu1 = g.mu1;
    out.stats.gmm_mu2 = g.mu2;
    out.stats.gmm_pi = g.pi;
    out.stats.tau_div = gmm::implied_tau(g, cfg.w_threshold);
    for (Eigen::Index i : fit_rows) {
      double w = gmm::posterior_clean(g, norm[i]);
      out.assign.w[i] = w;
      out.assign.tags[i] = w >= cfg.w_threshold ? Tag::Partial : Tag::Unlabeled;
    }
  }

  // Teacher K-view average feeds the unlabeled rows; the student's own K-view
  // average is the fusion partner everywhere.
  auto rng_tavg = stream(cfg, epoch, kTeacherAvg, direction);
  Matrix teacher_avg = k_view_average(teacher, data.base.features, cfg.weak_views, policy, rng_tavg);
  auto rng_savg = stream(cfg, epoch, kStudentAvg, direction);
  Matrix student_avg = k_view_average(student, data.base.features, cfg.weak_views, policy, rng_savg);

  int pseudo_hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector p_tilde;
    if (data.is_fewshot(i)) {
      p_tilde = one_hot(data.base.labels[i], c);
    } else {
      Vector p_teacher;
      if (out.assign.tags[i] == Tag::Partial) {
        bool fell_back = false;
        p_teacher =
            rescale_to_candidates(probs_div.row(i).transpose(), data.candidates.row(i), &fell_back);
        if (fell_back) ++out.stats.rescale_fallbacks;
      } else {
        p_teacher = teacher_avg.row(i).transpose();
      }
      Vector fused =
          fuse(p_teacher, student_avg.row(i).transpose(), out.assign.w[i], out.assign.tags[i]);
      p_tilde = sharpen(fused, cfg.sharpen_t);
    }
    out.assign.p.row(i) = p_tilde.transpose();
    if (argmax_lowest_tie(p_tilde) == data.base.labels[i]) ++pseudo_hits;
    if (out.assign.tags[i] == Tag::Partial) ++out.stats.n_partial;
    else ++out.stats.n_unlabeled;
  }
  out.stats.pseudo_acc = static_cast<double>(pseudo_hits) / static_cast<double>(n);
  return out;
}

EpochMetrics warmup_epoch(TrainState& state, const datagen::PartialDataset& data,
                          const CoRegConfig& cfg, int epoch) {
  const Eigen::Index n = data.size();
  EpochMetrics m;
  m.epoch = epoch;
  m.warmup = true;

  double loss_sum = 0.0;
  long loss_count = 0;
  for (int net_idx = 0; net_idx < 2; ++net_idx) {
    auto& net = state.pair.net(net_idx);
    auto rng_order = stream(cfg, epoch, kWarmOrder, net_idx);
    auto rng_view = stream(cfg, epoch, kWarmView, net_idx);
    auto order = shuffled_indices(n, rng_order);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      Matrix x(bsz, data.base.dim());
      for (std::size_t b = 0; b < bsz; ++b) x.row(b) = data.base.features.row(order[start + b]);
      Matrix xw = augment::apply_rows(x, augment::Mode::Weak, state.policy, rng_view);

      auto cache = net.forward(xw);
      require_finite_forward(cache, epoch, "warmup");
      Matrix probs = softmax_rows(cache.logits);
      Matrix dlogits(bsz, data.num_classes());
      for (std::size_t b = 0; b < bsz; ++b) {
        Eigen::Index i = order[start + b];
        ValueGrad vg = warmup_loss(probs.row(b).transpose(), data.candidates.row(i));
        loss_sum += vg.value;
        dlogits.row(b) =
            softmax_backward(probs.row(b).transpose(), vg.grad).transpose() / static_cast<double>(bsz);
      }
      loss_count += static_cast<long>(bsz);

      auto grads = nn::backward(net, cache, dlogits, Matrix());
      nn::sgd_step(net, state.opt(net_idx), grads, cfg.lr_at(epoch), cfg.momentum,
                   cfg.weight_decay);
      nn::ema_update(state.pair.ema(net_idx), net, cfg.ema_m);
    }
  }
  m.loss_warm = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  m.loss_total = m.loss_warm;
  return m;
}

EpochMetrics co_train_epoch(TrainState& state, const datagen::PartialDataset& data,
                            const CoRegConfig& cfg, int epoch) {
  if (epoch < cfg.warm_epochs)
    throw std::logic_error("co_train_epoch: warm-up is not completed at this epoch");
  const Eigen::Index n = data.size();
  const int c = data.num_classes();
  const double lr = cfg.lr_at(epoch);
  const bool use_proto = cfg.variant != Variant::NoProto && cfg.beta1 > 0.0;
  const auto select_mode = cfg.variant == Variant::SupCont ? fqueue::SelectMode::Supervised
                                                           : fqueue::SelectMode::NoiseTolerant;

  EpochMetrics m;
  m.epoch = epoch;

  double cr_sum = 0.0, prot_sum = 0.0, cont_sum = 0.0;
  long batch_count = 0;

  for (int direction = 0; direction < 2; ++direction) {
    const int student_idx = 1 - direction;
    // no_co_pl replaces the peer teacher with the student's own predictions
    // (its online network, not the momentum copy).
    const nn::DenseNetwork& teacher = cfg.variant == Variant::NoCoPL
                                          ? state.pair.net(student_idx)
                                          : state.pair.ema(direction);

    auto pl = build_pseudo_labels(teacher, state.pair.net(student_idx), data, cfg, state.policy,
                                  epoch, direction);
    m.dir[direction] = pl.stats;

    auto& student = state.pair.net(student_idx);
    auto& student_ema = state.pair.ema(student_idx);
    auto& queue = state.queues[static_cast<std::size_t>(student_idx)];
    auto& opt = state.opt(student_idx);

    auto rng_order = stream(cfg, epoch, kBatchOrder, direction);
    auto order = shuffled_indices(n, rng_order);
    if (cfg.variant == Variant::NoU) {
      std::erase_if(order, [&](Eigen::Index i) { return pl.assign.tags[i] != Tag::Partial; });
    }
    m.dir[direction].trained_samples = static_cast<int>(order.size());

    auto rng_strong = stream(cfg, epoch, kStrongView, direction);
    auto rng_weak = stream(cfg, epoch, kWeakView, direction);
    auto rng_partner = stream(cfg, epoch, kMixPartner, direction);
    auto rng_lambda = stream(cfg, epoch, kMixLambda, direction);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      const double inv_b = 1.0 / static_cast<double>(bsz);

      Matrix x(bsz, data.base.dim());
      for (std::size_t b = 0; b < bsz; ++b) x.row(b) = data.base.features.row(order[start + b]);
      Matrix xs = augment::apply_rows(x, augment::Mode::Strong, state.policy, rng_strong);
      Matrix xw = augment::apply_rows(x, augment::Mode::Weak, state.policy, rng_weak);

      // MixUp across the combined mini-batch, applied to the consistency
      // inputs only; the first argument always dominates.
      std::uniform_int_distribution<std::size_t> pick(0, bsz - 1);
      Matrix x_mix(bsz, x.cols());
      Matrix t_mix(bsz, c);
      for (std::size_t b = 0; b < bsz; ++b) {
        std::size_t partner = pick(rng_partner);
        double lam = augment::sample_beta(cfg.mixup_alpha, rng_lambda);
        double lp = std::max(lam, 1.0 - lam);
        x_mix.row(b) = lp * xs.row(b) + (1.0 - lp) * xs.row(partner);
        t_mix.row(b) = lp * pl.assign.p.row(order[start + b]) +
                       (1.0 - lp) * pl.assign.p.row(order[start + partner]);
      }

      auto cache_mix = student.forward(x_mix);
      require_finite_forward(cache_mix, epoch, "cotrain mix");
      Matrix probs_mix = softmax_rows(cache_mix.logits);
      Matrix dlogits = Matrix::Zero(bsz, c);
      double l_cr = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) {
        Tag tag = pl.assign.tags[order[start + b]];
        ValueGrad vg = consistency_loss(t_mix.row(b).transpose(), probs_mix.row(b).transpose(), tag);
        l_cr += vg.value * inv_b;
        dlogits.row(b) =
            softmax_backward(probs_mix.row(b).transpose(), vg.grad).transpose() * inv_b;
      }

      auto cache_s = student.forward(xs);
      require_finite_forward(cache_s, epoch, "cotrain strong");
      Matrix z_ema_w = student_ema.project(xw);
      Matrix z_ema_s = student_ema.project(xs);

      Matrix dz = Matrix::Zero(bsz, cfg.proj_dim);
      double l_prot = 0.0, l_cont = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) {
        Eigen::Index i = order[start + b];
        Tag tag = pl.assign.tags[i];
        Vector z = cache_s.projected.row(b).transpose();
        Vector p_tilde = pl.assign.p.row(i).transpose();
        if (use_proto) {
          ValueGrad pg = prototype_loss_grad_z(p_tilde, z, state.bank, tag, cfg.proto_t);
          l_prot += pg.value * inv_b;
          dz.row(b) += cfg.beta1 * inv_b * pg.grad.transpose();
        }
        if (cfg.beta2 > 0.0) {
          Vector fallback = z_ema_w.row(b).transpose();
          ValueGrad cg = contrastive_from_queue(z, queue, argmax_lowest_tie(p_tilde),
                                                tag == Tag::Partial, select_mode, &fallback,
                                                cfg.contrast_t);
          l_cont += cg.value * inv_b;
          dz.row(b) += cfg.beta2 * inv_b * cg.grad.transpose();
        }
      }

      if (!std::isfinite(l_cr) || !std::isfinite(l_prot) || !std::isfinite(l_cont)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " direction " << direction << " batch "
            << start / cfg.batch_size << ": cr=" << l_cr << " prot=" << l_prot
            << " cont=" << l_cont;
        throw numeric_error(msg.str());
      }

      auto grads = nn::backward(student, cache_mix, dlogits, Matrix());
      grads.add_scaled(nn::backward(student, cache_s, Matrix(), dz), 1.0);
      nn::sgd_step(student, opt, grads, lr, cfg.momentum, cfg.weight_decay);
      nn::ema_update(student_ema, student, cfg.ema_m);

      for (std::size_t b = 0; b < bsz; ++b) {
        Eigen::Index i = order[start + b];
        Vector p_tilde = pl.assign.p.row(i).transpose();
        if (use_proto && near_unit(z_ema_w.row(b)))
          update_prototypes(state.bank, z_ema_w.row(b).transpose(), p_tilde, cfg.proto_gamma);
        if (near_unit(z_ema_s.row(b)))
          queue.enqueue(z_ema_s.row(b).transpose(), argmax_lowest_tie(p_tilde),
                        pl.assign.tags[i] == Tag::Partial);
      }

      cr_sum += l_cr;
      prot_sum += l_prot;
      cont_sum += l_cont;
      ++batch_count;
    }
  }

  if (batch_count > 0) {
    m.loss_cr = cr_sum / static_cast<double>(batch_count);
    m.loss_prot = prot_sum / static_cast<double>(batch_count);
    m.loss_cont = cont_sum / static_cast<double>(batch_count);
  }
  m.loss_total = total_loss(m.loss_cr, m.loss_prot, m.loss_cont, cfg.beta1, cfg.beta2);
  m.queue_size[0] = state.queues[0].size();
  m.queue_size[1] = state.queues[1].size();
  return m;
}

}  // namespace coreg
