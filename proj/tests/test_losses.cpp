#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coreg/losses.hpp"
#include "oracle_helpers.hpp"

using namespace coreg;

namespace {

Eigen::VectorXi cand(std::initializer_list<int> bits) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(bits.size()));
  Eigen::Index i = 0;
  for (int b : bits) v[i++] = b;
  return v;
}

Vector dist(std::initializer_list<double> vals) {
  Vector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("warmup loss: all-ones candidates, uniform probs, C=10") {
  Vector probs = Vector::Constant(10, 0.1);
  Eigen::VectorXi y = Eigen::VectorXi::Ones(10);
  auto vg = warmup_loss(probs, y);
  // L_sup = 0, L_neg = -log 10.
  CHECK(vg.value == doctest::Approx(-std::log(10.0)).epsilon(1e-9));
}

TEST_CASE("warmup loss: one-hot probs on a candidate is zero") {
  Vector probs = dist({1.0, 0.0, 0.0});
  auto vg = warmup_loss(probs, cand({1, 0, 1}));
  CHECK(vg.value == doctest::Approx(0.0));
}

TEST_CASE("warmup loss: worked partial cross-entropy value") {
  Vector probs = dist({0.5, 0.3, 0.2});
  auto vg = warmup_loss(probs, cand({1, 0, 1}));
  double l_sup = -std::log(0.7);
  double l_neg = 0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2);
  CHECK(vg.value == doctest::Approx(l_sup + l_neg).epsilon(1e-12));
  CHECK(l_sup == doctest::Approx(0.356675).epsilon(1e-5));
}

TEST_CASE("warmup loss rejects an empty candidate row") {
  Vector probs = dist({0.5, 0.5});
  CHECK_THROWS_AS(warmup_loss(probs, cand({0, 0})), std::invalid_argument);
}

TEST_CASE("division loss: worked example picks the best candidate") {
  auto vg = division_loss(dist({0.7, 0.2, 0.1}), cand({0, 1, 1}));
  CHECK(vg.value == doctest::Approx(-std::log(0.2)).epsilon(1e-12));
  CHECK(vg.value == doctest::Approx(1.609438).epsilon(1e-5));
}

TEST_CASE("division loss: all-ones candidates reduce to max-prob NLL") {
  auto vg = division_loss(dist({0.1, 0.7, 0.2}), cand({1, 1, 1}));
  CHECK(vg.value == doctest::Approx(-std::log(0.7)).epsilon(1e-12));
}

TEST_CASE("division loss: one-hot probs on a candidate is zero") {
  auto vg = division_loss(dist({0.0, 1.0, 0.0}), cand({0, 1, 0}));
  CHECK(vg.value == doctest::Approx(0.0));
}

TEST_CASE("division loss tie-break picks the lowest index") {
  auto vg = division_loss(dist({0.4, 0.4, 0.2}), cand({1, 1, 0}));
  CHECK(vg.grad[0] != 0.0);
  CHECK(vg.grad[1] == 0.0);
}

TEST_CASE("rescale: all-ones candidates leave probs unchanged") {
  Vector probs = dist({0.5, 0.3, 0.2});
  Vector out = rescale_to_candidates(probs, cand({1, 1, 1}));
  CHECK((out - probs).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rescale: singleton candidate set gives one-hot") {
  Vector out = rescale_to_candidates(dist({0.5, 0.3, 0.2}), cand({0, 1, 0}));
  CHECK(out[1] == doctest::Approx(1.0));
  CHECK(out[0] == 0.0);
}

TEST_CASE("rescale: worked example") {
  Vector out = rescale_to_candidates(dist({0.5, 0.3, 0.2}), cand({1, 1, 0}));
  CHECK(out[0] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(out[2] == 0.0);
}

TEST_CASE("rescale: zero candidate mass falls back to uniform over candidates") {
  bool fell_back = false;
  Vector out = rescale_to_candidates(dist({0.0, 0.0, 1.0}), cand({1, 1, 0}), &fell_back);
  CHECK(fell_back);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.5));
}

TEST_CASE("fuse endpoints and unlabeled average") {
  Vector a = dist({1.0, 0.0});
  Vector b = dist({0.0, 1.0});
  CHECK((fuse(a, b, 1.0, Tag::Partial) - a).norm() == 0.0);
  CHECK((fuse(a, b, 0.0, Tag::Partial) - b).norm() == 0.0);
  Vector u = fuse(a, b, 0.123, Tag::Unlabeled);
  CHECK(u[0] == doctest::Approx(0.5));
  CHECK(u[1] == doctest::Approx(0.5));
}

TEST_CASE("fuse is affine in w") {
  std::mt19937_64 rng(1);
  Vector a = oracle::random_distribution(5, rng);
  Vector b = oracle::random_distribution(5, rng);
  Vector mid = fuse(a, b, 0.5, Tag::Partial);
  Vector expected = 0.5 * (fuse(a, b, 1.0, Tag::Partial) + fuse(a, b, 0.0, Tag::Partial));
  CHECK((mid - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sharpen: uniform stays uniform, T=1 is identity") {
  Vector u = Vector::Constant(4, 0.25);
  CHECK((sharpen(u, 0.5) - u).cwiseAbs().maxCoeff() < 1e-12);
  std::mt19937_64 rng(2);
  Vector p = oracle::random_distribution(6, rng);
  CHECK((sharpen(p, 1.0) - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sharpen worked example: (0.8,0.2) at T=0.5") {
  Vector out = sharpen(dist({0.8, 0.2}), 0.5);
  CHECK(out[0] == doctest::Approx(0.941176).epsilon(1e-5));
  CHECK(out[1] == doctest::Approx(0.058824).epsilon(1e-5));
}

TEST_CASE("sharpen preserves argmax over random distributions") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t_pick(0.05, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    Vector p = oracle::random_distribution(7, rng);
    double t = t_pick(rng);
    CHECK(argmax_lowest_tie(sharpen(p, t)) == argmax_lowest_tie(p));
  }
}

TEST_CASE("consistency loss: unlabeled with matching distributions is zero") {
  Vector p = dist({0.6, 0.4});
  CHECK(consistency_loss(p, p, Tag::Unlabeled).value == doctest::Approx(0.0));
}

TEST_CASE("consistency loss: worked partial cross-entropy") {
  Vector p_tilde = dist({1.0, 0.0});
  Vector f = dist({0.5, 0.5});
  CHECK(consistency_loss(p_tilde, f, Tag::Partial).value ==
        doctest::Approx(0.693147).epsilon(1e-5));
}

TEST_CASE("consistency loss: CE of a distribution with itself is its entropy") {
  std::mt19937_64 rng(4);
  Vector p = oracle::random_distribution(5, rng);
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) entropy -= p[j] * std::log(p[j]);
  CHECK(consistency_loss(p, p, Tag::Partial).value == doctest::Approx(entropy).epsilon(1e-9));
}

TEST_CASE("prototype similarity: orthogonal z gives uniform") {
  PrototypeBank bank;
  bank.prototypes = Matrix::Zero(3, 4);
  bank.prototypes(0, 0) = 1.0;
  bank.prototypes(1, 1) = 1.0;
  bank.prototypes(2, 2) = 1.0;
  Vector z = Vector::Zero(4);
  z[3] = 1.0;
  Vector s = prototype_similarity(z, bank);
  for (int j = 0; j < 3; ++j) CHECK(s[j] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("prototype similarity: alignment with one prototype wins the argmax") {
  PrototypeBank bank;
  bank.prototypes = Matrix::Zero(3, 4);
  bank.prototypes(0, 0) = 1.0;
  bank.prototypes(1, 1) = 1.0;
  bank.prototypes(2, 2) = 1.0;
  Vector z = Vector::Zero(4);
  z[1] = 1.0;
  CHECK(argmax_lowest_tie(prototype_similarity(z, bank)) == 1);
}

TEST_CASE("prototype similarity: worked softmax of dots (1, 0, -1)") {
  PrototypeBank bank;
  bank.prototypes = Matrix::Zero(3, 2);
  bank.prototypes(0, 0) = 1.0;
  bank.prototypes(1, 1) = 1.0;
  bank.prototypes(2, 0) = -1.0;
  Vector z = dist({1.0, 0.0});
  Vector s = prototype_similarity(z, bank);
  CHECK(s[0] == doctest::Approx(0.66524).epsilon(1e-4));
  CHECK(s[1] == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(s[2] == doctest::Approx(0.09003).epsilon(1e-4));
}

TEST_CASE("prototype loss: identical distributions are zero in both branches") {
  std::mt19937_64 rng(5);
  Vector p = oracle::random_distribution(4, rng);
  CHECK(prototype_loss(p, p, Tag::Partial, 0.7).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(prototype_loss(p, p, Tag::Unlabeled, 0.7).value == doctest::Approx(0.0));
}

TEST_CASE("prototype loss: unlabeled worked example") {
  CHECK(prototype_loss(dist({1.0, 0.0}), dist({0.5, 0.5}), Tag::Unlabeled, 1.0).value ==
        doctest::Approx(0.5));
}

TEST_CASE("prototype loss: partial worked KL at T'=1") {
  double v = prototype_loss(dist({0.9, 0.1}), dist({0.5, 0.5}), Tag::Partial, 1.0).value;
  CHECK(v == doctest::Approx(0.368064).epsilon(1e-5));
}

TEST_CASE("prototype update endpoints") {
  std::mt19937_64 rng(6);
  auto bank = PrototypeBank::init(3, 4, 7);
  auto before = bank;
  Vector z = oracle::random_unit(4, rng);
  Vector p = dist({0.1, 0.8, 0.1});

  update_prototypes(bank, z, p, 1.0);
  CHECK(bank.prototypes == before.prototypes);

  update_prototypes(bank, z, p, 0.0);
  CHECK((bank.prototypes.row(1).transpose() - z).norm() < 1e-12);
  CHECK(bank.prototypes.row(0) == before.prototypes.row(0));
}

TEST_CASE("prototype update worked midpoint with renormalization") {
  PrototypeBank bank;
  bank.prototypes = Matrix::Zero(2, 2);
  bank.prototypes(0, 0) = 1.0;
  bank.prototypes(1, 1) = 1.0;
  Vector z = dist({0.0, 1.0});
  update_prototypes(bank, z, dist({1.0, 0.0}), 0.5);
  double r = std::sqrt(2.0) / 2.0;
  CHECK(bank.prototypes(0, 0) == doctest::Approx(r).epsilon(1e-12));
  CHECK(bank.prototypes(0, 1) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("prototypes stay unit-norm under random updates") {
  std::mt19937_64 rng(8);
  auto bank = PrototypeBank::init(5, 8, 9);
  std::uniform_real_distribution<double> g_pick(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    update_prototypes(bank, oracle::random_unit(8, rng), oracle::random_distribution(5, rng),
                      g_pick(rng));
    for (int c = 0; c < 5; ++c)
      CHECK(std::abs(bank.prototypes.row(c).norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("contrastive loss: one positive and no negatives is exactly zero") {
  std::mt19937_64 rng(10);
  Vector z = oracle::random_unit(6, rng);
  Vector zp = oracle::random_unit(6, rng);
  auto vg = contrastive_loss(z, {zp}, {}, 0.3);
  CHECK(vg.value == doctest::Approx(0.0));
}

TEST_CASE("contrastive loss: worked two-point example") {
  Vector z = dist({1.0, 0.0});
  Vector zp = dist({1.0, 0.0});
  Vector zn = dist({-1.0, 0.0});
  auto vg = contrastive_loss(z, {zp}, {zn}, 1.0);
  CHECK(vg.value == doctest::Approx(0.126928).epsilon(1e-5));
}

TEST_CASE("duplicating negatives increases the loss monotonically") {
  std::mt19937_64 rng(11);
  Vector z = oracle::random_unit(5, rng);
  Vector zp = oracle::random_unit(5, rng);
  Vector zn = oracle::random_unit(5, rng);
  double prev = -1.0;
  for (int k = 1; k <= 4; ++k) {
    std::vector<Vector> negs(static_cast<std::size_t>(k), zn);
    double v = contrastive_loss(z, {zp}, negs, 0.5).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("contrastive loss with empty positives is a contract violation") {
  Vector z = dist({1.0, 0.0});
  CHECK_THROWS_AS(contrastive_loss(z, {}, {z}, 1.0), std::logic_error);
}

TEST_CASE("queue-backed contrastive path equals the list path") {
  std::mt19937_64 rng(12);
  fqueue::FeatureQueue q(32);
  std::uniform_int_distribution<int> label_pick(0, 3);
  std::bernoulli_distribution coin(0.6);
  for (int i = 0; i < 32; ++i) q.enqueue(oracle::random_unit(5, rng), label_pick(rng), coin(rng));

  for (int rep = 0; rep < 20; ++rep) {
    Vector z = oracle::random_unit(5, rng);
    Vector fb = oracle::random_unit(5, rng);
    int anchor = label_pick(rng);
    bool conf = coin(rng);
    for (auto mode : {fqueue::SelectMode::NoiseTolerant, fqueue::SelectMode::Supervised}) {
      auto sel = q.select_pos_neg(anchor, conf, mode);
      if (sel.positives.empty()) sel.positives.push_back(fb);
      auto direct = contrastive_loss(z, sel.positives, sel.negatives, 0.2);
      auto fused = contrastive_from_queue(z, q, anchor, conf, mode, &fb, 0.2);
      CHECK(fused.value == doctest::Approx(direct.value).epsilon(1e-12));
      CHECK((fused.grad - direct.grad).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("total loss weighting") {
  CHECK(total_loss(1.0, 5.0, 7.0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK(total_loss(0.0, 0.0, 0.0, 0.3, 0.7) == doctest::Approx(0.0));
  CHECK(total_loss(1.0, 0.5, 0.25, 0.5, 0.5) == doctest::Approx(1.375));
}

TEST_CASE("distributions produced by the pipeline stay normalized") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> w_pick(0.0, 1.0);
  auto bank = PrototypeBank::init(6, 8, 14);
  for (int rep = 0; rep < 1000; ++rep) {
    Vector probs = oracle::random_distribution(6, rng);
    Eigen::VectorXi y = Eigen::VectorXi::Zero(6);
    std::uniform_int_distribution<int> idx(0, 5);
    y[idx(rng)] = 1;
    y[idx(rng)] = 1;
    Vector rescaled = rescale_to_candidates(probs, y);
    Vector fused = fuse(rescaled, oracle::random_distribution(6, rng), w_pick(rng),
                        rep % 2 == 0 ? Tag::Partial : Tag::Unlabeled);
    Vector sharp = sharpen(fused, 0.5);
    Vector sim = prototype_similarity(oracle::random_unit(8, rng), bank);
    for (const Vector* p : {&rescaled, &fused, &sharp, &sim}) {
      CHECK(std::abs(p->sum() - 1.0) <= 1e-9);
      CHECK(p->minCoeff() >= 0.0);
    }
    // Rescaled rows put no mass outside the candidate set; fusion with weight w
    // bounds non-candidate mass by 1-w.
    for (Eigen::Index j = 0; j < 6; ++j)
      if (!y[j]) CHECK(rescaled[j] == 0.0);
  }
}

// --- gradient checks through a real network ---------------------------------

namespace {

nn::DenseNetwork grad_net(std::uint64_t seed) {
  nn::NetworkShape s;
  s.input_dim = 5;
  s.hidden = {6, 6};
  s.num_classes = 4;
  s.proj_dim = 4;
  return nn::DenseNetwork::init(s, seed);
}

Matrix grad_batch(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(3, 5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) x(i, j) = gauss(rng);
  return x;
}

}  // namespace

TEST_CASE("warmup loss gradient matches finite differences through the net") {
  auto net = grad_net(20);
  Matrix batch = grad_batch(21);
  Eigen::VectorXi y = cand({1, 0, 1, 0});

  auto loss_fn = [&](const nn::ForwardCache& c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < c.logits.rows(); ++i)
      total += warmup_loss(softmax(c.logits.row(i).transpose()), y).value;
    return total;
  };
  auto cache = net.forward(batch);
  Matrix dlogits(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i) {
    Vector probs = softmax(cache.logits.row(i).transpose());
    dlogits.row(i) = softmax_backward(probs, warmup_loss(probs, y).grad).transpose();
  }
  auto grads = nn::backward(net, cache, dlogits, Matrix());
  CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
}

TEST_CASE("division loss gradient matches finite differences") {
  auto net = grad_net(22);
  Matrix batch = grad_batch(23);
  Eigen::VectorXi y = cand({0, 1, 1, 0});

  auto loss_fn = [&](const nn::ForwardCache& c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < c.logits.rows(); ++i)
      total += division_loss(softmax(c.logits.row(i).transpose()), y).value;
    return total;
  };
  auto cache = net.forward(batch);
  Matrix dlogits(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i) {
    Vector probs = softmax(cache.logits.row(i).transpose());
    dlogits.row(i) = softmax_backward(probs, division_loss(probs, y).grad).transpose();
  }
  auto grads = nn::backward(net, cache, dlogits, Matrix());
  CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
}

TEST_CASE("consistency loss gradients match finite differences in both branches") {
  std::mt19937_64 rng(24);
  for (Tag tag : {Tag::Partial, Tag::Unlabeled}) {
    auto net = grad_net(25);
    Matrix batch = grad_batch(26);
    Vector p_tilde = oracle::random_distribution(4, rng);

    auto loss_fn = [&](const nn::ForwardCache& c) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < c.logits.rows(); ++i)
        total += consistency_loss(p_tilde, softmax(c.logits.row(i).transpose()), tag).value;
      return total;
    };
    auto cache = net.forward(batch);
    Matrix dlogits(3, 4);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Vector probs = softmax(cache.logits.row(i).transpose());
      dlogits.row(i) = softmax_backward(probs, consistency_loss(p_tilde, probs, tag).grad).transpose();
    }
    auto grads = nn::backward(net, cache, dlogits, Matrix());
    CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
  }
}

TEST_CASE("prototype loss gradients match finite differences in both branches") {
  std::mt19937_64 rng(27);
  auto bank = PrototypeBank::init(4, 4, 28);
  for (Tag tag : {Tag::Partial, Tag::Unlabeled}) {
    auto net = grad_net(29);
    Matrix batch = grad_batch(30);
    Vector p_tilde = oracle::random_distribution(4, rng);

    auto loss_fn = [&](const nn::ForwardCache& c) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < c.projected.rows(); ++i)
        total += prototype_loss(p_tilde, prototype_similarity(c.projected.row(i).transpose(), bank),
                                tag, 0.5)
                     .value;
      return total;
    };
    auto cache = net.forward(batch);
    Matrix dz(3, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
      dz.row(i) =
          prototype_loss_grad_z(p_tilde, cache.projected.row(i).transpose(), bank, tag, 0.5)
              .grad.transpose();
    auto grads = nn::backward(net, cache, Matrix(), dz);
    CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
  }
}

TEST_CASE("contrastive loss gradient matches finite differences") {
  std::mt19937_64 rng(31);
  auto net = grad_net(32);
  Matrix batch = grad_batch(33);
  std::vector<Vector> pos = {oracle::random_unit(4, rng), oracle::random_unit(4, rng)};
  std::vector<Vector> neg = {oracle::random_unit(4, rng), oracle::random_unit(4, rng),
                             oracle::random_unit(4, rng)};

  auto loss_fn = [&](const nn::ForwardCache& c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < c.projected.rows(); ++i)
      total += contrastive_loss(c.projected.row(i).transpose(), pos, neg, 0.3).value;
    return total;
  };
  auto cache = net.forward(batch);
  Matrix dz(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i)
    dz.row(i) = contrastive_loss(cache.projected.row(i).transpose(), pos, neg, 0.3).grad.transpose();
  auto grads = nn::backward(net, cache, Matrix(), dz);
  CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
}

TEST_CASE("total objective gradient matches finite differences") {
  std::mt19937_64 rng(34);
  auto net = grad_net(35);
  Matrix batch = grad_batch(36);
  auto bank = PrototypeBank::init(4, 4, 37);
  Vector p_tilde = oracle::random_distribution(4, rng);
  std::vector<Vector> pos = {oracle::random_unit(4, rng)};
  std::vector<Vector> neg = {oracle::random_unit(4, rng), oracle::random_unit(4, rng)};
  const double beta1 = 0.5, beta2 = 0.3;
  const Tag tag = Tag::Partial;

  auto loss_fn = [&](const nn::ForwardCache& c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < c.logits.rows(); ++i) {
      Vector z = c.projected.row(i).transpose();
      double l_cr = consistency_loss(p_tilde, softmax(c.logits.row(i).transpose()), tag).value;
      double l_prot = prototype_loss(p_tilde, prototype_similarity(z, bank), tag, 0.5).value;
      double l_cont = contrastive_loss(z, pos, neg, 0.3).value;
      total += total_loss(l_cr, l_prot, l_cont, beta1, beta2);
    }
    return total;
  };
  auto cache = net.forward(batch);
  Matrix dlogits(3, 4), dz(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i) {
    Vector probs = softmax(cache.logits.row(i).transpose());
    Vector z = cache.projected.row(i).transpose();
    dlogits.row(i) = softmax_backward(probs, consistency_loss(p_tilde, probs, tag).grad).transpose();
    dz.row(i) = (beta1 * prototype_loss_grad_z(p_tilde, z, bank, tag, 0.5).grad +
                 beta2 * contrastive_loss(z, pos, neg, 0.3).grad)
                    .transpose();
  }
  auto grads = nn::backward(net, cache, dlogits, Matrix());
  grads.add_scaled(nn::backward(net, cache, Matrix(), dz), 1.0);
  CHECK(oracle::max_grad_rel_error(net, batch, loss_fn, grads) <= 1e-4);
}

TEST_CASE("weak_average equals a replayed two-view oracle") {
  auto net = grad_net(38);
  augment::AugmentPolicy policy;
  policy.dim_range.assign(5, 1.0);
  Vector x = grad_batch(39).row(0).transpose();

  std::mt19937_64 rng_a(40), rng_b(40);
  Vector avg = weak_average(net, x, 2, policy, rng_a);
  Vector v1 = augment::apply(x, augment::Mode::Weak, policy, rng_b);
  Vector v2 = augment::apply(x, augment::Mode::Weak, policy, rng_b);
  Vector expected = 0.5 * (net.predict_probs(v1.transpose()).row(0).transpose() +
                           net.predict_probs(v2.transpose()).row(0).transpose());
  CHECK((avg - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("weak_average with K=1 and an identity policy equals the plain prediction") {
  auto net = grad_net(41);
  augment::AugmentPolicy policy;
  policy.weak_jitter_frac = 0.0;
  policy.dim_range.assign(5, 1.0);
  Vector x = grad_batch(42).row(0).transpose();
  std::mt19937_64 rng(43);
  Vector avg = weak_average(net, x, 1, policy, rng);
  CHECK((avg - net.predict_probs(x.transpose()).row(0).transpose()).cwiseAbs().maxCoeff() <
        1e-15);
}
