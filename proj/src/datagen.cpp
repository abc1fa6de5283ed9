#include "coreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coreg::datagen {

void LabeledDataset::validate() const {
  if (features.rows() == 0) throw std::invalid_argument("dataset is empty");
  if (features.cols() < 1) throw std::invalid_argument("feature dim must be >= 1");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw std::invalid_argument("labels length does not match feature rows");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (static_cast<int>(class_names.size()) != num_classes)
    throw std::invalid_argument("class_names must have exactly C entries");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
}

void PartialDataset::validate() const {
  base.validate();
  if (candidates.rows() != base.size() || candidates.cols() != base.num_classes)
    throw std::invalid_argument("candidate matrix shape mismatch");
  if (!fewshot_mask.empty() && static_cast<Eigen::Index>(fewshot_mask.size()) != base.size())
    throw std::invalid_argument("fewshot_mask length mismatch");
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    int row_sum = 0;
    for (int j = 0; j < candidates.cols(); ++j) {
      int v = candidates(i, j);
      if (v != 0 && v != 1) throw std::invalid_argument("candidate entries must be 0/1");
      row_sum += v;
    }
    if (row_sum < 1) throw std::invalid_argument("candidate row has no entries set");
    if (is_fewshot(i)) {
      if (row_sum != 1 || candidates(i, base.labels[i]) != 1)
        throw std::invalid_argument("fewshot row must be the ground-truth singleton");
    }
  }
}

static std::vector<std::string> default_class_names(int c) {
  std::vector<std::string> names;
  names.reserve(c);
  for (int j = 0; j < c; ++j) names.push_back("class_" + std::to_string(j));
  return names;
}

LabeledDataset make_blobs(int n_per_class, int num_classes, int dim, double spread,
                          std::uint64_t seed) {
  if (n_per_class < 1 || num_classes < 1 || dim < 1)
    throw std::invalid_argument("make_blobs: counts must be >= 1");
  if (!(spread > 0.0)) throw std::invalid_argument("make_blobs: spread must be > 0");

  const double radius = 2.0;
  Matrix centers = Matrix::Zero(num_classes, dim);
  if (num_classes <= dim) {
    // Scaled standard basis: a regular simplex with pairwise distance radius*sqrt(2).
    for (int c = 0; c < num_classes; ++c) centers(c, c) = radius;
  } else if (dim >= 2) {
    for (int c = 0; c < num_classes; ++c) {
      double ang = 2.0 * M_PI * c / num_classes;
      centers(c, 0) = radius * std::cos(ang);
      centers(c, 1) = radius * std::sin(ang);
    }
  } else {
    for (int c = 0; c < num_classes; ++c) centers(c, 0) = radius * c;
  }
  if (dim >= 2) {
    // Fixed pseudorandom rotation per (C, dim) spreads class information across
    // all coordinates instead of leaving each class on its own axis. The layout
    // is part of the generator definition, so different seeds sample the same
    // class distribution.
    auto rot_rng = make_rng(0xC0FFEEULL ^ (static_cast<std::uint64_t>(num_classes) << 32) ^
                                static_cast<std::uint64_t>(dim),
                            /*tag=*/0x5072);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = gauss(rot_rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    centers = centers * q.transpose();
  }

  const Eigen::Index n = static_cast<Eigen::Index>(n_per_class) * num_classes;
  LabeledDataset ds;
  ds.features.resize(n, dim);
  ds.labels.resize(n);
  ds.num_classes = num_classes;
  ds.class_names = default_class_names(num_classes);

  auto rng = make_rng(seed, /*tag=*/0xB10B5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Classes interleaved round-robin so any prefix stays balanced.
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = static_cast<int>(i % num_classes);
    ds.labels[i] = c;
    for (int d = 0; d < dim; ++d) ds.features(i, d) = centers(c, d) + spread * gauss(rng);
  }
  return ds;
}

LabeledDataset make_rings(int n_per_class, int num_classes, double noise, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("make_rings: need at least 2 classes");
  if (n_per_class < 1) throw std::invalid_argument("make_rings: n_per_class must be >= 1");
  if (noise < 0.0) throw std::invalid_argument("make_rings: noise must be >= 0");

  const Eigen::Index n = static_cast<Eigen::Index>(n_per_class) * num_classes;
  LabeledDataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  ds.num_classes = num_classes;
  ds.class_names = default_class_names(num_classes);

  auto rng = make_rng(seed, /*tag=*/0x51465);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = static_cast<int>(i % num_classes);
    double r = static_cast<double>(c + 1);
    double a = angle(rng);
    ds.labels[i] = c;
    ds.features(i, 0) = r * std::cos(a) + noise * gauss(rng);
    ds.features(i, 1) = r * std::sin(a) + noise * gauss(rng);
  }
  return ds;
}

PartialDataset synthesize_partial(const LabeledDataset& ds, double q, std::uint64_t seed) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("synthesize_partial: q must be in [0,1]");
  ds.validate();

  PartialDataset pd;
  pd.base = ds;
  pd.candidates = IntMatrix::Zero(ds.size(), ds.num_classes);
  pd.fewshot_mask.assign(static_cast<std::size_t>(ds.size()), 0);

  auto rng = make_rng(seed, /*tag=*/0x9A27);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    pd.candidates(i, ds.labels[i]) = 1;
    for (int j = 0; j < ds.num_classes; ++j) {
      if (j == ds.labels[i]) continue;
      if (unif(rng) < q) pd.candidates(i, j) = 1;
    }
  }
  return pd;
}

NoiseReport inject_noise(const PartialDataset& pd, double eta, std::uint64_t seed) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("inject_noise: eta must be in [0,1]");
  pd.validate();

  NoiseReport report;
  report.data = pd;
  auto& cand = report.data.candidates;
  const int c = pd.num_classes();

  auto rng = make_rng(seed, /*tag=*/0xE7A);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < pd.size(); ++i) {
    if (pd.is_fewshot(i)) continue;
    if (!(unif(rng) < eta)) continue;
    int truth = pd.base.labels[i];
    if (cand(i, truth) != 1) continue;  // already noisy, nothing to substitute

    std::vector<int> non_candidates;
    for (int j = 0; j < c; ++j)
      if (cand(i, j) == 0) non_candidates.push_back(j);
    if (non_candidates.empty()) {
      ++report.skipped_full_rows;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, non_candidates.size() - 1);
    cand(i, truth) = 0;
    cand(i, non_candidates[pick(rng)]) = 1;
  }
  return report;
}

// --- simulated annotator ensemble ------------------------------------------

void Annotator::fit(const Matrix& probe_x, const std::vector<int>& probe_y, int num_classes) {
  const Eigen::Index n = probe_x.rows();
  const Eigen::Index d = probe_x.cols();
  if (n == 0) throw std::invalid_argument("annotator probe split is empty");

  auto rng = make_rng(seed, /*tag=*/0xA0707);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  mask.assign(static_cast<std::size_t>(d), 1);
  for (Eigen::Index j = 0; j < d; ++j)
    if (unif(rng) < dropout) mask[j] = 0;
  // A fully blind annotator degenerates to a constant predictor; keep one coordinate.
  if (std::count(mask.begin(), mask.end(), std::uint8_t{1}) == 0) mask[derive_seed(seed, 1) % d] = 1;

  Matrix x = probe_x;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      x(i, j) = mask[j] ? x(i, j) + noise_scale * gauss(rng) : 0.0;

  // Multinomial logistic regression by full-batch gradient descent.
  weights = Matrix::Zero(d, num_classes);
  bias = Vector::Zero(num_classes);
  const int iters = 200;
  const double lr = 0.5;
  for (int it = 0; it < iters; ++it) {
    Matrix logits = (x * weights).rowwise() + bias.transpose();
    Matrix probs = softmax_rows(logits);
    for (Eigen::Index i = 0; i < n; ++i) probs(i, probe_y[i]) -= 1.0;
    probs /= static_cast<double>(n);
    weights -= lr * (x.transpose() * probs);
    bias -= lr * probs.colwise().sum().transpose();
  }
  fitted = true;
}

int Annotator::predict(const Vector& x) const {
  if (!fitted) throw std::logic_error("annotator is not fitted");
  Vector v = x;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (!mask[j]) v[j] = 0.0;
  Vector logits = weights.transpose() * v + bias;
  return argmax_lowest_tie(logits);
}

double Annotator::accuracy(const LabeledDataset& ds) const {
  int hits = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (predict(ds.features.row(i).transpose()) == ds.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

AnnotatorEnsemble AnnotatorEnsemble::make(int d, double dropout, double noise_scale,
                                          std::uint64_t seed, double probe_fraction) {
  if (d < 1) throw std::invalid_argument("ensemble needs at least one annotator");
  if (!(probe_fraction > 0.0 && probe_fraction <= 1.0))
    throw std::invalid_argument("probe_fraction must be in (0,1]");
  AnnotatorEnsemble ens;
  ens.seed = seed;
  ens.probe_fraction = probe_fraction;
  ens.annotators.resize(d);
  for (int k = 0; k < d; ++k) {
    ens.annotators[k].dropout = dropout;
    ens.annotators[k].noise_scale = noise_scale;
    ens.annotators[k].seed = derive_seed(seed, 0xA770, static_cast<std::uint64_t>(k));
  }
  return ens;
}

bool AnnotatorEnsemble::fitted() const {
  if (annotators.empty()) return false;
  return std::all_of(annotators.begin(), annotators.end(),
                     [](const Annotator& a) { return a.fitted; });
}

void AnnotatorEnsemble::fit(const LabeledDataset& ds) {
  ds.validate();
  const Eigen::Index n = ds.size();
  Eigen::Index probe_n = std::max<Eigen::Index>(ds.num_classes,
                                                static_cast<Eigen::Index>(probe_fraction * n));

  // Stratified probe split: equal per-class draws keep annotator intercepts
  // from inheriting sampling imbalance.
  std::vector<std::vector<Eigen::Index>> by_class(ds.num_classes);
  for (Eigen::Index i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
  auto rng = make_rng(seed, /*tag=*/0x9720);
  Eigen::Index per_class = std::max<Eigen::Index>(1, probe_n / ds.num_classes);
  std::vector<Eigen::Index> idx;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(per_class, rows.size()); ++k)
      idx.push_back(rows[k]);
  }

  Matrix probe_x(static_cast<Eigen::Index>(idx.size()), ds.dim());
  std::vector<int> probe_y(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    probe_x.row(static_cast<Eigen::Index>(i)) = ds.features.row(idx[i]);
    probe_y[i] = ds.labels[idx[i]];
  }
  for (auto& a : annotators) a.fit(probe_x, probe_y, ds.num_classes);
}

PartialDataset ensemble_annotate(const LabeledDataset& ds, const AnnotatorEnsemble& ens) {
  if (!ens.fitted()) throw std::logic_error("ensemble_annotate: ensemble is not fitted");
  ds.validate();

  PartialDataset pd;
  pd.base = ds;
  pd.candidates = IntMatrix::Zero(ds.size(), ds.num_classes);
  pd.fewshot_mask.assign(static_cast<std::size_t>(ds.size()), 0);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    Vector x = ds.features.row(i).transpose();
    for (const auto& a : ens.annotators) pd.candidates(i, a.predict(x)) = 1;
  }
  return pd;
}

PartialStats partial_stats(const PartialDataset& pd) {
  pd.validate();
  PartialStats st;
  const Eigen::Index n = pd.size();
  long total = 0;
  long hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pd.candidates(i, pd.base.labels[i]) == 1) ++hits;
    total += pd.candidates.row(i).sum();
  }
  st.partial_acc = static_cast<double>(hits) / static_cast<double>(n);
  st.avg_num = static_cast<double>(total) / static_cast<double>(n);
  return st;
}

PartialDataset apply_fewshot(const PartialDataset& pd, int shots_per_class, std::uint64_t seed) {
  if (shots_per_class < 0) throw std::invalid_argument("shots_per_class must be >= 0");
  PartialDataset out = pd;
  if (out.fewshot_mask.empty()) out.fewshot_mask.assign(static_cast<std::size_t>(pd.size()), 0);
  if (shots_per_class == 0) return out;

  const int c = pd.num_classes();
  std::vector<std::vector<Eigen::Index>> by_class(c);
  for (Eigen::Index i = 0; i < pd.size(); ++i) by_class[pd.base.labels[i]].push_back(i);

  auto rng = make_rng(seed, /*tag=*/0xFE57);
  for (int j = 0; j < c; ++j) {
    auto& rows = by_class[j];
    std::shuffle(rows.begin(), rows.end(), rng);
    int take = std::min<int>(shots_per_class, static_cast<int>(rows.size()));
    for (int k = 0; k < take; ++k) {
      Eigen::Index i = rows[k];
      out.fewshot_mask[i] = 1;
      out.candidates.row(i).setZero();
      out.candidates(i, j) = 1;
    }
  }
  return out;
}

}  // namespace coreg::datagen
