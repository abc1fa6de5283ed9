#include "coreg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace coreg::harness {

using nlohmann::json;

void DatasetSpec::validate() const {
  if (generator != "blobs" && generator != "rings" && generator != "file")
    throw config_error("dataset.generator must be blobs, rings, or file");
  if (generator == "file") {
    if (path.empty()) throw config_error("dataset.path required for generator=file");
    if (corruption != "none") throw config_error("file datasets are used as-is; set corruption=none");
    return;
  }
  if (n_per_class < 1 || num_classes < 1 || dim < 1 || test_n_per_class < 1)
    throw config_error("dataset counts must be >= 1");
  if (corruption != "synthetic" && corruption != "ensemble" && corruption != "none")
    throw config_error("dataset.corruption must be synthetic, ensemble, or none");
  if (q < 0.0 || q > 1.0 || eta < 0.0 || eta > 1.0)
    throw config_error("q and eta must be in [0,1]");
  if (corruption == "ensemble" && ensemble_d < 1)
    throw config_error("ensemble_d must be >= 1");
}

void ExperimentConfig::validate() const {
  dataset.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw config_error("fraction must be in (0,1]");
  if (shots_per_class < 0) throw config_error("shots_per_class must be >= 0");
  try {
    coreg.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("coreg config: ") + e.what());
  }
}

namespace {

json coreg_to_json(const CoRegConfig& c) {
  return json{{"warm_epochs", c.warm_epochs},
              {"total_epochs", c.total_epochs},
              {"batch_size", c.batch_size},
              {"weak_views", c.weak_views},
              {"sharpen_t", c.sharpen_t},
              {"proto_t", c.proto_t},
              {"contrast_t", c.contrast_t},
              {"proto_gamma", c.proto_gamma},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"w_threshold", c.w_threshold},
              {"mixup_alpha", c.mixup_alpha},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"cosine_lr", c.cosine_lr},
              {"ema_m", c.ema_m},
              {"hidden", c.hidden},
              {"proj_dim", c.proj_dim},
              {"queue_capacity", c.queue_capacity},
              {"variant", variant_name(c.variant)},
              {"augment",
               {{"weak_jitter_frac", c.augment.weak_jitter_frac},
                {"strong_jitter_frac", c.augment.strong_jitter_frac},
                {"strong_mask_frac", c.augment.strong_mask_frac},
                {"strong_scale_min", c.augment.strong_scale_min},
                {"strong_scale_max", c.augment.strong_scale_max}}}};
}

void coreg_from_json(const json& j, CoRegConfig& c) {
  c.warm_epochs = j.value("warm_epochs", c.warm_epochs);
  c.total_epochs = j.value("total_epochs", c.total_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.weak_views = j.value("weak_views", c.weak_views);
  c.sharpen_t = j.value("sharpen_t", c.sharpen_t);
  c.proto_t = j.value("proto_t", c.proto_t);
  c.contrast_t = j.value("contrast_t", c.contrast_t);
  c.proto_gamma = j.value("proto_gamma", c.proto_gamma);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.w_threshold = j.value("w_threshold", c.w_threshold);
  c.mixup_alpha = j.value("mixup_alpha", c.mixup_alpha);
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.cosine_lr = j.value("cosine_lr", c.cosine_lr);
  c.ema_m = j.value("ema_m", c.ema_m);
  c.hidden = j.value("hidden", c.hidden);
  c.proj_dim = j.value("proj_dim", c.proj_dim);
  c.queue_capacity = j.value("queue_capacity", c.queue_capacity);
  if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    c.augment.weak_jitter_frac = a.value("weak_jitter_frac", c.augment.weak_jitter_frac);
    c.augment.strong_jitter_frac = a.value("strong_jitter_frac", c.augment.strong_jitter_frac);
    c.augment.strong_mask_frac = a.value("strong_mask_frac", c.augment.strong_mask_frac);
    c.augment.strong_scale_min = a.value("strong_scale_min", c.augment.strong_scale_min);
    c.augment.strong_scale_max = a.value("strong_scale_max", c.augment.strong_scale_max);
  }
}

json dataset_to_json(const DatasetSpec& d) {
  return json{{"generator", d.generator},
              {"n_per_class", d.n_per_class},
              {"num_classes", d.num_classes},
              {"dim", d.dim},
              {"spread", d.spread},
              {"ring_noise", d.ring_noise},
              {"path", d.path},
              {"corruption", d.corruption},
              {"q", d.q},
              {"eta", d.eta},
              {"ensemble_d", d.ensemble_d},
              {"ensemble_dropout", d.ensemble_dropout},
              {"ensemble_noise", d.ensemble_noise},
              {"probe_fraction", d.probe_fraction},
              {"test_n_per_class", d.test_n_per_class},
              {"seed", d.seed}};
}

void dataset_from_json(const json& j, DatasetSpec& d) {
  d.generator = j.value("generator", d.generator);
  d.n_per_class = j.value("n_per_class", d.n_per_class);
  d.num_classes = j.value("num_classes", d.num_classes);
  d.dim = j.value("dim", d.dim);
  d.spread = j.value("spread", d.spread);
  d.ring_noise = j.value("ring_noise", d.ring_noise);
  d.path = j.value("path", d.path);
  d.corruption = j.value("corruption", d.corruption);
  d.q = j.value("q", d.q);
  d.eta = j.value("eta", d.eta);
  d.ensemble_d = j.value("ensemble_d", d.ensemble_d);
  d.ensemble_dropout = j.value("ensemble_dropout", d.ensemble_dropout);
  d.ensemble_noise = j.value("ensemble_noise", d.ensemble_noise);
  d.probe_fraction = j.value("probe_fraction", d.probe_fraction);
  d.test_n_per_class = j.value("test_n_per_class", d.test_n_per_class);
  d.seed = j.value("seed", d.seed);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("malformed config " + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) dataset_from_json(j["dataset"], cfg.dataset);
    if (j.contains("coreg")) coreg_from_json(j["coreg"], cfg.coreg);
    cfg.shots_per_class = j.value("shots", cfg.shots_per_class);
    cfg.fraction = j.value("fraction", cfg.fraction);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw config_error("malformed config " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  // out_dir is a run location, not an experiment parameter; it stays out of
  // the resolved config so reruns into other directories hash identically.
  json j{{"dataset", dataset_to_json(cfg.dataset)},
         {"coreg", coreg_to_json(cfg.coreg)},
         {"shots", cfg.shots_per_class},
         {"fraction", cfg.fraction},
         {"seed", cfg.seed}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  return hex64(fnv1a(resolved_config_json(cfg)));
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& d = cfg.dataset;
  PreparedData out;

  datagen::LabeledDataset train_base;
  if (d.generator == "blobs") {
    train_base = datagen::make_blobs(d.n_per_class, d.num_classes, d.dim, d.spread, d.seed);
    out.test = datagen::make_blobs(d.test_n_per_class, d.num_classes, d.dim, d.spread,
                                   derive_seed(d.seed, 0x7E57));
  } else if (d.generator == "rings") {
    train_base = datagen::make_rings(d.n_per_class, d.num_classes, d.ring_noise, d.seed);
    out.test = datagen::make_rings(d.test_n_per_class, d.num_classes, d.ring_noise,
                                   derive_seed(d.seed, 0x7E57));
  } else {
    // File datasets arrive pre-annotated; carve a held-out 20% for evaluation.
    datagen::PartialDataset pd = datagen::read_dataset(d.path);
    const Eigen::Index n = pd.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    auto rng = make_rng(d.seed, 0x5711);
    std::shuffle(idx.begin(), idx.end(), rng);
    Eigen::Index n_test = std::max<Eigen::Index>(1, n / 5);
    Eigen::Index n_train = n - n_test;
    if (n_train < 1) throw config_error("file dataset too small to split");

    auto take = [&](Eigen::Index from, Eigen::Index count, datagen::PartialDataset& dst) {
      dst.base.features.resize(count, pd.base.dim());
      dst.base.labels.resize(count);
      dst.base.num_classes = pd.base.num_classes;
      dst.base.class_names = pd.base.class_names;
      dst.candidates.resize(count, pd.base.num_classes);
      dst.fewshot_mask.assign(static_cast<std::size_t>(count), 0);
      for (Eigen::Index i = 0; i < count; ++i) {
        Eigen::Index src = idx[from + i];
        dst.base.features.row(i) = pd.base.features.row(src);
        dst.base.labels[i] = pd.base.labels[src];
        dst.candidates.row(i) = pd.candidates.row(src);
        if (!pd.fewshot_mask.empty()) dst.fewshot_mask[i] = pd.fewshot_mask[src];
      }
    };
    datagen::PartialDataset train_pd, test_pd;
    take(0, n_train, train_pd);
    take(n_train, n_test, test_pd);
    out.test = test_pd.base;
    out.train = std::move(train_pd);
    if (cfg.shots_per_class > 0)
      out.train = datagen::apply_fewshot(out.train, cfg.shots_per_class,
                                         derive_seed(cfg.seed, 0xFE57));
    out.train_stats = datagen::partial_stats(out.train);
    return out;
  }

  // Fraction subsetting before annotation: the sample budget limits what the
  // annotators ever see.
  if (cfg.fraction < 1.0) {
    const Eigen::Index n = train_base.size();
    Eigen::Index keep = static_cast<Eigen::Index>(cfg.fraction * static_cast<double>(n));
    if (keep < 1) throw config_error("fraction leaves no training samples");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    auto rng = make_rng(d.seed, 0xF8AC);
    std::shuffle(idx.begin(), idx.end(), rng);
    datagen::LabeledDataset sub;
    sub.features.resize(keep, train_base.dim());
    sub.labels.resize(keep);
    sub.num_classes = train_base.num_classes;
    sub.class_names = train_base.class_names;
    for (Eigen::Index i = 0; i < keep; ++i) {
      sub.features.row(i) = train_base.features.row(idx[i]);
      sub.labels[i] = train_base.labels[idx[i]];
    }
    train_base = std::move(sub);
  }

  if (d.corruption == "ensemble") {
    auto ens = datagen::AnnotatorEnsemble::make(d.ensemble_d, d.ensemble_dropout, d.ensemble_noise,
                                                derive_seed(d.seed, 0xA57), d.probe_fraction);
    ens.fit(train_base);
    out.train = datagen::ensemble_annotate(train_base, ens);
    for (const auto& a : ens.annotators) out.annotator_test_acc.push_back(a.accuracy(out.test));
    if (cfg.shots_per_class > 0)
      out.train = datagen::apply_fewshot(out.train, cfg.shots_per_class,
                                         derive_seed(cfg.seed, 0xFE57));
  } else {
    double q = d.corruption == "none" ? 0.0 : d.q;
    double eta = d.corruption == "none" ? 0.0 : d.eta;
    out.train = datagen::synthesize_partial(train_base, q, derive_seed(d.seed, 0x9A27));
    if (cfg.shots_per_class > 0)
      out.train = datagen::apply_fewshot(out.train, cfg.shots_per_class,
                                         derive_seed(cfg.seed, 0xFE57));
    if (eta > 0.0)
      out.train = datagen::inject_noise(out.train, eta, derive_seed(d.seed, 0xE7A)).data;
  }
  out.train_stats = datagen::partial_stats(out.train);
  return out;
}

double evaluate(const nn::DenseNetwork& net, const Matrix& features,
                const std::vector<int>& labels) {
  if (features.rows() == 0) throw std::invalid_argument("evaluate: empty split");
  Matrix probs = net.predict_probs(features);
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    if (argmax_lowest_tie(probs.row(i).transpose()) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

double evaluate_ensemble(const nn::DenseNetwork& net1, const nn::DenseNetwork& net2,
                         const Matrix& features, const std::vector<int>& labels) {
  if (features.rows() == 0) throw std::invalid_argument("evaluate: empty split");
  Matrix probs = 0.5 * (net1.predict_probs(features) + net2.predict_probs(features));
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    if (argmax_lowest_tie(probs.row(i).transpose()) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

namespace {

struct TripleAcc {
  double acc1 = 0.0, acc2 = 0.0, ens = 0.0;
};

TripleAcc eval_pair(const nn::NetworkPair& pair, const Matrix& features,
                    const std::vector<int>& labels) {
  Matrix p1 = pair.net1.predict_probs(features);
  Matrix p2 = pair.net2.predict_probs(features);
  int h1 = 0, h2 = 0, he = 0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (argmax_lowest_tie(p1.row(i).transpose()) == labels[i]) ++h1;
    if (argmax_lowest_tie(p2.row(i).transpose()) == labels[i]) ++h2;
    Vector avg = 0.5 * (p1.row(i) + p2.row(i)).transpose();
    if (argmax_lowest_tie(avg) == labels[i]) ++he;
  }
  double n = static_cast<double>(features.rows());
  return TripleAcc{h1 / n, h2 / n, he / n};
}

const char* kCsvHeader =
    "epoch,phase,lr,loss_warm,loss_cr,loss_prot,loss_cont,loss_total,"
    "d12_partial,d12_unlabeled,d12_mu1,d12_mu2,d12_pi,d12_tau,d12_pseudo_acc,d12_trained,"
    "d21_partial,d21_unlabeled,d21_mu1,d21_mu2,d21_pi,d21_tau,d21_pseudo_acc,d21_trained,"
    "queue1,queue2,"
    "train_acc1,train_acc2,train_acc_ens,test_acc1,test_acc2,test_acc_ens";

std::string csv_row(const EpochRow& r) {
  std::string s;
  auto add = [&s](const std::string& field) {
    if (!s.empty()) s += ',';
    s += field;
  };
  const auto& m = r.metrics;
  add(std::to_string(m.epoch));
  add(m.warmup ? "warmup" : "cotrain");
  add(fmt_double(r.lr));
  add(fmt_double(m.loss_warm));
  add(fmt_double(m.loss_cr));
  add(fmt_double(m.loss_prot));
  add(fmt_double(m.loss_cont));
  add(fmt_double(m.loss_total));
  for (const auto& dm : m.dir) {
    add(std::to_string(dm.n_partial));
    add(std::to_string(dm.n_unlabeled));
    add(fmt_double(dm.gmm_mu1));
    add(fmt_double(dm.gmm_mu2));
    add(fmt_double(dm.gmm_pi));
    add(fmt_double(dm.tau_div));
    add(fmt_double(dm.pseudo_acc));
    add(std::to_string(dm.trained_samples));
  }
  add(std::to_string(m.queue_size[0]));
  add(std::to_string(m.queue_size[1]));
  add(fmt_double(r.train_acc1));
  add(fmt_double(r.train_acc2));
  add(fmt_double(r.train_acc_ens));
  add(fmt_double(r.test_acc1));
  add(fmt_double(r.test_acc2));
  add(fmt_double(r.test_acc_ens));
  return s;
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  cfg.coreg.seed = cfg.seed;
  auto t0 = std::chrono::steady_clock::now();

  std::filesystem::create_directories(cfg.out_dir);
  MetricsReport report;
  report.hash = config_hash(cfg);
  report.seed = cfg.seed;

  {
    std::ofstream cf(cfg.out_dir + "/config.resolved.json");
    cf << resolved_config_json(cfg) << "\n";
  }

  PreparedData data = prepare_data(cfg);
  report.train_stats = data.train_stats;
  report.annotator_test_acc = data.annotator_test_acc;
  if (!data.annotator_test_acc.empty())
    report.best_annotator_test_acc =
        *std::max_element(data.annotator_test_acc.begin(), data.annotator_test_acc.end());

  TrainState state = TrainState::init(data.train, cfg.coreg);

  try {
    for (int epoch = 0; epoch < cfg.coreg.total_epochs; ++epoch) {
      EpochRow row;
      row.metrics = epoch < cfg.coreg.warm_epochs
                        ? warmup_epoch(state, data.train, cfg.coreg, epoch)
                        : co_train_epoch(state, data.train, cfg.coreg, epoch);
      row.lr = cfg.coreg.lr_at(epoch);
      TripleAcc train_acc = eval_pair(state.pair, data.train.base.features, data.train.base.labels);
      TripleAcc test_acc = eval_pair(state.pair, data.test.features, data.test.labels);
      row.train_acc1 = train_acc.acc1;
      row.train_acc2 = train_acc.acc2;
      row.train_acc_ens = train_acc.ens;
      row.test_acc1 = test_acc.acc1;
      row.test_acc2 = test_acc.acc2;
      row.test_acc_ens = test_acc.ens;
      report.epochs.push_back(row);
      if (epoch + 1 == cfg.coreg.warm_epochs) report.warmup_end_test_ens = test_acc.ens;
    }
  } catch (const numeric_error& e) {
    std::ofstream diag(cfg.out_dir + "/diagnostic.txt");
    diag << e.what() << "\n";
    throw;
  }

  if (!report.epochs.empty()) {
    const auto& last = report.epochs.back();
    report.final_test_acc1 = last.test_acc1;
    report.final_test_acc2 = last.test_acc2;
    report.final_test_ens = last.test_acc_ens;
    report.final_train_acc_ens = last.train_acc_ens;
    if (cfg.coreg.warm_epochs == cfg.coreg.total_epochs)
      report.warmup_end_test_ens = last.test_acc_ens;
  }

  report.csv_path = cfg.out_dir + "/metrics.csv";
  {
    std::ofstream csv(report.csv_path);
    csv << kCsvHeader << "\n";
    for (const auto& row : report.epochs) csv << csv_row(row) << "\n";
  }

  nn::save_networks(cfg.out_dir + "/checkpoint.bin",
                    {{"net1", &state.pair.net1},
                     {"net2", &state.pair.net2},
                     {"ema1", &state.pair.ema1},
                     {"ema2", &state.pair.ema2}},
                    fnv1a(resolved_config_json(cfg)));

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.summary_path = cfg.out_dir + "/summary.json";
  {
    json s{{"config_hash", report.hash},
           {"seed", report.seed},
           {"partial_acc", report.train_stats.partial_acc},
           {"avg_num", report.train_stats.avg_num},
           {"final_test_acc1", report.final_test_acc1},
           {"final_test_acc2", report.final_test_acc2},
           {"final_test_ensemble", report.final_test_ens},
           {"final_train_acc_ensemble", report.final_train_acc_ens},
           {"warmup_end_test_ensemble", report.warmup_end_test_ens},
           {"annotator_test_acc", report.annotator_test_acc},
           {"best_annotator_test_acc", report.best_annotator_test_acc},
           {"epochs", report.epochs.size()},
           {"wall_time_s", report.wall_time_s}};
    std::ofstream sf(report.summary_path);
    sf << s.dump(2) << "\n";
  }
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationSummary run_ablation_suite(const ExperimentConfig& cfg,
                                   const std::vector<std::string>& variants,
                                   const std::vector<std::uint64_t>& seeds) {
  if (variants.empty() || seeds.empty())
    throw config_error("ablation suite needs at least one variant and one seed");
  AblationSummary summary;
  for (const auto& v : variants) {
    std::vector<double> finals;
    for (auto seed : seeds) {
      AblationCell cell;
      cell.variant = v;
      cell.seed = seed;
      try {
        ExperimentConfig run_cfg = cfg;
        run_cfg.coreg = ablation_variant(cfg.coreg, v);
        run_cfg.seed = seed;
        run_cfg.out_dir = cfg.out_dir + "/" + v + "_s" + std::to_string(seed);
        cell.report = run_experiment(run_cfg);
        finals.push_back(cell.report->final_test_ens);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      summary.cells.push_back(std::move(cell));
    }
    if (!finals.empty()) summary.median_final_acc.emplace_back(v, median(finals));
  }

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/ablation_summary.csv");
  csv << "variant,seed,final_test_ensemble,error\n";
  for (const auto& cell : summary.cells) {
    csv << cell.variant << "," << cell.seed << ","
        << (cell.report ? fmt_double(cell.report->final_test_ens) : "") << "," << cell.error
        << "\n";
  }
  csv << "\nvariant,median_final_test_ensemble\n";
  for (const auto& [v, acc] : summary.median_final_acc) csv << v << "," << fmt_double(acc) << "\n";
  return summary;
}

FractionSummary sweep_fraction(const ExperimentConfig& cfg, const std::vector<double>& fractions,
                               const std::vector<std::uint64_t>& seeds) {
  if (fractions.empty() || seeds.empty())
    throw config_error("fraction sweep needs at least one fraction and one seed");
  FractionSummary summary;
  for (double f : fractions) {
    std::vector<double> finals;
    for (auto seed : seeds) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.fraction = f;
      run_cfg.seed = seed;
      char tagbuf[32];
      std::snprintf(tagbuf, sizeof(tagbuf), "frac%03d_s%llu", static_cast<int>(f * 100.0),
                    static_cast<unsigned long long>(seed));
      run_cfg.out_dir = cfg.out_dir + "/" + tagbuf;
      MetricsReport r = run_experiment(run_cfg);
      summary.cells.emplace_back(f, seed, r.final_test_ens);
      finals.push_back(r.final_test_ens);
    }
    summary.median_final_acc.emplace_back(f, median(finals));
  }

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/fraction_sweep.csv");
  csv << "fraction,seed,final_test_ensemble\n";
  for (const auto& [f, seed, acc] : summary.cells)
    csv << fmt_double(f) << "," << seed << "," << fmt_double(acc) << "\n";
  csv << "\nfraction,median_final_test_ensemble\n";
  for (const auto& [f, acc] : summary.median_final_acc)
    csv << fmt_double(f) << "," << fmt_double(acc) << "\n";
  return summary;
}

}  // namespace coreg::harness
