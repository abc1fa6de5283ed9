#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coreg/config.hpp"
#include "coreg/dataset_io.hpp"
#include "coreg/trainer.hpp"

namespace coreg::harness {

struct DatasetSpec {
  std::string generator = "blobs";  // blobs | rings | file
  int n_per_class = 1000;
  int num_classes = 4;
  int dim = 8;
  double spread = 0.3;      // blobs
  double ring_noise = 0.05; // rings
  std::string path;         // generator == "file"

  std::string corruption = "synthetic";  // synthetic | ensemble | none
  double q = 0.0;
  double eta = 0.0;
  int ensemble_d = 6;
  double ensemble_dropout = 0.5;
  double ensemble_noise = 1.0;
  double probe_fraction = 0.2;

  int test_n_per_class = 250;
  std::uint64_t seed = 7;

  void validate() const;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  CoRegConfig coreg;
  int shots_per_class = 0;
  double fraction = 1.0;
  std::string out_dir = "runs/out";
  std::uint64_t seed = 1;  // training seed; the dataset keeps its own

  void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
std::string resolved_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct PreparedData {
  datagen::PartialDataset train;
  datagen::LabeledDataset test;
  std::vector<double> annotator_test_acc;  // per annotator when corruption == "ensemble"
  datagen::PartialStats train_stats;
};

// Generates (or loads) the dataset, applies fraction subsetting, corruption,
// and few-shot injection. Deterministic per (dataset seed, training seed).
PreparedData prepare_data(const ExperimentConfig& cfg);

// Top-1 accuracy.
double evaluate(const nn::DenseNetwork& net, const Matrix& features,
                const std::vector<int>& labels);
// Ensemble = argmax of the averaged softmax of both networks.
double evaluate_ensemble(const nn::DenseNetwork& net1, const nn::DenseNetwork& net2,
                         const Matrix& features, const std::vector<int>& labels);

struct EpochRow {
  EpochMetrics metrics;
  double lr = 0.0;
  double train_acc1 = 0.0, train_acc2 = 0.0, train_acc_ens = 0.0;
  double test_acc1 = 0.0, test_acc2 = 0.0, test_acc_ens = 0.0;
};

struct MetricsReport {
  std::vector<EpochRow> epochs;
  datagen::PartialStats train_stats;
  double final_test_acc1 = 0.0, final_test_acc2 = 0.0, final_test_ens = 0.0;
  double final_train_acc_ens = 0.0;
  double warmup_end_test_ens = 0.0;  // test accuracy at the last warm-up epoch
  std::vector<double> annotator_test_acc;
  double best_annotator_test_acc = 0.0;
  std::string hash;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::string csv_path, summary_path;
};

// Full pipeline: prepare data, warm up, co-train, evaluate each epoch, write
// metrics.csv / summary.json / config.resolved.json / checkpoint.bin under
// out_dir. Byte-identical metrics.csv for identical config and seed.
MetricsReport run_experiment(const ExperimentConfig& cfg);

struct AblationCell {
  std::string variant;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;
  std::string error;  // non-empty if the run failed
};

struct AblationSummary {
  std::vector<AblationCell> cells;
  std::vector<std::pair<std::string, double>> median_final_acc;  // per variant
};

AblationSummary run_ablation_suite(const ExperimentConfig& cfg,
                                   const std::vector<std::string>& variants,
                                   const std::vector<std::uint64_t>& seeds);

struct FractionSummary {
  std::vector<std::tuple<double, std::uint64_t, double>> cells;  // fraction, seed, final acc
  std::vector<std::pair<double, double>> median_final_acc;       // per fraction
};

FractionSummary sweep_fraction(const ExperimentConfig& cfg, const std::vector<double>& fractions,
                               const std::vector<std::uint64_t>& seeds);

double median(std::vector<double> values);

}  // namespace coreg::harness
