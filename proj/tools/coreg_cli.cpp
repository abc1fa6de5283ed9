#include <cstdio>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coreg/harness.hpp"

namespace {

using namespace coreg;

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoull(item));
  if (out.empty()) throw config_error("no seeds given");
  return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw config_error("no values given");
  return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw config_error("no names given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-Reg noisy partial label learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path;
  std::string variants_csv = "full,no_co_pl,sup_cont,no_proto,no_U";
  std::string seeds_csv = "1,2,3";
  std::string fractions_csv = "0.2,0.4,0.6,0.8,1.0";
  std::uint64_t seed_flag = 0;
  std::string out_dir_flag;
  double fraction_flag = 1.0;
  int shots_flag = 0;
  std::string variant_flag;

  auto* gen = app.add_subcommand("gen", "generate a dataset file");
  gen->add_option("--config", config_path, "experiment config (JSON)")->required();
  gen->add_option("--out", out_path, "output dataset path")->required();

  auto* stats = app.add_subcommand("stats", "print partial_acc / avg_num of a dataset file");
  stats->add_option("--data", data_path, "dataset file")->required();

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* opt_seed = train->add_option("--seed", seed_flag, "override training seed");
  auto* opt_out = train->add_option("--out-dir", out_dir_flag, "override output directory");
  auto* opt_frac = train->add_option("--fraction", fraction_flag, "train on this data fraction");
  auto* opt_shots = train->add_option("--shots", shots_flag, "few-shot true labels per class");
  auto* opt_variant = train->add_option(
      "--variant", variant_flag, "ablation variant: full|no_co_pl|sup_cont|no_proto|no_U");

  auto* ablate = app.add_subcommand("ablate", "run the ablation variant sweep");
  ablate->add_option("--config", config_path, "experiment config (JSON)")->required();
  ablate->add_option("--variants", variants_csv, "comma-separated variant list");
  ablate->add_option("--seeds", seeds_csv, "comma-separated seeds");
  auto* opt_out_a = ablate->add_option("--out-dir", out_dir_flag, "override output directory");

  auto* sweep = app.add_subcommand("sweep-fraction", "data-fraction study");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--fractions", fractions_csv, "comma-separated fractions");
  sweep->add_option("--seeds", seeds_csv, "comma-separated seeds");
  auto* opt_out_s = sweep->add_option("--out-dir", out_dir_flag, "override output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      harness::ExperimentConfig cfg = harness::load_experiment_config(config_path);
      harness::PreparedData data = harness::prepare_data(cfg);
      datagen::DatasetMeta meta;
      meta.generator = cfg.dataset.generator;
      meta.q = cfg.dataset.q;
      meta.eta = cfg.dataset.eta;
      meta.ensemble_d = cfg.dataset.corruption == "ensemble" ? cfg.dataset.ensemble_d : 0;
      meta.seed = cfg.dataset.seed;
      datagen::write_dataset(out_path, data.train, meta);
      std::printf("wrote %s: n=%lld partial_acc=%.4f avg_num=%.4f\n", out_path.c_str(),
                  static_cast<long long>(data.train.size()), data.train_stats.partial_acc,
                  data.train_stats.avg_num);
      return 0;
    }
    if (stats->parsed()) {
      datagen::PartialDataset pd = datagen::read_dataset(data_path);
      auto st = datagen::partial_stats(pd);
      std::printf("n=%lld C=%d partial_acc=%.6f avg_num=%.6f\n", static_cast<long long>(pd.size()),
                  pd.num_classes(), st.partial_acc, st.avg_num);
      return 0;
    }
    if (train->parsed()) {
      harness::ExperimentConfig cfg = harness::load_experiment_config(config_path);
      if (opt_seed->count()) cfg.seed = seed_flag;
      if (opt_out->count()) cfg.out_dir = out_dir_flag;
      if (opt_frac->count()) cfg.fraction = fraction_flag;
      if (opt_shots->count()) cfg.shots_per_class = shots_flag;
      if (opt_variant->count()) cfg.coreg = ablation_variant(cfg.coreg, variant_flag);
      cfg.validate();
      harness::MetricsReport report = harness::run_experiment(cfg);
      std::printf("partial_acc=%.4f avg_num=%.4f\n", report.train_stats.partial_acc,
                  report.train_stats.avg_num);
      std::printf("final test acc: net1=%.4f net2=%.4f ensemble=%.4f\n", report.final_test_acc1,
                  report.final_test_acc2, report.final_test_ens);
      if (!report.annotator_test_acc.empty())
        std::printf("best annotator test acc: %.4f\n", report.best_annotator_test_acc);
      std::printf("metrics: %s\n", report.csv_path.c_str());
      return 0;
    }
    if (ablate->parsed()) {
      harness::ExperimentConfig cfg = harness::load_experiment_config(config_path);
      if (opt_out_a->count()) cfg.out_dir = out_dir_flag;
      auto summary =
          harness::run_ablation_suite(cfg, parse_names(variants_csv), parse_seeds(seeds_csv));
      for (const auto& [v, acc] : summary.median_final_acc)
        std::printf("%-10s median final test ensemble acc: %.4f\n", v.c_str(), acc);
      for (const auto& cell : summary.cells)
        if (!cell.error.empty())
          std::fprintf(stderr, "cell %s seed %llu failed: %s\n", cell.variant.c_str(),
                       static_cast<unsigned long long>(cell.seed), cell.error.c_str());
      return 0;
    }
    if (sweep->parsed()) {
      harness::ExperimentConfig cfg = harness::load_experiment_config(config_path);
      if (opt_out_s->count()) cfg.out_dir = out_dir_flag;
      auto summary =
          harness::sweep_fraction(cfg, parse_doubles(fractions_csv), parse_seeds(seeds_csv));
      for (const auto& [f, acc] : summary.median_final_acc)
        std::printf("fraction %.2f median final test ensemble acc: %.4f\n", f, acc);
      return 0;
    }
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
