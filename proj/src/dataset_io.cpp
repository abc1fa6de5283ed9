#include "coreg/dataset_io.hpp"

#include <fstream>

#include <json.hpp>

namespace coreg::datagen {

using nlohmann::json;

void write_dataset(const std::string& path, const PartialDataset& pd, const DatasetMeta& meta) {
  pd.validate();
  const Eigen::Index n = pd.size();
  const Eigen::Index d = pd.base.dim();
  const int c = pd.num_classes();

  json j;
  j["n"] = n;
  j["dim"] = d;
  j["num_classes"] = c;
  std::vector<double> feats;
  feats.reserve(static_cast<std::size_t>(n * d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) feats.push_back(pd.base.features(i, k));
  j["features"] = feats;
  j["labels"] = pd.base.labels;
  std::vector<int> cand;
  cand.reserve(static_cast<std::size_t>(n * c));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k) cand.push_back(pd.candidates(i, k));
  j["candidates"] = cand;
  j["class_names"] = pd.base.class_names;
  j["fewshot_mask"] = std::vector<int>(pd.fewshot_mask.begin(), pd.fewshot_mask.end());
  j["meta"] = {{"generator", meta.generator}, {"q", meta.q},   {"eta", meta.eta},
               {"ensemble_d", meta.ensemble_d}, {"seed", meta.seed}};

  std::ofstream out(path);
  if (!out) throw config_error("cannot open dataset file for writing: " + path);
  out << j.dump();
  out << "\n";
}

PartialDataset read_dataset(const std::string& path, DatasetMeta* meta_out) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open dataset file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("malformed dataset file " + path + ": " + e.what());
  }

  PartialDataset pd;
  try {
    const Eigen::Index n = j.at("n").get<Eigen::Index>();
    const Eigen::Index d = j.at("dim").get<Eigen::Index>();
    const int c = j.at("num_classes").get<int>();
    auto feats = j.at("features").get<std::vector<double>>();
    auto cand = j.at("candidates").get<std::vector<int>>();
    if (static_cast<Eigen::Index>(feats.size()) != n * d)
      throw config_error("features length does not match n*dim in " + path);
    if (static_cast<Eigen::Index>(cand.size()) != n * c)
      throw config_error("candidates length does not match n*num_classes in " + path);

    pd.base.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < d; ++k) pd.base.features(i, k) = feats[i * d + k];
    pd.base.labels = j.at("labels").get<std::vector<int>>();
    pd.base.num_classes = c;
    pd.base.class_names = j.at("class_names").get<std::vector<std::string>>();
    pd.candidates.resize(n, c);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int k = 0; k < c; ++k) pd.candidates(i, k) = cand[i * c + k];
    auto mask = j.at("fewshot_mask").get<std::vector<int>>();
    pd.fewshot_mask.assign(mask.begin(), mask.end());

    if (meta_out && j.contains("meta")) {
      const auto& m = j["meta"];
      meta_out->generator = m.value("generator", "");
      meta_out->q = m.value("q", 0.0);
      meta_out->eta = m.value("eta", 0.0);
      meta_out->ensemble_d = m.value("ensemble_d", 0);
      meta_out->seed = m.value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw config_error("malformed dataset file " + path + ": " + e.what());
  }

  try {
    pd.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("dataset file " + path + " violates invariants: " + e.what());
  }
  return pd;
}

}  // namespace coreg::datagen
