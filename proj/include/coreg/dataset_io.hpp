#pragma once

#include <string>

#include "coreg/datagen.hpp"

namespace coreg::datagen {

// Generator provenance stored alongside the data.
struct DatasetMeta {
  std::string generator;  // "blobs", "rings", ...
  double q = 0.0;
  double eta = 0.0;
  int ensemble_d = 0;
  std::uint64_t seed = 0;
};

void write_dataset(const std::string& path, const PartialDataset& pd, const DatasetMeta& meta);

// Validates all invariants on load; throws config_error on malformed files.
PartialDataset read_dataset(const std::string& path, DatasetMeta* meta_out = nullptr);

}  // namespace coreg::datagen
