#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edasum/ingest.hpp"
#include "edasum/pattern.hpp"

namespace edasum {

// Uniform background rows plus planted clusters. Each cluster sits around a
// random center: tightly (`noise`) on a few core attributes, loosely
// (`spread`) on the rest. Its rows are the ground truth for that cluster.
struct SyntheticOptions {
  std::size_t rows = 1200;
  std::size_t attributes = 6;
  std::size_t clusters = 8;
  std::size_t cluster_min = 40;
  std::size_t cluster_max = 90;
  std::size_t core_min = 2;
  std::size_t core_max = 3;
  double noise = 0.01;
  double spread = 0.05;
  std::uint64_t seed = 7;
};

struct PlantedCluster {
  std::string label;
  std::vector<std::uint32_t> core;
  std::vector<ItemId> rows;
};

struct SyntheticData {
  RawDataset table;
  std::vector<PlantedCluster> clusters;
};

SyntheticData make_synthetic(const SyntheticOptions& options);
std::string to_csv(const RawDataset& table);

}  // namespace edasum
