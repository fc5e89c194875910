#ifndef FEDSIM_DATA_SIM_HPP
#define FEDSIM_DATA_SIM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

enum class ShardRole { train, val, test };

std::string to_string(ShardRole role);

// A labeled feature matrix owned by one client (or the whole pool before
// partitioning). Features are row-major n x d_in.
struct DataShard {
  std::size_t n = 0;
  std::size_t d_in = 0;
  std::vector<double> features;
  std::vector<int> labels;
  ShardRole role = ShardRole::train;

  const double* row(std::size_t i) const { return features.data() + i * d_in; }
  double* row(std::size_t i) { return features.data() + i * d_in; }
};

struct SyntheticSpec {
  std::size_t n_samples = 0;
  std::size_t d_in = 0;
  int classes = 0;
  double cluster_spread = 1.0;  // per-coordinate Gaussian sigma around the class mean
  double domain_shift = 0.0;    // per-client feature mean offset magnitude
  std::uint64_t seed = 0;
};

// Class-conditional Gaussian clusters with uniformly drawn labels. Class
// means sit on the vertices of a centered regular simplex in the first
// `classes` coordinates, so d_in >= classes is required.
DataShard generate(const SyntheticSpec& spec);

// Label-skewed partition: each class's samples are spread over the K clients
// by proportions drawn from Dirichlet(alpha), with largest-remainder rounding.
// Every sample lands in exactly one shard; empty shards are repaired by
// moving one sample from the largest shard.
std::vector<DataShard> partition_dirichlet(const DataShard& data, std::size_t n_clients,
                                           double alpha, std::uint64_t seed);

// Same partition but with a non-uniform Dirichlet base measure: client k's
// concentration is alpha * base_weights[k] * K. Used to build size-skewed
// federations.
std::vector<DataShard> partition_dirichlet(const DataShard& data, std::size_t n_clients,
                                           double alpha, std::span<const double> base_weights,
                                           std::uint64_t seed);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct ShardSplits {
  DataShard train;
  DataShard val;
  DataShard test;
};

// Seeded shuffle followed by a disjoint, exhaustive three-way split with
// largest-remainder sizes. Throws if any part would be empty.
ShardSplits split(const DataShard& shard, const SplitFractions& fractions, std::uint64_t seed);

// Adds a fixed per-client offset (a seeded random direction scaled by
// `magnitude`) to every feature row, emulating institutional domain shift.
void apply_domain_shift(DataShard& shard, std::size_t client_id, double magnitude,
                        std::uint64_t seed);

// CSV ingestion: every column but the last is a feature (real), the last
// column is an integer label in [0, C). An optional header line is skipped
// when its first field is not numeric.
DataShard load_csv_dataset(const std::string& path);

}  // namespace fedsim
#endif
