#include "fedsim/data_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string to_string(ShardRole role) {
  switch (role) {
    case ShardRole::train: return "train";
    case ShardRole::val: return "val";
    case ShardRole::test: return "test";
  }
  throw std::logic_error("unreachable shard role");
}

DataShard generate(const SyntheticSpec& spec) {
  if (spec.classes < 2) {
    throw ConfigError("data.classes must be >= 2, got " + std::to_string(spec.classes));
  }
  if (spec.d_in < static_cast<std::size_t>(spec.classes)) {
    throw ConfigError("data.d_in must be >= data.classes so class means fit on the simplex");
  }
  if (spec.n_samples == 0) throw ConfigError("data.n_samples must be >= 1");
  if (!(spec.cluster_spread > 0.0)) {
    throw ConfigError("data.cluster_spread must be > 0, got " + std::to_string(spec.cluster_spread));
  }

  const std::size_t n_classes = static_cast<std::size_t>(spec.classes);
  // Centered regular simplex: mean of class c is e_c - 1/C over the first C
  // coordinates, zero elsewhere.
  const double center = 1.0 / static_cast<double>(n_classes);

  RngStream rng = RngStream::derive(spec.seed, "data-gen");
  DataShard data;
  data.n = spec.n_samples;
  data.d_in = spec.d_in;
  data.features.resize(spec.n_samples * spec.d_in);
  data.labels.resize(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const int label = static_cast<int>(rng.uniform_int(0, spec.classes - 1));
    data.labels[i] = label;
    double* x = data.row(i);
    for (std::size_t j = 0; j < spec.d_in; ++j) {
      double mean = 0.0;
      if (j < n_classes) mean = (j == static_cast<std::size_t>(label) ? 1.0 : 0.0) - center;
      x[j] = mean + spec.cluster_spread * rng.normal();
    }
  }
  return data;
}

namespace {

// Integer apportionment of `total` into parts proportional to `weights`:
// floor first, then hand out the remainder by largest fractional part
// (lowest index wins ties).
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
  const std::size_t k = weights.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> remainders(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = weights[i] * static_cast<double>(total);
    const double fl = std::floor(share);
    counts[i] = static_cast<std::size_t>(fl);
    remainders[i] = share - fl;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  std::size_t left = total - assigned;
  for (std::size_t i = 0; left > 0; i = (i + 1) % k, --left) counts[order[i]] += 1;
  return counts;
}

std::vector<DataShard> build_shards(const DataShard& data,
                                    const std::vector<std::vector<std::size_t>>& assignment) {
  std::vector<DataShard> shards(assignment.size());
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    DataShard& shard = shards[k];
    shard.n = assignment[k].size();
    shard.d_in = data.d_in;
    shard.role = ShardRole::train;
    shard.features.resize(shard.n * data.d_in);
    shard.labels.resize(shard.n);
    for (std::size_t i = 0; i < assignment[k].size(); ++i) {
      const std::size_t src = assignment[k][i];
      std::copy_n(data.row(src), data.d_in, shard.row(i));
      shard.labels[i] = data.labels[src];
    }
  }
  return shards;
}

}  // namespace

std::vector<DataShard> partition_dirichlet(const DataShard& data, std::size_t n_clients,
                                           double alpha, std::uint64_t seed) {
  const std::vector<double> uniform_base(n_clients, 1.0 / static_cast<double>(n_clients));
  return partition_dirichlet(data, n_clients, alpha, uniform_base, seed);
}

std::vector<DataShard> partition_dirichlet(const DataShard& data, std::size_t n_clients,
                                           double alpha, std::span<const double> base_weights,
                                           std::uint64_t seed) {
  if (n_clients < 2) throw ConfigError("partition needs at least 2 clients");
  if (!(alpha > 0.0)) throw ConfigError("dirichlet alpha must be > 0, got " + std::to_string(alpha));
  if (base_weights.size() != n_clients) {
    throw ConfigError("partition base weights length must equal the client count");
  }
  if (data.n < n_clients) throw ConfigError("fewer samples than clients; cannot partition");
  for (double w : base_weights) {
    if (!(w > 0.0)) throw ConfigError("partition base weights must be > 0");
  }

  int n_classes = 0;
  for (int label : data.labels) n_classes = std::max(n_classes, label + 1);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < data.n; ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }

  // Concentration alpha_k = alpha * K * base_k, so the uniform base gives the
  // plain symmetric Dirichlet(alpha) and skewed bases shift expected sizes
  // without changing the overall concentration scale.
  std::vector<double> concentration(n_clients);
  for (std::size_t k = 0; k < n_clients; ++k) {
    concentration[k] = alpha * static_cast<double>(n_clients) * base_weights[k];
  }

  std::vector<std::vector<std::size_t>> assignment(n_clients);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    RngStream rng = RngStream::derive(seed, "partition", c);
    const std::vector<double> proportions = rng.dirichlet(concentration);
    const std::vector<std::size_t> counts = largest_remainder(proportions, by_class[c].size());
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n_clients; ++k) {
      for (std::size_t i = 0; i < counts[k]; ++i) assignment[k].push_back(by_class[c][cursor++]);
    }
  }

  // Repair: an empty shard borrows one sample from the currently largest one.
  for (std::size_t k = 0; k < n_clients; ++k) {
    if (!assignment[k].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < n_clients; ++j) {
      if (assignment[j].size() > assignment[donor].size()) donor = j;
    }
    if (assignment[donor].size() <= 1) throw ConfigError("cannot repair empty shard: too few samples");
    assignment[k].push_back(assignment[donor].back());
    assignment[donor].pop_back();
  }

  return build_shards(data, assignment);
}

ShardSplits split(const DataShard& shard, const SplitFractions& fractions, std::uint64_t seed) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (!(fractions.train > 0.0) || !(fractions.val > 0.0) || !(fractions.test > 0.0)) {
    throw ConfigError("split fractions must all be positive");
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1, got " + std::to_string(sum));
  }

  const double weights[3] = {fractions.train, fractions.val, fractions.test};
  const std::vector<std::size_t> sizes = largest_remainder(weights, shard.n);
  if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
    throw ConfigError("split of " + std::to_string(shard.n) +
                      " samples leaves an empty part; shard too small for the fractions");
  }

  std::vector<std::size_t> order(shard.n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = RngStream::derive(seed, "split");
  rng.shuffle(order);

  ShardSplits out;
  DataShard* parts[3] = {&out.train, &out.val, &out.test};
  const ShardRole roles[3] = {ShardRole::train, ShardRole::val, ShardRole::test};
  std::size_t cursor = 0;
  for (int p = 0; p < 3; ++p) {
    DataShard& part = *parts[p];
    part.n = sizes[static_cast<std::size_t>(p)];
    part.d_in = shard.d_in;
    part.role = roles[p];
    part.features.resize(part.n * shard.d_in);
    part.labels.resize(part.n);
    for (std::size_t i = 0; i < part.n; ++i) {
      const std::size_t src = order[cursor++];
      std::copy_n(shard.row(src), shard.d_in, part.row(i));
      part.labels[i] = shard.labels[src];
    }
  }
  return out;
}

void apply_domain_shift(DataShard& shard, std::size_t client_id, double magnitude,
                        std::uint64_t seed) {
  if (magnitude == 0.0 || shard.n == 0) return;
  if (magnitude < 0.0) throw ConfigError("domain shift magnitude must be >= 0");
  RngStream rng = RngStream::derive(seed, "domain-shift", client_id);
  std::vector<double> direction(shard.d_in);
  double norm_sq = 0.0;
  for (double& v : direction) {
    v = rng.normal();
    norm_sq += v * v;
  }
  const double norm = std::sqrt(norm_sq);
  const double scale = norm > 0.0 ? magnitude / norm : 0.0;
  for (std::size_t i = 0; i < shard.n; ++i) {
    double* x = shard.row(i);
    for (std::size_t j = 0; j < shard.d_in; ++j) x[j] += scale * direction[j];
  }
}

DataShard load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");

  DataShard data;
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.empty()) continue;

    // Header detection: skip the first line when its first cell is not a number.
    if (line_no == 1) {
      double probe = 0.0;
      const char* b = fields[0].data();
      auto [p, ec] = std::from_chars(b, b + fields[0].size(), probe);
      if (ec != std::errc() || p != b + fields[0].size()) continue;
    }

    if (fields.size() < 2) {
      throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) +
                        ": need at least one feature column plus the label column");
    }
    if (data.d_in == 0) {
      data.d_in = fields.size() - 1;
    } else if (fields.size() - 1 != data.d_in) {
      throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) +
                        ": expected " + std::to_string(data.d_in + 1) + " columns, got " +
                        std::to_string(fields.size()));
    }

    for (std::size_t j = 0; j < data.d_in; ++j) {
      double value = 0.0;
      const char* b = fields[j].data();
      auto [p, ec] = std::from_chars(b, b + fields[j].size(), value);
      if (ec != std::errc() || p != b + fields[j].size()) {
        throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) +
                          ": bad feature value '" + fields[j] + "'");
      }
      data.features.push_back(value);
    }
    int label = 0;
    const std::string& last = fields.back();
    auto [p, ec] = std::from_chars(last.data(), last.data() + last.size(), label);
    if (ec != std::errc() || p != last.data() + last.size() || label < 0) {
      throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) +
                        ": bad label '" + last + "' (need a non-negative integer)");
    }
    data.labels.push_back(label);
    max_label = std::max(max_label, label);
    data.n += 1;
  }
  if (data.n == 0) throw ConfigError("dataset '" + path + "' has no data rows");
  return data;
}

}  // namespace fedsim
