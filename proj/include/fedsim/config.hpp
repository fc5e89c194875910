#ifndef FEDSIM_CONFIG_HPP
#define FEDSIM_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/fl_core.hpp"
#include "fedsim/hp_space.hpp"
#include "fedsim/rl_agent.hpp"

namespace fedsim {

// What a run optimizes: the federated loop, or the synthetic single-variable
// reward used to exercise the agent in isolation.
enum class RunTask { fl, bandit };

enum class BaselineKind { fedavg, fedprox };

std::string to_string(RunTask task);
std::string to_string(BaselineKind kind);

struct SpaceDimConfig {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  DimKind kind = DimKind::continuous_positive;
  long grid_points = 0;
  bool log_scaled = false;
};

struct SpaceConfig {
  std::vector<SpaceDimConfig> dims;
  // Appends one simplex dim per client (aw0..aw{K-1}) so the agent also
  // searches the aggregation weights.
  bool aggregation_weights = false;
  long aw_grid_points = 0;
  double scale = 1.0;
};

struct DataConfig {
  std::size_t n_samples = 0;
  std::size_t d_in = 0;
  int classes = 0;
  double cluster_spread = 1.0;
  double domain_shift = 0.0;
  double dirichlet_alpha = 0.5;
  std::vector<double> size_weights;  // optional Dirichlet base measure, length K
  SplitFractions split;
  std::string csv_path;  // optional: replaces the generator
};

// Fixed hyperparameter values: the baseline uses them everywhere, and the
// searched run falls back to them for any role without a search dim.
struct FixedTrainConfig {
  double learning_rate = 1e-2;
  long iterations = 10;
  long batch_size = 64;
  double server_lr = 1.0;
};

struct BaselineConfig {
  BaselineKind kind = BaselineKind::fedavg;
  double prox_mu = 0.0;
};

struct BanditConfig {
  double target = 0.5;  // reward optimum, in the dim's raw units
};

struct ExperimentConfig {
  RunTask task = RunTask::fl;
  long rounds = 1;
  std::size_t clients = 2;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/out";

  DataConfig data;
  ModelConfig model;
  AgentConfig agent;
  SpaceConfig space;
  FixedTrainConfig train;
  BaselineConfig baseline;
  BanditConfig bandit;
};

// Parses and fully validates a config file. Every violation is reported with
// its key path (e.g. "agent.gamma_h"); unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);

// Re-runs all invariant checks on an already-loaded (possibly overridden)
// config. Throws ConfigError naming the offending key path.
void validate_config(const ExperimentConfig& cfg);

// Builds the hyperparameter space from the config, appending per-client
// aggregation-weight dims when configured.
HyperparamSpace build_space_from_config(const ExperimentConfig& cfg);

// Fully resolved config echo (what the run will actually use).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Reserved dim names bind search dims to their training role.
inline constexpr const char* kDimClientLr = "lr";
inline constexpr const char* kDimLocalIters = "li";
inline constexpr const char* kDimServerLr = "slr";
inline constexpr const char* kDimAggWeightPrefix = "aw";

}  // namespace fedsim
#endif
