#ifndef FEDSIM_ORCHESTRATOR_HPP
#define FEDSIM_ORCHESTRATOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/config.hpp"
#include "fedsim/data_sim.hpp"
#include "fedsim/fl_core.hpp"
#include "fedsim/round_record.hpp"

namespace fedsim {

// Upload message: the only thing a client sends back after local training.
struct ClientUpdate {
  int client_id = -1;
  PseudoGradient delta;
};

// Scalar metrics message from one client's local evaluation.
struct ValReport {
  int client_id = -1;
  double loss = 0.0;
  double accuracy = 0.0;
};

// Client-side endpoint. It owns the raw shards; every public method returns
// only parameter vectors, pseudo-gradients, or scalar reports, which is the
// entire client/server boundary.
class ClientNode {
 public:
  ClientNode(int id, ShardSplits splits);

  int id() const { return id_; }
  std::size_t train_size() const { return splits_.train.n; }

  ClientUpdate local_update(const SmallModel& model, const ModelParams& global,
                            const LocalTrainConfig& cfg, RngStream rng) const;
  ValReport validate(const SmallModel& model, const ModelParams& params) const;
  ValReport test(const SmallModel& model, const ModelParams& params) const;

  // Local-only training: same interface contract, bigger budget.
  ModelParams train_alone(const SmallModel& model, const ModelParams& init,
                          const LocalTrainConfig& cfg, RngStream rng) const;

 private:
  int id_;
  ShardSplits splits_;
};

// Server-side operations: note the argument types - the server consumes
// messages and weights, never data shards.
ModelParams server_aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates,
                             std::span<const double> weights, double server_lr);
double pool_validation_losses(const std::vector<ValReport>& reports);

// The federation as built from a config: the shared model shape, one node per
// client, and the data-size aggregation weights n_k / sum(n).
struct Federation {
  ModelConfig model_cfg;
  std::vector<ClientNode> clients;
  std::vector<double> size_weights;
};

Federation build_federation(const ExperimentConfig& cfg);

struct RunSummary {
  std::string kind;
  std::uint64_t seed = 0;
  long rounds = 0;
  double final_hyper_loss = 0.0;
  double final_test_acc = 0.0;
  long best_round = 0;
  double best_hyper_loss = 0.0;
  double best_test_acc = 0.0;
  // bandit runs
  double final_mu = 0.0;
  double bandit_target = 0.0;
  // local-only runs: accuracy on every client's test shard
  std::vector<double> cross_test_acc;

  nlohmann::json to_json() const;
};

// Full search loop: sample hyperparameters, train locally in parallel,
// aggregate, validate, reward, policy step. Streams rounds.csv (flushed per
// round), then writes timings.csv, summary.json, and final/best checkpoints
// under cfg.out_dir.
RunSummary run_searched(const ExperimentConfig& cfg, bool quiet = false);

// Same loop with fixed hyperparameters, data-size aggregation weights, and
// server learning rate 1 (FedAvg, plus a proximal term for FedProx).
RunSummary run_baseline(const ExperimentConfig& cfg, bool quiet = false);

// Trains on a single client's shard for the equivalent compute budget and
// cross-evaluates on every client's test shard.
RunSummary local_only(const ExperimentConfig& cfg, int client_id, bool quiet = false);

// Agent-only loop on the stationary synthetic reward -(h - target)^2, with
// h and target in the dim's raw units; exercises the policy code without the
// FL stack.
RunSummary run_bandit(const ExperimentConfig& cfg, bool quiet = false);

}  // namespace fedsim

#endif
