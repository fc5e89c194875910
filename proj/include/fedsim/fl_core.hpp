#ifndef FEDSIM_FL_CORE_HPP
#define FEDSIM_FL_CORE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/data_sim.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class ModelKind { softmax_regression, mlp_1_hidden };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

struct ModelConfig {
  ModelKind kind = ModelKind::softmax_regression;
  std::size_t d_in = 0;
  std::size_t classes = 0;
  std::size_t hidden = 0;  // mlp_1_hidden only
};

struct LayerSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t fan_in = 0;
};

struct ModelLayout {
  std::vector<LayerSlice> slices;
  std::size_t total = 0;
};

struct ModelParams {
  std::vector<double> values;
};

// Difference global-minus-local after local training; the server treats it as
// a gradient. Same flat layout as ModelParams.
struct PseudoGradient {
  std::vector<double> values;
};

struct LocalTrainConfig {
  double learning_rate = 0.0;  // > 0
  long iterations = 0;         // >= 1 mini-batch steps
  long batch_size = 0;         // >= 1
  double prox_mu = 0.0;        // >= 0; 0 disables the proximal term
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Small classifier family with hand-written gradients: plain softmax
// regression or one tanh hidden layer in front of it.
class SmallModel {
 public:
  explicit SmallModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const ModelLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.total; }

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer.
  ModelParams init_params(RngStream& rng) const;

  // Class probabilities for one sample; probs must hold `classes` values.
  void predict(const ModelParams& params, const double* x, double* probs) const;

  // Mean cross-entropy over the index batch plus its gradient (written into
  // grad, resized and zeroed here). Probabilities are clamped to
  // [1e-12, 1] before the log.
  double batch_gradient(const ModelParams& params, const DataShard& shard,
                        std::span<const std::size_t> batch, std::vector<double>& grad) const;

 private:
  ModelConfig cfg_;
  ModelLayout layout_;
};

// `iterations` mini-batch SGD steps on the shard, minimizing cross-entropy
// plus (prox_mu/2)*||theta - global||^2. Batches walk a seeded shuffle of the
// shard, reshuffling at each epoch boundary. Returns the trained local params
// and
// the pseudo-gradient global - local. `client_id` is used in diagnostics only.
std::pair<ModelParams, PseudoGradient> local_train(const SmallModel& model,
                                                   const ModelParams& global,
                                                   const DataShard& shard,
                                                   const LocalTrainConfig& cfg, RngStream& rng,
                                                   int client_id = -1);

// One SGD step on the aggregated pseudo-gradient: global - server_lr * sum_k
// weights[k] * deltas[k]. Weights must be non-negative and sum to 1 within
// 1e-9. With server_lr = 1 this is exactly the weighted parameter average.
ModelParams server_update(const ModelParams& global, const std::vector<PseudoGradient>& deltas,
                          std::span<const double> weights, double server_lr);

// Mean cross-entropy and top-1 accuracy over the shard; deterministic.
EvalResult evaluate(const SmallModel& model, const ModelParams& params, const DataShard& shard);

// Unweighted mean of per-client validation losses.
double hyper_loss(std::span<const double> val_losses);

// Round-trip-exact JSON checkpoints (model shape + flat parameter vector).
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params);
std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path);

}  // namespace fedsim
#endif
