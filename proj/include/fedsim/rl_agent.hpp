#ifndef FEDSIM_RL_AGENT_HPP
#define FEDSIM_RL_AGENT_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/hp_space.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sampler.hpp"

namespace fedsim {

enum class SearchMode { discrete, continuous, mlp };

std::string to_string(SearchMode mode);
SearchMode search_mode_from_string(const std::string& text);

// Direction of the policy update. `ascent` climbs the windowed objective
// (rewards should improve over training); `as_printed` flips the sign, which
// is only useful for side-by-side comparison runs.
enum class UpdateSign { ascent, as_printed };

std::string to_string(UpdateSign sign);
UpdateSign update_sign_from_string(const std::string& text);

struct AgentConfig {
  SearchMode mode = SearchMode::continuous;
  double gamma_h = 1e-2;    // policy learning rate
  int window = 10;          // Z: the window keeps Z+1 most recent rounds
  UpdateSign sign = UpdateSign::ascent;
  double sigma_floor = 1e-3;
  double init_sigma = 0.5;
  std::size_t mlp_hidden = 32;
  DiscreteSampleOptions discrete;  // grid sampling limits (discrete mode only)
};

struct WindowEntry {
  int round = 0;
  double reward = 0.0;
  std::vector<double> score_mu;
  std::vector<double> score_log_sigma;
};

// Sliding window over the most recent rewards and their stored score vectors.
// Holds at most Z+1 entries; the oldest entry is evicted first.
class RewardWindow {
 public:
  explicit RewardWindow(int z);

  void push(WindowEntry entry);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const WindowEntry& operator[](std::size_t i) const { return entries_[i]; }

  // Arithmetic mean of the rewards currently in the window.
  double baseline() const;

 private:
  std::size_t capacity_;
  std::deque<WindowEntry> entries_;
};

// Relative loss reduction: (prev_loss - new_loss) / prev_loss.
// Throws RewardError when prev_loss is not a positive finite value or
// new_loss is not finite (both signal a diverged model).
double compute_reward(double prev_loss, double new_loss);

// One-hidden-layer perceptron producing a residual update for the flattened
// distribution parameters (mu ++ log_sigma, length 2D). The output layer is
// zero-initialized so the first forward pass is the identity.
class MlpPolicy {
 public:
  MlpPolicy(std::size_t io_width, std::size_t hidden_width, RngStream& init_rng);

  std::size_t weight_count() const { return weights_.size(); }
  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  // Computes the residual for `input` and caches activations for backward().
  std::vector<double> forward(std::span<const double> input);

  // Gradient of dot(g, residual) with respect to the weights, using the
  // activations cached by the most recent forward().
  std::vector<double> backward(std::span<const double> g) const;

 private:
  std::size_t io_width_;
  std::size_t hidden_width_;
  std::vector<double> weights_;  // [w1 | b1 | w2 | b2]
  std::vector<double> input_;    // cached by forward()
  std::vector<double> hidden_;   // cached tanh activations
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // In-place ascent step: w += lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<double> w, std::span<const double> grad, double lr);
};

// Online policy-gradient agent over a hyperparameter space. The orchestrator
// owns one instance and drives it sequentially: sample, observe the hyper
// loss, record the reward, step the policy.
class RlAgent {
 public:
  RlAgent(const HyperparamSpace& space, const AgentConfig& config, std::uint64_t master_seed);

  // Draws the hyperparameters for the next round from the current policy.
  HyperparamSample next_hyperparams(SampleStats* stats = nullptr);

  // Folds a new hyper loss into the agent. Returns the reward relative to the
  // previous loss, or nullopt on the very first observation.
  std::optional<double> observe_hyper_loss(double hyper_loss);

  // Pushes (reward, stored sample scores) into the window.
  void record_round(const HyperparamSample& sample, double reward);

  // One policy update from the current window; dispatches on the mode.
  void policy_step();
  void policy_step_direct();
  void policy_step_mlp();

  // Windowed objective gradient g = sum_tau (r_tau - baseline) * score_tau,
  // flattened as [g_mu | g_log_sigma]. Sign convention is ascent; the
  // configured sign flag is applied inside the policy steps only.
  std::vector<double> window_gradient() const;

  const DistributionParams& policy() const { return policy_; }
  void set_policy(DistributionParams params);
  const RewardWindow& window() const { return window_; }
  const AgentConfig& config() const { return config_; }
  const HyperparamSpace& space() const { return space_; }
  MlpPolicy* mlp() { return mlp_ ? &*mlp_ : nullptr; }
  int rounds_recorded() const { return rounds_recorded_; }

 private:
  void clamp_sigma_floor();

  HyperparamSpace space_;
  AgentConfig config_;
  DistributionParams policy_;
  RewardWindow window_;
  RngStream sample_rng_;
  std::optional<double> prev_hyper_loss_;
  std::optional<MlpPolicy> mlp_;
  AdamState adam_;
  int rounds_recorded_ = 0;
};

}  // namespace fedsim
#endif
