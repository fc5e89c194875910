#include "fedsim/rl_agent.hpp"

#include <cmath>
#include <stdexcept>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::discrete: return "discrete";
    case SearchMode::continuous: return "continuous";
    case SearchMode::mlp: return "mlp";
  }
  throw std::logic_error("unreachable search mode");
}

SearchMode search_mode_from_string(const std::string& text) {
  if (text == "discrete" || text == "ds") return SearchMode::discrete;
  if (text == "continuous" || text == "cs") return SearchMode::continuous;
  if (text == "mlp") return SearchMode::mlp;
  throw ConfigError("unknown search mode '" + text +
                    "' (expected ds/discrete, cs/continuous, or mlp)");
}

std::string to_string(UpdateSign sign) {
  return sign == UpdateSign::ascent ? "ascent" : "as-printed";
}

UpdateSign update_sign_from_string(const std::string& text) {
  if (text == "ascent") return UpdateSign::ascent;
  if (text == "as-printed") return UpdateSign::as_printed;
  throw ConfigError("unknown update sign '" + text + "' (expected ascent or as-printed)");
}

RewardWindow::RewardWindow(int z) {
  if (z < 0) throw ConfigError("window size must be >= 0, got " + std::to_string(z));
  capacity_ = static_cast<std::size_t>(z) + 1;
}

void RewardWindow::push(WindowEntry entry) {
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_front();
}

double RewardWindow::baseline() const {
  if (entries_.empty()) throw std::logic_error("baseline of an empty reward window");
  double sum = 0.0;
  for (const WindowEntry& e : entries_) sum += e.reward;
  return sum / static_cast<double>(entries_.size());
}

double compute_reward(double prev_loss, double new_loss) {
  if (!std::isfinite(prev_loss) || !std::isfinite(new_loss)) {
    throw RewardError("hyper loss is not finite; the model has diverged");
  }
  if (prev_loss <= 0.0) {
    throw RewardError("previous hyper loss must be positive, got " + std::to_string(prev_loss));
  }
  return (prev_loss - new_loss) / prev_loss;
}

MlpPolicy::MlpPolicy(std::size_t io_width, std::size_t hidden_width, RngStream& init_rng)
    : io_width_(io_width), hidden_width_(hidden_width) {
  if (io_width == 0 || hidden_width == 0) {
    throw ConfigError("mlp policy layer widths must be positive");
  }
  const std::size_t n = (io_width_ + 1) * hidden_width_ + (hidden_width_ + 1) * io_width_;
  weights_.assign(n, 0.0);
  // Hidden layer gets a small random init; output layer stays at zero so the
  // policy starts as the identity map.
  const double bound = 1.0 / std::sqrt(static_cast<double>(io_width_));
  for (std::size_t j = 0; j < io_width_ * hidden_width_; ++j) {
    weights_[j] = bound * (2.0 * init_rng.uniform() - 1.0);
  }
}

std::vector<double> MlpPolicy::forward(std::span<const double> input) {
  if (input.size() != io_width_) throw std::logic_error("mlp input width mismatch");
  input_.assign(input.begin(), input.end());
  const double* w1 = weights_.data();
  const double* b1 = w1 + io_width_ * hidden_width_;
  const double* w2 = b1 + hidden_width_;
  const double* b2 = w2 + hidden_width_ * io_width_;

  hidden_.assign(hidden_width_, 0.0);
  for (std::size_t h = 0; h < hidden_width_; ++h) {
    double z = b1[h];
    for (std::size_t i = 0; i < io_width_; ++i) z += input_[i] * w1[i * hidden_width_ + h];
    hidden_[h] = std::tanh(z);
  }
  std::vector<double> out(io_width_);
  for (std::size_t o = 0; o < io_width_; ++o) {
    double z = b2[o];
    for (std::size_t h = 0; h < hidden_width_; ++h) z += hidden_[h] * w2[h * io_width_ + o];
    out[o] = z;
  }
  return out;
}

std::vector<double> MlpPolicy::backward(std::span<const double> g) const {
  if (g.size() != io_width_) throw std::logic_error("mlp gradient width mismatch");
  if (input_.size() != io_width_) throw std::logic_error("mlp backward before forward");
  const double* w2 = weights_.data() + io_width_ * hidden_width_ + hidden_width_;

  std::vector<double> grad(weights_.size(), 0.0);
  double* gw1 = grad.data();
  double* gb1 = gw1 + io_width_ * hidden_width_;
  double* gw2 = gb1 + hidden_width_;
  double* gb2 = gw2 + hidden_width_ * io_width_;

  for (std::size_t o = 0; o < io_width_; ++o) gb2[o] = g[o];
  for (std::size_t h = 0; h < hidden_width_; ++h) {
    for (std::size_t o = 0; o < io_width_; ++o) gw2[h * io_width_ + o] = hidden_[h] * g[o];
  }
  for (std::size_t h = 0; h < hidden_width_; ++h) {
    double back = 0.0;
    for (std::size_t o = 0; o < io_width_; ++o) back += w2[h * io_width_ + o] * g[o];
    const double gh = back * (1.0 - hidden_[h] * hidden_[h]);
    gb1[h] = gh;
    for (std::size_t i = 0; i < io_width_; ++i) gw1[i * hidden_width_ + h] = input_[i] * gh;
  }
  return grad;
}

void AdamState::step(std::span<double> w, std::span<const double> grad, double lr) {
  if (m.size() != w.size()) {
    m.assign(w.size(), 0.0);
    v.assign(w.size(), 0.0);
    t = 0;
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t j = 0; j < w.size(); ++j) {
    m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
    v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
    w[j] += lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
  }
}

RlAgent::RlAgent(const HyperparamSpace& space, const AgentConfig& config, std::uint64_t master_seed)
    : space_(space),
      config_(config),
      policy_(initial_params(space, config.init_sigma)),
      window_(config.window),
      sample_rng_(RngStream::derive(master_seed, "agent-sample")) {
  if (!(config_.gamma_h > 0.0)) {
    throw ConfigError("agent.gamma_h must be > 0, got " + std::to_string(config_.gamma_h));
  }
  if (!(config_.sigma_floor > 0.0)) {
    throw ConfigError("agent.sigma_floor must be > 0, got " + std::to_string(config_.sigma_floor));
  }
  if (!(config_.init_sigma >= config_.sigma_floor)) {
    throw ConfigError("agent.init_sigma must be >= sigma_floor");
  }
  if (config_.mode == SearchMode::mlp) {
    RngStream init_rng = RngStream::derive(master_seed, "agent-mlp-init");
    mlp_.emplace(2 * space_.size(), config_.mlp_hidden, init_rng);
  }
  clamp_sigma_floor();
}

void RlAgent::set_policy(DistributionParams params) {
  if (params.mu.size() != space_.size() || params.log_sigma.size() != space_.size()) {
    throw ConfigError("policy params length does not match space dims");
  }
  policy_ = std::move(params);
  clamp_sigma_floor();
}

void RlAgent::clamp_sigma_floor() {
  const double floor = std::log(config_.sigma_floor);
  for (double& ls : policy_.log_sigma) ls = std::max(ls, floor);
}

HyperparamSample RlAgent::next_hyperparams(SampleStats* stats) {
  if (config_.mode == SearchMode::discrete) {
    return sample_discrete(space_, policy_, sample_rng_, config_.discrete, stats);
  }
  return sample_continuous(space_, policy_, sample_rng_, stats);
}

std::optional<double> RlAgent::observe_hyper_loss(double hyper_loss) {
  if (!prev_hyper_loss_) {
    if (!std::isfinite(hyper_loss)) {
      throw RewardError("initial hyper loss is not finite; the model has diverged");
    }
    prev_hyper_loss_ = hyper_loss;
    return std::nullopt;
  }
  const double reward = compute_reward(*prev_hyper_loss_, hyper_loss);
  prev_hyper_loss_ = hyper_loss;
  return reward;
}

void RlAgent::record_round(const HyperparamSample& sample, double reward) {
  if (!std::isfinite(reward)) throw RewardError("reward is not finite");
  WindowEntry entry;
  entry.round = rounds_recorded_;
  entry.reward = reward;
  entry.score_mu = sample.score_mu;
  entry.score_log_sigma = sample.score_log_sigma;
  window_.push(std::move(entry));
  ++rounds_recorded_;
}

std::vector<double> RlAgent::window_gradient() const {
  const std::size_t n_dims = space_.size();
  std::vector<double> g(2 * n_dims, 0.0);
  if (window_.empty()) return g;
  const double baseline = window_.baseline();
  for (std::size_t i = 0; i < window_.size(); ++i) {
    const WindowEntry& e = window_[i];
    const double advantage = e.reward - baseline;
    for (std::size_t d = 0; d < n_dims; ++d) {
      g[d] += advantage * e.score_mu[d];
      g[n_dims + d] += advantage * e.score_log_sigma[d];
    }
  }
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw DivergenceError("policy gradient is not finite (window of " +
                            std::to_string(window_.size()) + " rounds)");
    }
  }
  return g;
}

void RlAgent::policy_step() {
  if (config_.mode == SearchMode::mlp) {
    policy_step_mlp();
  } else {
    policy_step_direct();
  }
}

void RlAgent::policy_step_direct() {
  if (window_.empty()) throw std::logic_error("policy step with an empty reward window");
  std::vector<double> g = window_gradient();
  const double step = config_.sign == UpdateSign::ascent ? config_.gamma_h : -config_.gamma_h;
  const std::size_t n_dims = space_.size();
  for (std::size_t d = 0; d < n_dims; ++d) {
    policy_.mu[d] += step * g[d];
    policy_.log_sigma[d] += step * g[n_dims + d];
  }
  clamp_sigma_floor();
}

void RlAgent::policy_step_mlp() {
  if (window_.empty()) throw std::logic_error("policy step with an empty reward window");
  if (!mlp_) throw std::logic_error("policy_step_mlp on a non-mlp agent");
  const std::size_t n_dims = space_.size();

  std::vector<double> g = window_gradient();
  if (config_.sign == UpdateSign::as_printed) {
    for (double& v : g) v = -v;
  }

  std::vector<double> input(2 * n_dims);
  for (std::size_t d = 0; d < n_dims; ++d) {
    input[d] = policy_.mu[d];
    input[n_dims + d] = policy_.log_sigma[d];
  }

  // The candidate policy is input + residual; its gradient with respect to
  // the weights is backpropagated through the cached forward pass.
  (void)mlp_->forward(input);
  const std::vector<double> grad_w = mlp_->backward(g);
  for (double v : grad_w) {
    if (!std::isfinite(v)) throw DivergenceError("mlp policy gradient is not finite");
  }
  adam_.step(mlp_->weights(), grad_w, config_.gamma_h);

  const std::vector<double> residual = mlp_->forward(input);
  for (std::size_t d = 0; d < n_dims; ++d) {
    policy_.mu[d] = input[d] + residual[d];
    policy_.log_sigma[d] = input[n_dims + d] + residual[n_dims + d];
  }
  clamp_sigma_floor();
}

}  // namespace fedsim
