#include "fedsim/fl_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

constexpr double kProbFloor = 1e-12;

void softmax_in_place(std::span<double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

double clamped_nll(double prob) { return -std::log(std::clamp(prob, kProbFloor, 1.0)); }

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::softmax_regression: return "softmax-regression";
    case ModelKind::mlp_1_hidden: return "mlp-1-hidden";
  }
  throw std::logic_error("unreachable model kind");
}

ModelKind model_kind_from_string(const std::string& text) {
  if (text == "softmax-regression") return ModelKind::softmax_regression;
  if (text == "mlp-1-hidden") return ModelKind::mlp_1_hidden;
  throw ConfigError("unknown model kind '" + text +
                    "' (expected softmax-regression or mlp-1-hidden)");
}

SmallModel::SmallModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.d_in == 0) throw ConfigError("model.d_in must be >= 1");
  if (cfg.classes < 2) throw ConfigError("model.classes must be >= 2");
  if (cfg.kind == ModelKind::mlp_1_hidden && cfg.hidden == 0) {
    throw ConfigError("model.hidden must be >= 1 for mlp-1-hidden");
  }
  std::size_t offset = 0;
  auto add = [&](const std::string& name, std::size_t size, std::size_t fan_in) {
    layout_.slices.push_back({name, offset, size, fan_in});
    offset += size;
  };
  if (cfg.kind == ModelKind::softmax_regression) {
    add("w", cfg.classes * cfg.d_in, cfg.d_in);
    add("b", cfg.classes, cfg.d_in);
  } else {
    add("w1", cfg.hidden * cfg.d_in, cfg.d_in);
    add("b1", cfg.hidden, cfg.d_in);
    add("w2", cfg.classes * cfg.hidden, cfg.hidden);
    add("b2", cfg.classes, cfg.hidden);
  }
  layout_.total = offset;
}

ModelParams SmallModel::init_params(RngStream& rng) const {
  ModelParams params;
  params.values.assign(layout_.total, 0.0);
  for (const LayerSlice& slice : layout_.slices) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(slice.fan_in));
    for (std::size_t j = 0; j < slice.size; ++j) {
      params.values[slice.offset + j] = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  return params;
}

void SmallModel::predict(const ModelParams& params, const double* x, double* probs) const {
  const double* v = params.values.data();
  if (cfg_.kind == ModelKind::softmax_regression) {
    const double* w = v;
    const double* b = v + cfg_.classes * cfg_.d_in;
    for (std::size_t c = 0; c < cfg_.classes; ++c) {
      double z = b[c];
      const double* row = w + c * cfg_.d_in;
      for (std::size_t j = 0; j < cfg_.d_in; ++j) z += row[j] * x[j];
      probs[c] = z;
    }
  } else {
    const double* w1 = v;
    const double* b1 = w1 + cfg_.hidden * cfg_.d_in;
    const double* w2 = b1 + cfg_.hidden;
    const double* b2 = w2 + cfg_.classes * cfg_.hidden;
    std::vector<double> hidden(cfg_.hidden);
    for (std::size_t h = 0; h < cfg_.hidden; ++h) {
      double z = b1[h];
      const double* row = w1 + h * cfg_.d_in;
      for (std::size_t j = 0; j < cfg_.d_in; ++j) z += row[j] * x[j];
      hidden[h] = std::tanh(z);
    }
    for (std::size_t c = 0; c < cfg_.classes; ++c) {
      double z = b2[c];
      const double* row = w2 + c * cfg_.hidden;
      for (std::size_t h = 0; h < cfg_.hidden; ++h) z += row[h] * hidden[h];
      probs[c] = z;
    }
  }
  softmax_in_place({probs, cfg_.classes});
}

double SmallModel::batch_gradient(const ModelParams& params, const DataShard& shard,
                                  std::span<const std::size_t> batch,
                                  std::vector<double>& grad) const {
  if (batch.empty()) throw std::logic_error("empty training batch");
  grad.assign(layout_.total, 0.0);
  const double* v = params.values.data();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;

  if (cfg_.kind == ModelKind::softmax_regression) {
    const double* w = v;
    double* gw = grad.data();
    double* gb = grad.data() + cfg_.classes * cfg_.d_in;
    std::vector<double> probs(cfg_.classes);
    for (std::size_t idx : batch) {
      const double* x = shard.row(idx);
      const int label = shard.labels[idx];
      const double* b = v + cfg_.classes * cfg_.d_in;
      for (std::size_t c = 0; c < cfg_.classes; ++c) {
        double z = b[c];
        const double* row = w + c * cfg_.d_in;
        for (std::size_t j = 0; j < cfg_.d_in; ++j) z += row[j] * x[j];
        probs[c] = z;
      }
      softmax_in_place(probs);
      loss += clamped_nll(probs[static_cast<std::size_t>(label)]);
      for (std::size_t c = 0; c < cfg_.classes; ++c) {
        const double dz = (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0)) * inv_batch;
        gb[c] += dz;
        double* grow = gw + c * cfg_.d_in;
        for (std::size_t j = 0; j < cfg_.d_in; ++j) grow[j] += dz * x[j];
      }
    }
  } else {
    const double* w1 = v;
    const double* b1 = w1 + cfg_.hidden * cfg_.d_in;
    const double* w2 = b1 + cfg_.hidden;
    const double* b2 = w2 + cfg_.classes * cfg_.hidden;
    double* gw1 = grad.data();
    double* gb1 = gw1 + cfg_.hidden * cfg_.d_in;
    double* gw2 = gb1 + cfg_.hidden;
    double* gb2 = gw2 + cfg_.classes * cfg_.hidden;
    std::vector<double> hidden(cfg_.hidden);
    std::vector<double> probs(cfg_.classes);
    std::vector<double> dhidden(cfg_.hidden);
    for (std::size_t idx : batch) {
      const double* x = shard.row(idx);
      const int label = shard.labels[idx];
      for (std::size_t h = 0; h < cfg_.hidden; ++h) {
        double z = b1[h];
        const double* row = w1 + h * cfg_.d_in;
        for (std::size_t j = 0; j < cfg_.d_in; ++j) z += row[j] * x[j];
        hidden[h] = std::tanh(z);
      }
      for (std::size_t c = 0; c < cfg_.classes; ++c) {
        double z = b2[c];
        const double* row = w2 + c * cfg_.hidden;
        for (std::size_t h = 0; h < cfg_.hidden; ++h) z += row[h] * hidden[h];
        probs[c] = z;
      }
      softmax_in_place(probs);
      loss += clamped_nll(probs[static_cast<std::size_t>(label)]);

      std::fill(dhidden.begin(), dhidden.end(), 0.0);
      for (std::size_t c = 0; c < cfg_.classes; ++c) {
        const double dz = (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0)) * inv_batch;
        gb2[c] += dz;
        double* grow = gw2 + c * cfg_.hidden;
        const double* row = w2 + c * cfg_.hidden;
        for (std::size_t h = 0; h < cfg_.hidden; ++h) {
          grow[h] += dz * hidden[h];
          dhidden[h] += dz * row[h];
        }
      }
      for (std::size_t h = 0; h < cfg_.hidden; ++h) {
        const double dz = dhidden[h] * (1.0 - hidden[h] * hidden[h]);
        gb1[h] += dz;
        double* grow = gw1 + h * cfg_.d_in;
        for (std::size_t j = 0; j < cfg_.d_in; ++j) grow[j] += dz * x[j];
      }
    }
  }
  return loss * inv_batch;
}

std::pair<ModelParams, PseudoGradient> local_train(const SmallModel& model,
                                                   const ModelParams& global,
                                                   const DataShard& shard,
                                                   const LocalTrainConfig& cfg, RngStream& rng,
                                                   int client_id) {
  if (shard.n == 0) throw ConfigError("local training on an empty shard");
  if (!(cfg.learning_rate > 0.0)) {
    throw ConfigError("client learning rate must be > 0, got " + std::to_string(cfg.learning_rate));
  }
  if (cfg.iterations < 1) throw ConfigError("local iterations must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.prox_mu < 0.0) throw ConfigError("prox_mu must be >= 0");
  if (global.values.size() != model.param_count()) {
    throw ConfigError("global parameter vector does not match the model layout");
  }

  const std::string who = client_id >= 0 ? "client " + std::to_string(client_id) : "local run";

  ModelParams local = global;
  std::vector<double> grad;
  std::vector<std::size_t> order(shard.n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = shard.n;  // forces a shuffle before the first batch

  for (long it = 0; it < cfg.iterations; ++it) {
    if (cursor >= shard.n) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                   shard.n - cursor);
    const std::span<const std::size_t> batch(order.data() + cursor, take);
    cursor += take;

    const double batch_loss = model.batch_gradient(local, shard, batch, grad);
    if (!std::isfinite(batch_loss)) {
      throw DivergenceError(who + " diverged at local iteration " + std::to_string(it) +
                            " (loss is not finite)");
    }
    if (cfg.prox_mu > 0.0) {
      for (std::size_t j = 0; j < grad.size(); ++j) {
        grad[j] += cfg.prox_mu * (local.values[j] - global.values[j]);
      }
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
      local.values[j] -= cfg.learning_rate * grad[j];
    }
  }

  for (double value : local.values) {
    if (!std::isfinite(value)) {
      throw DivergenceError(who + " diverged (non-finite parameters after local training)");
    }
  }

  PseudoGradient delta;
  delta.values.resize(local.values.size());
  for (std::size_t j = 0; j < local.values.size(); ++j) {
    delta.values[j] = global.values[j] - local.values[j];
  }
  return {std::move(local), std::move(delta)};
}

ModelParams server_update(const ModelParams& global, const std::vector<PseudoGradient>& deltas,
                          std::span<const double> weights, double server_lr) {
  if (deltas.empty()) throw ConfigError("server update needs at least one pseudo-gradient");
  if (weights.size() != deltas.size()) {
    throw ConfigError("aggregation weights length " + std::to_string(weights.size()) +
                      " does not match " + std::to_string(deltas.size()) + " pseudo-gradients");
  }
  if (!std::isfinite(server_lr) || server_lr < 0.0) {
    throw ConfigError("server learning rate must be >= 0 and finite");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("aggregation weights must be >= 0");
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw ConfigError("aggregation weights must sum to 1, got " + std::to_string(weight_sum));
  }
  for (const PseudoGradient& d : deltas) {
    if (d.values.size() != global.values.size()) {
      throw ConfigError("pseudo-gradient length does not match the global model");
    }
  }

  std::vector<double> combined(global.values.size(), 0.0);
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double alpha = weights[k];
    const std::vector<double>& d = deltas[k].values;
    for (std::size_t j = 0; j < combined.size(); ++j) combined[j] += alpha * d[j];
  }
  ModelParams out;
  out.values.resize(global.values.size());
  for (std::size_t j = 0; j < combined.size(); ++j) {
    out.values[j] = global.values[j] - server_lr * combined[j];
  }
  return out;
}

EvalResult evaluate(const SmallModel& model, const ModelParams& params, const DataShard& shard) {
  if (shard.n == 0) throw ConfigError("evaluation on an empty shard");
  std::vector<double> probs(model.config().classes);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < shard.n; ++i) {
    model.predict(params, shard.row(i), probs.data());
    const std::size_t label = static_cast<std::size_t>(shard.labels[i]);
    loss += clamped_nll(probs[label]);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (probs[c] > probs[best]) best = c;
    }
    if (best == label) ++correct;
  }
  return {loss / static_cast<double>(shard.n),
          static_cast<double>(correct) / static_cast<double>(shard.n)};
}

double hyper_loss(std::span<const double> val_losses) {
  if (val_losses.empty()) throw ConfigError("hyper loss of an empty loss vector");
  double sum = 0.0;
  for (double v : val_losses) {
    if (!std::isfinite(v)) throw RewardError("validation loss is not finite");
    sum += v;
  }
  return sum / static_cast<double>(val_losses.size());
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  nlohmann::json doc;
  doc["kind"] = to_string(cfg.kind);
  doc["d_in"] = cfg.d_in;
  doc["classes"] = cfg.classes;
  doc["hidden"] = cfg.hidden;
  doc["values"] = params.values;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed while writing checkpoint '" + path + "'");
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint '" + path + "': " + e.what());
  }
  ModelConfig cfg;
  ModelParams params;
  try {
    cfg.kind = model_kind_from_string(doc.at("kind").get<std::string>());
    cfg.d_in = doc.at("d_in").get<std::size_t>();
    cfg.classes = doc.at("classes").get<std::size_t>();
    cfg.hidden = doc.at("hidden").get<std::size_t>();
    params.values = doc.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint '" + path + "' is missing fields: " + e.what());
  }
  const SmallModel model(cfg);
  if (params.values.size() != model.param_count()) {
    throw IoError("checkpoint '" + path + "' parameter count does not match its layout");
  }
  return {cfg, std::move(params)};
}

}  // namespace fedsim
