#include "fedsim/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fedsim/errors.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rl_agent.hpp"
#include "fedsim/sampler.hpp"

namespace fedsim {

namespace fs = std::filesystem;

ClientNode::ClientNode(int id, ShardSplits splits) : id_(id), splits_(std::move(splits)) {}

ClientUpdate ClientNode::local_update(const SmallModel& model, const ModelParams& global,
                                      const LocalTrainConfig& cfg, RngStream rng) const {
  auto [local, delta] = local_train(model, global, splits_.train, cfg, rng, id_);
  (void)local;  // the trained weights stay on the client
  return {id_, std::move(delta)};
}

ValReport ClientNode::validate(const SmallModel& model, const ModelParams& params) const {
  const EvalResult r = evaluate(model, params, splits_.val);
  return {id_, r.loss, r.accuracy};
}

ValReport ClientNode::test(const SmallModel& model, const ModelParams& params) const {
  const EvalResult r = evaluate(model, params, splits_.test);
  return {id_, r.loss, r.accuracy};
}

ModelParams ClientNode::train_alone(const SmallModel& model, const ModelParams& init,
                                    const LocalTrainConfig& cfg, RngStream rng) const {
  auto [local, delta] = local_train(model, init, splits_.train, cfg, rng, id_);
  (void)delta;
  return std::move(local);
}

ModelParams server_aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates,
                             std::span<const double> weights, double server_lr) {
  std::vector<PseudoGradient> deltas;
  deltas.reserve(updates.size());
  for (const ClientUpdate& u : updates) deltas.push_back(u.delta);
  return server_update(global, deltas, weights, server_lr);
}

double pool_validation_losses(const std::vector<ValReport>& reports) {
  std::vector<double> losses;
  losses.reserve(reports.size());
  for (const ValReport& r : reports) losses.push_back(r.loss);
  return hyper_loss(losses);
}

// ---------------------------------------------------------------------------
// Setup

Federation build_federation(const ExperimentConfig& cfg) {
  DataShard pool;
  int classes = 0;
  if (cfg.data.csv_path.empty()) {
    SyntheticSpec spec;
    spec.n_samples = cfg.data.n_samples;
    spec.d_in = cfg.data.d_in;
    spec.classes = cfg.data.classes;
    spec.cluster_spread = cfg.data.cluster_spread;
    spec.domain_shift = cfg.data.domain_shift;
    spec.seed = cfg.seed;
    pool = generate(spec);
    classes = cfg.data.classes;
  } else {
    pool = load_csv_dataset(cfg.data.csv_path);
    for (int label : pool.labels) classes = std::max(classes, label + 1);
    if (classes < 2) {
      throw ConfigError("dataset '" + cfg.data.csv_path + "' has fewer than 2 classes");
    }
    if (pool.n < cfg.clients) {
      throw ConfigError("dataset '" + cfg.data.csv_path + "' has fewer samples than clients");
    }
  }

  std::vector<DataShard> shards;
  if (cfg.data.size_weights.empty()) {
    shards = partition_dirichlet(pool, cfg.clients, cfg.data.dirichlet_alpha, cfg.seed);
  } else {
    shards = partition_dirichlet(pool, cfg.clients, cfg.data.dirichlet_alpha,
                                 cfg.data.size_weights, cfg.seed);
  }

  Federation fed;
  fed.model_cfg = cfg.model;
  fed.model_cfg.d_in = pool.d_in;
  fed.model_cfg.classes = static_cast<std::size_t>(classes);

  std::size_t total = 0;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    if (cfg.data.domain_shift > 0.0) {
      apply_domain_shift(shards[k], k, cfg.data.domain_shift, cfg.seed);
    }
    const std::uint64_t split_seed = RngStream::derive(cfg.seed, "client-split", k).next_u64();
    ShardSplits splits = split(shards[k], cfg.data.split, split_seed);
    total += splits.train.n;
    fed.clients.emplace_back(static_cast<int>(k), std::move(splits));
  }
  for (const ClientNode& c : fed.clients) {
    fed.size_weights.push_back(static_cast<double>(c.train_size()) /
                               static_cast<double>(total));
  }
  return fed;
}

// ---------------------------------------------------------------------------
// Round-loop machinery shared by the searched run and the baselines.

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Parallel fan-out over clients with deterministic slot-indexed results.
// Exceptions are captured per client and the lowest client id wins.
template <typename Fn>
void for_each_client(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long k = 0; k < static_cast<long>(n); ++k) {
    try {
      fn(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<ValReport> validate_all(const Federation& fed, const SmallModel& model,
                                    const ModelParams& params) {
  std::vector<ValReport> reports(fed.clients.size());
  for_each_client(fed.clients.size(),
                  [&](std::size_t k) { reports[k] = fed.clients[k].validate(model, params); });
  return reports;
}

double mean_test_accuracy(const Federation& fed, const SmallModel& model,
                          const ModelParams& params) {
  std::vector<ValReport> reports(fed.clients.size());
  for_each_client(fed.clients.size(),
                  [&](std::size_t k) { reports[k] = fed.clients[k].test(model, params); });
  double sum = 0.0;
  for (const ValReport& r : reports) sum += r.accuracy;
  return sum / static_cast<double>(reports.size());
}

// The training knobs one round actually uses, resolved from the sampled raw
// vector (searched dims) and the fixed config values (everything else).
struct ResolvedHp {
  double client_lr = 0.0;
  long iterations = 0;
  double server_lr = 0.0;
  std::vector<double> agg_weights;
};

ResolvedHp resolve_hyperparams(const HyperparamSpace& space, std::span<const double> raw,
                               const ExperimentConfig& cfg, std::span<const double> size_weights) {
  ResolvedHp hp;
  hp.client_lr = cfg.train.learning_rate;
  hp.iterations = cfg.train.iterations;
  hp.server_lr = cfg.train.server_lr;
  hp.agg_weights.assign(size_weights.begin(), size_weights.end());

  bool has_aw = false;
  for (std::size_t d = 0; d < space.size(); ++d) {
    const std::string& name = space.dims[d].name;
    if (name == kDimClientLr) {
      hp.client_lr = raw[d];
    } else if (name == kDimLocalIters) {
      hp.iterations = std::lround(raw[d]);
    } else if (name == kDimServerLr) {
      hp.server_lr = raw[d];
    } else if (name.rfind(kDimAggWeightPrefix, 0) == 0) {
      if (!has_aw) {
        hp.agg_weights.clear();
        has_aw = true;
      }
      hp.agg_weights.push_back(raw[d]);
    }
  }
  return hp;
}

// Fixed values echoed into the h_ columns of a baseline run.
std::vector<double> fixed_h_row(const HyperparamSpace& space, const ResolvedHp& hp) {
  std::vector<double> row(space.size(), 0.0);
  std::size_t aw = 0;
  for (std::size_t d = 0; d < space.size(); ++d) {
    const std::string& name = space.dims[d].name;
    if (name == kDimClientLr) {
      row[d] = hp.client_lr;
    } else if (name == kDimLocalIters) {
      row[d] = static_cast<double>(hp.iterations);
    } else if (name == kDimServerLr) {
      row[d] = hp.server_lr;
    } else if (name.rfind(kDimAggWeightPrefix, 0) == 0) {
      row[d] = hp.agg_weights[aw++];
    }
  }
  return row;
}

void policy_snapshot(const HyperparamSpace& space, const DistributionParams& params,
                     std::vector<double>& mu_raw, std::vector<double>& sigma_raw) {
  mu_raw = to_raw_continuous(space, params.mu);
  std::vector<double> hi(space.size());
  std::vector<double> lo(space.size());
  for (std::size_t d = 0; d < space.size(); ++d) {
    const double sigma = std::exp(params.log_sigma[d]);
    hi[d] = params.mu[d] + sigma;
    lo[d] = params.mu[d] - sigma;
  }
  const std::vector<double> hi_raw = to_raw_continuous(space, hi);
  const std::vector<double> lo_raw = to_raw_continuous(space, lo);
  sigma_raw.resize(space.size());
  for (std::size_t d = 0; d < space.size(); ++d) {
    sigma_raw[d] = 0.5 * (hi_raw[d] - lo_raw[d]);
  }
}

std::vector<std::string> dim_names(const HyperparamSpace& space) {
  std::vector<std::string> names;
  for (const HyperparamDim& d : space.dims) names.push_back(d.name);
  return names;
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
}

void write_summary(const std::string& out_dir, const RunSummary& summary,
                   const ExperimentConfig& cfg) {
  nlohmann::json j = summary.to_json();
  j["config"] = config_to_json(cfg);
  const std::string path = out_dir + "/summary.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void log_round(bool quiet, long q, long total, const RoundRecord& r) {
  if (quiet) return;
  const long stride = total <= 50 ? 1 : total / 50;
  if (q % stride != 0 && q != 1 && q != total) return;
  std::printf("round %4ld/%ld", q, total);
  if (r.has_fl) std::printf("  L_h=%.4f  test_acc=%.4f", r.hyper_loss, r.test_acc);
  std::printf("  reward=%+.5f\n", r.reward);
  std::fflush(stdout);
}

// One FL round: broadcast + local train + aggregate + validate. Fills the
// given record's fl fields and returns the new global model.
ModelParams fl_round(const ExperimentConfig& cfg, const Federation& fed, const SmallModel& model,
                     const ModelParams& global, const ResolvedHp& hp, double prox_mu, long q,
                     RoundRecord& rec) {
  LocalTrainConfig ltc;
  ltc.learning_rate = hp.client_lr;
  ltc.iterations = hp.iterations;
  ltc.batch_size = cfg.train.batch_size;
  ltc.prox_mu = prox_mu;

  auto t0 = std::chrono::steady_clock::now();
  std::vector<ClientUpdate> updates(fed.clients.size());
  for_each_client(fed.clients.size(), [&](std::size_t k) {
    RngStream rng = RngStream::derive(cfg.seed, "local", k, static_cast<std::uint64_t>(q));
    updates[k] = fed.clients[k].local_update(model, global, ltc, std::move(rng));
  });
  rec.timings.local_train_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  ModelParams next = server_aggregate(global, updates, hp.agg_weights, hp.server_lr);
  rec.timings.aggregate_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const std::vector<ValReport> reports = validate_all(fed, model, next);
  rec.val_loss.resize(reports.size());
  rec.val_acc.resize(reports.size());
  for (std::size_t k = 0; k < reports.size(); ++k) {
    rec.val_loss[k] = reports[k].loss;
    rec.val_acc[k] = reports[k].accuracy;
  }
  rec.hyper_loss = pool_validation_losses(reports);
  rec.test_acc = mean_test_accuracy(fed, model, next);
  rec.timings.evaluate_s = seconds_since(t0);
  rec.has_fl = true;
  return next;
}

}  // namespace

nlohmann::json RunSummary::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["seed"] = seed;
  j["rounds"] = rounds;
  if (kind == "bandit") {
    j["final_mu"] = final_mu;
    j["target"] = bandit_target;
    j["abs_error"] = std::abs(final_mu - bandit_target);
    return j;
  }
  if (kind == "local-only") {
    j["cross_test_acc"] = cross_test_acc;
    return j;
  }
  j["final"] = {{"hyper_loss", final_hyper_loss}, {"test_acc", final_test_acc}};
  j["best"] = {{"round", best_round},
               {"hyper_loss", best_hyper_loss},
               {"test_acc", best_test_acc}};
  return j;
}

RunSummary run_searched(const ExperimentConfig& cfg, bool quiet) {
  validate_config(cfg);
  if (cfg.task != RunTask::fl) throw ConfigError("run_searched needs run.task = \"fl\"");
  const HyperparamSpace space = build_space_from_config(cfg);
  if (space.size() == 0) {
    throw ConfigError("a searched run needs at least one [[space.dim]]");
  }

  const Federation fed = build_federation(cfg);
  const SmallModel model(fed.model_cfg);
  RngStream init_rng = RngStream::derive(cfg.seed, "model-init");
  ModelParams global = model.init_params(init_rng);

  RlAgent agent(space, cfg.agent, cfg.seed);

  ensure_out_dir(cfg.out_dir);
  CsvSchema schema;
  schema.dim_names = dim_names(space);
  schema.n_clients = fed.clients.size();
  schema.has_fl = true;
  schema.has_policy = true;
  RoundCsvWriter writer(cfg.out_dir + "/rounds.csv", schema);

  // Validation pass on the freshly initialized model: the round-1 reward is
  // relative to this loss.
  (void)agent.observe_hyper_loss(pool_validation_losses(validate_all(fed, model, global)));

  RunSummary summary;
  summary.kind = "searched";
  summary.seed = cfg.seed;
  summary.rounds = cfg.rounds;
  summary.best_hyper_loss = std::numeric_limits<double>::infinity();

  std::vector<RoundRecord> records;
  HyperparamSample sample = agent.next_hyperparams();
  for (long q = 1; q <= cfg.rounds; ++q) {
    RoundRecord rec;
    rec.round = q;
    rec.h_raw = sample.raw;
    rec.has_policy = true;
    policy_snapshot(space, agent.policy(), rec.mu_raw, rec.sigma_raw);
    rec.reward = std::numeric_limits<double>::quiet_NaN();
    rec.hyper_loss = std::numeric_limits<double>::quiet_NaN();
    rec.test_acc = std::numeric_limits<double>::quiet_NaN();
    rec.val_loss.assign(fed.clients.size(), std::numeric_limits<double>::quiet_NaN());
    rec.val_acc.assign(fed.clients.size(), std::numeric_limits<double>::quiet_NaN());
    rec.has_fl = true;

    try {
      const ResolvedHp hp = resolve_hyperparams(space, sample.raw, cfg, fed.size_weights);
      global = fl_round(cfg, fed, model, global, hp, 0.0, q, rec);

      const auto t0 = std::chrono::steady_clock::now();
      rec.reward = agent.observe_hyper_loss(rec.hyper_loss).value();
      agent.record_round(sample, rec.reward);
      agent.policy_step();
      sample = agent.next_hyperparams();
      rec.timings.rl_update_s = seconds_since(t0);
    } catch (const std::exception&) {
      // Flush what this round produced before aborting; earlier rounds are
      // already on disk.
      writer.append(rec);
      throw;
    }

    writer.append(rec);
    records.push_back(rec);
    log_round(quiet, q, cfg.rounds, rec);

    if (rec.hyper_loss < summary.best_hyper_loss) {
      summary.best_hyper_loss = rec.hyper_loss;
      summary.best_round = q;
      summary.best_test_acc = rec.test_acc;
      save_checkpoint(cfg.out_dir + "/checkpoint_best.json", fed.model_cfg, global);
    }
  }

  summary.final_hyper_loss = records.back().hyper_loss;
  summary.final_test_acc = records.back().test_acc;
  save_checkpoint(cfg.out_dir + "/checkpoint_final.json", fed.model_cfg, global);
  write_timings_csv(cfg.out_dir + "/timings.csv", records);
  write_summary(cfg.out_dir, summary, cfg);
  return summary;
}

RunSummary run_baseline(const ExperimentConfig& cfg, bool quiet) {
  validate_config(cfg);
  if (cfg.task != RunTask::fl) throw ConfigError("run_baseline needs run.task = \"fl\"");

  const Federation fed = build_federation(cfg);
  const SmallModel model(fed.model_cfg);
  RngStream init_rng = RngStream::derive(cfg.seed, "model-init");
  ModelParams global = model.init_params(init_rng);

  // Fixed hyperparameters: data-size weights and a unit server step, i.e. the
  // classical weighted parameter average.
  const HyperparamSpace space =
      (!cfg.space.dims.empty() || cfg.space.aggregation_weights) ? build_space_from_config(cfg)
                                                                 : HyperparamSpace{};
  ResolvedHp hp;
  hp.client_lr = cfg.train.learning_rate;
  hp.iterations = cfg.train.iterations;
  hp.server_lr = 1.0;
  hp.agg_weights = fed.size_weights;
  const double prox_mu = cfg.baseline.kind == BaselineKind::fedprox ? cfg.baseline.prox_mu : 0.0;

  ensure_out_dir(cfg.out_dir);
  CsvSchema schema;
  schema.dim_names = dim_names(space);
  schema.n_clients = fed.clients.size();
  schema.has_fl = true;
  schema.has_policy = false;
  RoundCsvWriter writer(cfg.out_dir + "/rounds.csv", schema);

  double prev_loss = pool_validation_losses(validate_all(fed, model, global));

  RunSummary summary;
  summary.kind = "baseline-" + to_string(cfg.baseline.kind);
  summary.seed = cfg.seed;
  summary.rounds = cfg.rounds;
  summary.best_hyper_loss = std::numeric_limits<double>::infinity();

  const std::vector<double> h_row = fixed_h_row(space, hp);
  std::vector<RoundRecord> records;
  for (long q = 1; q <= cfg.rounds; ++q) {
    RoundRecord rec;
    rec.round = q;
    rec.h_raw = h_row;
    rec.has_policy = false;
    rec.reward = std::numeric_limits<double>::quiet_NaN();
    rec.hyper_loss = std::numeric_limits<double>::quiet_NaN();
    rec.test_acc = std::numeric_limits<double>::quiet_NaN();
    rec.val_loss.assign(fed.clients.size(), std::numeric_limits<double>::quiet_NaN());
    rec.val_acc.assign(fed.clients.size(), std::numeric_limits<double>::quiet_NaN());
    rec.has_fl = true;

    try {
      global = fl_round(cfg, fed, model, global, hp, prox_mu, q, rec);
      rec.reward = compute_reward(prev_loss, rec.hyper_loss);
      prev_loss = rec.hyper_loss;
    } catch (const std::exception&) {
      writer.append(rec);
      throw;
    }

    writer.append(rec);
    records.push_back(rec);
    log_round(quiet, q, cfg.rounds, rec);

    if (rec.hyper_loss < summary.best_hyper_loss) {
      summary.best_hyper_loss = rec.hyper_loss;
      summary.best_round = q;
      summary.best_test_acc = rec.test_acc;
      save_checkpoint(cfg.out_dir + "/checkpoint_best.json", fed.model_cfg, global);
    }
  }

  summary.final_hyper_loss = records.back().hyper_loss;
  summary.final_test_acc = records.back().test_acc;
  save_checkpoint(cfg.out_dir + "/checkpoint_final.json", fed.model_cfg, global);
  write_timings_csv(cfg.out_dir + "/timings.csv", records);
  write_summary(cfg.out_dir, summary, cfg);
  return summary;
}

RunSummary local_only(const ExperimentConfig& cfg, int client_id, bool quiet) {
  validate_config(cfg);
  if (cfg.task != RunTask::fl) throw ConfigError("local_only needs run.task = \"fl\"");

  const Federation fed = build_federation(cfg);
  if (client_id < 0 || static_cast<std::size_t>(client_id) >= fed.clients.size()) {
    throw ConfigError("client id " + std::to_string(client_id) + " out of range [0, " +
                      std::to_string(fed.clients.size()) + ")");
  }
  const SmallModel model(fed.model_cfg);
  RngStream init_rng = RngStream::derive(cfg.seed, "model-init");
  const ModelParams init = model.init_params(init_rng);

  // Same compute budget as the federated run: rounds x local iterations.
  LocalTrainConfig ltc;
  ltc.learning_rate = cfg.train.learning_rate;
  ltc.iterations = cfg.rounds * cfg.train.iterations;
  ltc.batch_size = cfg.train.batch_size;
  ltc.prox_mu = 0.0;

  RngStream rng = RngStream::derive(cfg.seed, "local-only", static_cast<std::uint64_t>(client_id));
  const ModelParams trained =
      fed.clients[static_cast<std::size_t>(client_id)].train_alone(model, init, ltc,
                                                                   std::move(rng));

  RunSummary summary;
  summary.kind = "local-only";
  summary.seed = cfg.seed;
  summary.rounds = cfg.rounds;
  summary.cross_test_acc.resize(fed.clients.size());
  for_each_client(fed.clients.size(), [&](std::size_t k) {
    summary.cross_test_acc[k] = fed.clients[k].test(model, trained).accuracy;
  });

  ensure_out_dir(cfg.out_dir);
  {
    const std::string path = cfg.out_dir + "/local_only.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "trained_on";
    for (std::size_t k = 0; k < summary.cross_test_acc.size(); ++k) out << ",test_acc_" << k;
    out << '\n' << client_id;
    for (double acc : summary.cross_test_acc) out << ',' << format_double(acc);
    out << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
  }
  write_summary(cfg.out_dir, summary, cfg);

  if (!quiet) {
    std::printf("local-only client %d:", client_id);
    for (double acc : summary.cross_test_acc) std::printf(" %.4f", acc);
    std::printf("\n");
  }
  return summary;
}

RunSummary run_bandit(const ExperimentConfig& cfg, bool quiet) {
  validate_config(cfg);
  if (cfg.task != RunTask::bandit) throw ConfigError("run_bandit needs run.task = \"bandit\"");
  const HyperparamSpace space = build_space_from_config(cfg);

  RlAgent agent(space, cfg.agent, cfg.seed);

  ensure_out_dir(cfg.out_dir);
  CsvSchema schema;
  schema.dim_names = dim_names(space);
  schema.n_clients = 0;
  schema.has_fl = false;
  schema.has_policy = true;
  RoundCsvWriter writer(cfg.out_dir + "/rounds.csv", schema);

  RunSummary summary;
  summary.kind = "bandit";
  summary.seed = cfg.seed;
  summary.rounds = cfg.rounds;
  summary.bandit_target = cfg.bandit.target;

  std::vector<RoundRecord> records;
  HyperparamSample sample = agent.next_hyperparams();
  for (long q = 1; q <= cfg.rounds; ++q) {
    RoundRecord rec;
    rec.round = q;
    rec.h_raw = sample.raw;
    rec.has_fl = false;
    rec.has_policy = true;
    policy_snapshot(space, agent.policy(), rec.mu_raw, rec.sigma_raw);

    try {
      const auto t0 = std::chrono::steady_clock::now();
      // The environment sees raw hyperparameter values, so the synthetic
      // reward is quadratic in raw units too.
      const double h = sample.raw[0];
      rec.reward = -(h - cfg.bandit.target) * (h - cfg.bandit.target);
      agent.record_round(sample, rec.reward);
      agent.policy_step();
      sample = agent.next_hyperparams();
      rec.timings.rl_update_s = seconds_since(t0);
    } catch (const std::exception&) {
      writer.append(rec);
      throw;
    }

    writer.append(rec);
    records.push_back(rec);
    log_round(quiet, q, cfg.rounds, rec);
  }

  summary.final_mu = to_raw_continuous(space, agent.policy().mu)[0];
  write_timings_csv(cfg.out_dir + "/timings.csv", records);
  write_summary(cfg.out_dir, summary, cfg);
  if (!quiet) {
    std::printf("bandit: final mu=%.4f target=%.4f |err|=%.4f\n", summary.final_mu,
                summary.bandit_target, std::abs(summary.final_mu - summary.bandit_target));
  }
  return summary;
}

}  // namespace fedsim
