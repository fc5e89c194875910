// End-to-end tests for the round loops built on shrunk variants of the
// shipped configs: output files and their schemas, exact reward replay from
// the persisted losses, byte-level reproducibility, the client/server message
// boundary, and the failure paths (divergence mid-run, task mismatches).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/fl_core.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/rl_agent.hpp"

#ifndef FEDSIM_CONFIG_DIR
#define FEDSIM_CONFIG_DIR "configs"
#endif

using namespace fedsim;

namespace {

std::string shipped(const std::string& name) {
  return std::string(FEDSIM_CONFIG_DIR) + "/" + name;
}

std::string out_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "fedsim-orch-tests" / name;
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The 8-client config cut down to seconds-scale: fewer clients, samples, and
// rounds, and mild skew so every shard keeps enough rows for a 3-way split.
ExperimentConfig shrunk_search(const std::string& out) {
  ExperimentConfig cfg = load_config(shipped("cifar-like.toml"));
  cfg.rounds = 3;
  cfg.clients = 4;
  cfg.data.n_samples = 400;
  cfg.data.dirichlet_alpha = 5.0;
  cfg.out_dir = out_dir(out);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig shrunk_local(const std::string& out) {
  ExperimentConfig cfg = load_config(shipped("covid-like.toml"));
  cfg.rounds = 2;
  cfg.data.n_samples = 300;
  cfg.out_dir = out_dir(out);
  validate_config(cfg);
  return cfg;
}

}  // namespace

TEST_CASE("the client/server boundary carries only messages, never shards") {
  // Client methods accept the shared model plus parameter vectors and return
  // update/report messages; the aggregator consumes messages and weights.
  static_assert(std::is_same_v<decltype(&ClientNode::local_update),
                               ClientUpdate (ClientNode::*)(const SmallModel&, const ModelParams&,
                                                            const LocalTrainConfig&,
                                                            RngStream) const>);
  static_assert(std::is_same_v<decltype(&ClientNode::validate),
                               ValReport (ClientNode::*)(const SmallModel&,
                                                         const ModelParams&) const>);
  static_assert(std::is_same_v<decltype(&ClientNode::test),
                               ValReport (ClientNode::*)(const SmallModel&,
                                                         const ModelParams&) const>);
  static_assert(
      std::is_same_v<decltype(&server_aggregate),
                     ModelParams (*)(const ModelParams&, const std::vector<ClientUpdate>&,
                                     std::span<const double>, double)>);
  static_assert(std::is_same_v<decltype(&pool_validation_losses),
                               double (*)(const std::vector<ValReport>&)>);
  CHECK(true);
}

TEST_CASE("pooling validation reports averages the client losses") {
  const std::vector<ValReport> reports = {{0, 0.2, 0.9}, {1, 0.4, 0.8}, {2, 0.6, 0.7}};
  CHECK(pool_validation_losses(reports) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(pool_validation_losses({{0, 1.25, 0.5}}) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("server aggregation matches the flat weighted update bitwise") {
  ModelParams global;
  global.values = {1.0, 2.0};
  std::vector<ClientUpdate> updates(2);
  updates[0].client_id = 0;
  updates[0].delta.values = {0.2, 0.0};
  updates[1].client_id = 1;
  updates[1].delta.values = {0.4, 1.0};
  const std::vector<double> weights = {0.5, 0.5};

  const ModelParams got = server_aggregate(global, updates, weights, 1.0);
  REQUIRE(got.values.size() == 2);
  CHECK(got.values[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(got.values[1] == doctest::Approx(1.5).epsilon(1e-15));

  const std::vector<PseudoGradient> deltas = {updates[0].delta, updates[1].delta};
  const ModelParams direct = server_update(global, deltas, weights, 1.0);
  CHECK(got.values == direct.values);
}

TEST_CASE("the federation is built to the config's shape") {
  const ExperimentConfig cfg = shrunk_search("federation");
  const Federation fed = build_federation(cfg);
  REQUIRE(fed.clients.size() == 4);
  CHECK(fed.model_cfg.d_in == 16);
  CHECK(fed.model_cfg.classes == 10);
  double sum = 0.0;
  for (std::size_t k = 0; k < fed.clients.size(); ++k) {
    CHECK(fed.clients[k].id() == static_cast<int>(k));
    CHECK(fed.clients[k].train_size() > 0);
    CHECK(fed.size_weights[k] > 0.0);
    sum += fed.size_weights[k];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // Skewed shard sizes from the 3-client config survive partitioning. The
  // shipped config's dirichlet_alpha of 1.0 makes per-class splits noisy
  // enough to scramble the ordering at 300 samples, so pin a high alpha
  // here: this subtest is about the size weights, not the label skew.
  ExperimentConfig covid = shrunk_local("federation-covid");
  covid.data.dirichlet_alpha = 50.0;
  const Federation fed3 = build_federation(covid);
  REQUIRE(fed3.clients.size() == 3);
  CHECK(fed3.clients[0].train_size() > fed3.clients[1].train_size());
  CHECK(fed3.clients[1].train_size() > fed3.clients[2].train_size());
}

TEST_CASE("searched run: csv schema, reward replay, checkpoints, and summary") {
  const ExperimentConfig cfg = shrunk_search("search-run");
  const RunSummary summary = run_searched(cfg, /*quiet=*/true);
  CHECK(summary.kind == "searched");
  CHECK(summary.seed == 1);
  CHECK(summary.rounds == 3);

  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  REQUIRE(records.size() == 3);
  CHECK(schema.has_fl);
  CHECK(schema.has_policy);
  CHECK(schema.n_clients == 4);
  REQUIRE(schema.dim_names.size() == 7);  // lr, li, slr + aw0..aw3
  CHECK(schema.dim_names[0] == "lr");
  CHECK(schema.dim_names[3] == "aw0");
  CHECK(schema.dim_names[6] == "aw3");

  // The persisted reward must replay exactly from the persisted losses.
  for (std::size_t q = 1; q < records.size(); ++q) {
    CHECK(records[q].reward ==
          compute_reward(records[q - 1].hyper_loss, records[q].hyper_loss));
  }
  for (const RoundRecord& r : records) {
    CHECK(std::isfinite(r.reward));
    CHECK(r.test_acc >= 0.0);
    CHECK(r.test_acc <= 1.0);
    // Sampled aggregation weights live on the simplex.
    double aw_sum = 0.0;
    for (std::size_t d = 3; d < 7; ++d) aw_sum += r.h_raw[d];
    CHECK(aw_sum == doctest::Approx(1.0).epsilon(1e-9));
    // Local iterations are a positive integer count.
    CHECK(r.h_raw[1] == std::floor(r.h_raw[1]));
    CHECK(r.h_raw[1] >= 1.0);
  }

  // Summary fields agree with the log.
  CHECK(summary.final_hyper_loss == records.back().hyper_loss);
  CHECK(summary.final_test_acc == records.back().test_acc);
  double best = records[0].hyper_loss;
  for (const RoundRecord& r : records) best = std::min(best, r.hyper_loss);
  CHECK(summary.best_hyper_loss == best);
  CHECK(summary.best_round >= 1);
  CHECK(summary.best_round <= 3);

  // Checkpoints round-trip with the federation's model shape.
  const auto [model_cfg, params] = load_checkpoint(cfg.out_dir + "/checkpoint_final.json");
  CHECK(model_cfg.d_in == 16);
  CHECK(model_cfg.classes == 10);
  CHECK(params.values.size() == 16 * 10 + 10);
  CHECK_NOTHROW((void)load_checkpoint(cfg.out_dir + "/checkpoint_best.json"));

  // summary.json embeds the run summary plus the config echo.
  std::ifstream in(cfg.out_dir + "/summary.json");
  REQUIRE(in.good());
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["kind"] == "searched");
  CHECK(j["config"]["run"]["seed"] == 1);
  CHECK(j["best"]["round"].get<long>() == summary.best_round);

  // timings.csv: header plus one row per round.
  std::istringstream timings(slurp(cfg.out_dir + "/timings.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(timings, line)) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == 4);
}

TEST_CASE("identical seeds reproduce rounds.csv and checkpoints byte for byte") {
  const ExperimentConfig cfg1 = shrunk_search("repro-a");
  const ExperimentConfig cfg2 = shrunk_search("repro-b");
  (void)run_searched(cfg1, true);
  (void)run_searched(cfg2, true);
  CHECK(slurp(cfg1.out_dir + "/rounds.csv") == slurp(cfg2.out_dir + "/rounds.csv"));
  CHECK(slurp(cfg1.out_dir + "/checkpoint_final.json") ==
        slurp(cfg2.out_dir + "/checkpoint_final.json"));
}

TEST_CASE("a vanishing policy learning rate freezes the printed policy") {
  ExperimentConfig cfg = shrunk_search("frozen-policy");
  cfg.rounds = 4;
  cfg.agent.gamma_h = 1e-300;  // moves psi below the raw mapping's resolution
  (void)run_searched(cfg, true);
  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  REQUIRE(records.size() == 4);
  for (const RoundRecord& r : records) {
    CHECK(r.mu_raw == records[0].mu_raw);        // exact, not approximate
    CHECK(r.sigma_raw == records[0].sigma_raw);  // exact, not approximate
  }
}

TEST_CASE("baseline runs echo the fixed knobs and skip the policy block") {
  ExperimentConfig cfg = shrunk_search("baseline-fedavg");
  const RunSummary summary = run_baseline(cfg, true);
  CHECK(summary.kind == "baseline-fedavg");

  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  REQUIRE(records.size() == 3);
  CHECK(schema.has_fl);
  CHECK_FALSE(schema.has_policy);
  REQUIRE(schema.dim_names.size() == 7);

  const Federation fed = build_federation(cfg);
  for (const RoundRecord& r : records) {
    CHECK(r.h_raw == records[0].h_raw);  // fixed knobs never move
    CHECK(r.h_raw[0] == cfg.train.learning_rate);
    CHECK(r.h_raw[1] == static_cast<double>(cfg.train.iterations));
    CHECK(r.h_raw[2] == 1.0);  // unit server step
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(r.h_raw[3 + k] == doctest::Approx(fed.size_weights[k]).epsilon(1e-12));
    }
  }
  for (std::size_t q = 1; q < records.size(); ++q) {
    CHECK(records[q].reward ==
          compute_reward(records[q - 1].hyper_loss, records[q].hyper_loss));
  }
}

TEST_CASE("an infinitesimal proximal term reproduces the plain average bitwise") {
  ExperimentConfig avg = shrunk_search("prox-avg");
  avg.baseline.kind = BaselineKind::fedavg;
  avg.baseline.prox_mu = 0.0;
  (void)run_baseline(avg, true);

  ExperimentConfig prox = shrunk_search("prox-tiny");
  prox.baseline.kind = BaselineKind::fedprox;
  prox.baseline.prox_mu = 1e-300;  // pull far below one ulp of any gradient
  (void)run_baseline(prox, true);

  CHECK(slurp(avg.out_dir + "/rounds.csv") == slurp(prox.out_dir + "/rounds.csv"));
}

TEST_CASE("divergence mid-run still flushes the partial round to disk") {
  ExperimentConfig cfg = shrunk_search("diverge");
  cfg.train.learning_rate = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)run_baseline(cfg, true), DivergenceError);

  // The streamed log survives the crash: header plus the aborted round.
  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  REQUIRE(records.size() == 1);
  CHECK(std::isnan(records[0].hyper_loss));
  CHECK(std::isnan(records[0].reward));
}

TEST_CASE("single-round run produces exactly one record with final == best") {
  ExperimentConfig cfg = shrunk_search("one-round");
  cfg.rounds = 1;
  const RunSummary summary = run_searched(cfg, true);
  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  CHECK(records.size() == 1);
  CHECK(summary.best_round == 1);
  CHECK(summary.final_hyper_loss == summary.best_hyper_loss);
}

TEST_CASE("bandit run writes a policy-only csv with an exactly replayable reward") {
  ExperimentConfig cfg = load_config(shipped("bandit.toml"));
  cfg.rounds = 40;
  cfg.out_dir = out_dir("bandit-run");
  const RunSummary summary = run_bandit(cfg, true);
  CHECK(summary.kind == "bandit");
  CHECK(summary.bandit_target == 0.75);
  CHECK(std::isfinite(summary.final_mu));

  const auto [schema, records] = read_round_csv(cfg.out_dir + "/rounds.csv");
  REQUIRE(records.size() == 40);
  CHECK_FALSE(schema.has_fl);
  CHECK(schema.has_policy);
  REQUIRE(schema.dim_names.size() == 1);
  CHECK(schema.dim_names[0] == "h");
  for (const RoundRecord& r : records) {
    CHECK(r.h_raw[0] >= 0.0);
    CHECK(r.h_raw[0] <= 1.0);
    const double err = r.h_raw[0] - 0.75;
    CHECK(r.reward == -err * err);  // exact replay from the persisted sample
  }

  std::ifstream in(cfg.out_dir + "/summary.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["target"] == 0.75);
  CHECK(j.contains("final_mu"));
  CHECK(j.contains("abs_error"));
}

TEST_CASE("local-only trains one client and cross-evaluates every test shard") {
  const ExperimentConfig cfg = shrunk_local("local-only");
  const RunSummary summary = local_only(cfg, 0, /*quiet=*/true);
  CHECK(summary.kind == "local-only");
  REQUIRE(summary.cross_test_acc.size() == 3);
  for (double acc : summary.cross_test_acc) {
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }

  std::istringstream csv(slurp(cfg.out_dir + "/local_only.csv"));
  std::string header, row, extra;
  REQUIRE(std::getline(csv, header));
  REQUIRE(std::getline(csv, row));
  CHECK_FALSE(std::getline(csv, extra));
  CHECK(header == "trained_on,test_acc_0,test_acc_1,test_acc_2");
  CHECK(row.rfind("0,", 0) == 0);

  CHECK_THROWS_AS((void)local_only(cfg, 3, true), ConfigError);
  CHECK_THROWS_AS((void)local_only(cfg, -1, true), ConfigError);
}

TEST_CASE("task mismatches between config and entry point are rejected") {
  ExperimentConfig bandit = load_config(shipped("bandit.toml"));
  bandit.out_dir = out_dir("mismatch-bandit");
  CHECK_THROWS_AS((void)run_searched(bandit, true), ConfigError);
  CHECK_THROWS_AS((void)run_baseline(bandit, true), ConfigError);
  CHECK_THROWS_AS((void)local_only(bandit, 0, true), ConfigError);

  ExperimentConfig fl = shrunk_search("mismatch-fl");
  CHECK_THROWS_AS((void)run_bandit(fl, true), ConfigError);
}
