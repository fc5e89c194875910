// Tests for TOML config loading, validation, and the space builder: the four
// shipped config files round-trip, unknown or ill-typed keys are rejected
// with their full key path, every validation rule fires on a targeted
// mutation, and aggregation-weight dims are appended or checked as declared.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/hp_space.hpp"

#ifndef FEDSIM_CONFIG_DIR
#define FEDSIM_CONFIG_DIR "configs"
#endif

namespace {

std::string shipped(const std::string& name) {
  return std::string(FEDSIM_CONFIG_DIR) + "/" + name;
}

// Writes `text` to a scratch file and returns its path.
std::string write_temp_config(const std::string& stem, const std::string& text) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "fedsim-config-tests";
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / (stem + ".toml");
  std::ofstream out(path);
  out << text;
  out.close();
  return path.string();
}

// Runs `fn` and returns the ConfigError message it throws; fails the test if
// nothing is thrown.
template <typename Fn>
std::string config_error_of(Fn&& fn) {
  try {
    fn();
  } catch (const fedsim::ConfigError& e) {
    return e.what();
  }
  FAIL("expected a ConfigError");
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

const char* kMinimalBandit =
    "[run]\n"
    "task = \"bandit\"\n"
    "\n"
    "[[space.dim]]\n"
    "name = \"h\"\n"
    "min = 0.0\n"
    "max = 1.0\n";

}  // namespace

using namespace fedsim;

TEST_CASE("all shipped config files load and validate") {
  CHECK_NOTHROW((void)load_config(shipped("cifar-like.toml")));
  CHECK_NOTHROW((void)load_config(shipped("covid-like.toml")));
  CHECK_NOTHROW((void)load_config(shipped("pancreas-like.toml")));
  CHECK_NOTHROW((void)load_config(shipped("bandit.toml")));
}

TEST_CASE("shipped 8-client config fields arrive as written") {
  const ExperimentConfig cfg = load_config(shipped("cifar-like.toml"));
  CHECK(cfg.task == RunTask::fl);
  CHECK(cfg.rounds == 100);
  CHECK(cfg.clients == 8);
  CHECK(cfg.seed == 1);
  CHECK(cfg.out_dir == "runs/cifar-like");
  CHECK(cfg.data.n_samples == 4000);
  CHECK(cfg.data.d_in == 16);
  CHECK(cfg.data.classes == 10);
  CHECK(cfg.data.cluster_spread == doctest::Approx(0.6));
  CHECK(cfg.data.split.train == doctest::Approx(0.8));
  CHECK(cfg.data.split.val == doctest::Approx(0.1));
  CHECK(cfg.model.kind == ModelKind::softmax_regression);
  CHECK(cfg.agent.mode == SearchMode::continuous);  // "cs" alias
  CHECK(cfg.agent.gamma_h == doctest::Approx(0.01));
  CHECK(cfg.agent.window == 10);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.baseline.kind == BaselineKind::fedavg);
  CHECK(cfg.baseline.prox_mu == 0.0);
  CHECK(cfg.space.aggregation_weights);
  REQUIRE(cfg.space.dims.size() == 3);
  CHECK(cfg.space.dims[0].name == "lr");
  CHECK(cfg.space.dims[0].log_scaled);
  CHECK(cfg.space.dims[1].name == "li");
  CHECK(cfg.space.dims[1].kind == DimKind::integer_count);
  CHECK(cfg.space.dims[2].name == "slr");
}

TEST_CASE("shipped 3-client configs carry their distinguishing fields") {
  const ExperimentConfig covid = load_config(shipped("covid-like.toml"));
  CHECK(covid.baseline.kind == BaselineKind::fedprox);
  CHECK(covid.baseline.prox_mu == doctest::Approx(0.01));
  CHECK(covid.data.domain_shift == doctest::Approx(0.3));
  REQUIRE(covid.data.size_weights.size() == 3);
  CHECK(covid.data.size_weights[0] == doctest::Approx(0.6));
  CHECK(covid.data.size_weights[2] == doctest::Approx(0.15));

  const ExperimentConfig pancreas = load_config(shipped("pancreas-like.toml"));
  CHECK(pancreas.agent.mode == SearchMode::discrete);  // "ds" alias
  CHECK(pancreas.model.kind == ModelKind::mlp_1_hidden);
  CHECK(pancreas.model.hidden == 16);
  CHECK(pancreas.agent.discrete.cardinality_cap == 50'000'000u);
  REQUIRE(pancreas.space.dims.size() == 3);
  CHECK(pancreas.space.dims[0].grid_points == 8);
  CHECK(pancreas.space.dims[2].grid_points == 5);
  CHECK_FALSE(pancreas.space.aggregation_weights);

  const ExperimentConfig bandit = load_config(shipped("bandit.toml"));
  CHECK(bandit.task == RunTask::bandit);
  CHECK(bandit.bandit.target == doctest::Approx(0.75));
  CHECK(bandit.rounds == 500);
  REQUIRE(bandit.space.dims.size() == 1);
  CHECK(bandit.space.dims[0].name == "h");
}

TEST_CASE("absent tables fall back to documented defaults") {
  const std::string path = write_temp_config("minimal-bandit", kMinimalBandit);
  const ExperimentConfig cfg = load_config(path);
  CHECK(cfg.rounds == 1);
  CHECK(cfg.seed == 0);
  CHECK(cfg.out_dir == "runs/out");
  CHECK(cfg.agent.mode == SearchMode::continuous);
  CHECK(cfg.agent.gamma_h == doctest::Approx(1e-2));
  CHECK(cfg.agent.window == 10);
  CHECK(cfg.agent.sign == UpdateSign::ascent);
  CHECK(cfg.agent.sigma_floor == doctest::Approx(1e-3));
  CHECK(cfg.agent.init_sigma == doctest::Approx(0.5));
  CHECK(cfg.agent.mlp_hidden == 32);
  CHECK(cfg.agent.discrete.cardinality_cap == 50'000'000u);
  CHECK(cfg.train.learning_rate == doctest::Approx(1e-2));
  CHECK(cfg.train.iterations == 10);
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.server_lr == doctest::Approx(1.0));
  CHECK(cfg.baseline.kind == BaselineKind::fedavg);
  CHECK(cfg.space.scale == doctest::Approx(1.0));
  CHECK_FALSE(cfg.space.aggregation_weights);
  CHECK(cfg.bandit.target == doctest::Approx(0.5));
}

TEST_CASE("unknown keys are rejected with their full path") {
  SUBCASE("inside a known table") {
    const std::string path = write_temp_config(
        "unknown-agent-key", std::string(kMinimalBandit) + "\n[agent]\ntypo = 1\n");
    const std::string msg = config_error_of([&] { (void)load_config(path); });
    CHECK(contains(msg, "agent.typo"));
    CHECK(contains(msg, "not a recognized config key"));
  }
  SUBCASE("a whole unknown table") {
    const std::string path = write_temp_config(
        "unknown-table", std::string(kMinimalBandit) + "\n[extras]\nfoo = 2\n");
    const std::string msg = config_error_of([&] { (void)load_config(path); });
    CHECK(contains(msg, "extras"));
    CHECK(contains(msg, "not a recognized config key"));
  }
  SUBCASE("inside a dim table") {
    const std::string path = write_temp_config(
        "unknown-dim-key",
        std::string(kMinimalBandit) + "step = 0.5\n");  // appended to the dim table
    const std::string msg = config_error_of([&] { (void)load_config(path); });
    CHECK(contains(msg, "space.dim[0].step"));
  }
}

TEST_CASE("ill-typed values name the offending key") {
  const std::string path = write_temp_config(
      "bad-type",
      "[run]\n"
      "task = \"bandit\"\n"
      "rounds = \"ten\"\n"
      "\n"
      "[[space.dim]]\n"
      "name = \"h\"\n"
      "min = 0.0\n"
      "max = 1.0\n");
  const std::string msg = config_error_of([&] { (void)load_config(path); });
  CHECK(contains(msg, "run.rounds"));
  CHECK(contains(msg, "must be an integer"));
}

TEST_CASE("missing config file raises an I/O error") {
  CHECK_THROWS_AS((void)load_config("/nonexistent/nowhere.toml"), IoError);
}

TEST_CASE("syntax errors report file and line") {
  const std::string path = write_temp_config("syntax-error", "[run\ntask = \"fl\"\n");
  const std::string msg = config_error_of([&] { (void)load_config(path); });
  CHECK(contains(msg, path));
  CHECK(contains(msg, ":1:"));
}

TEST_CASE("validation rejects each out-of-range scalar with its key path") {
  const ExperimentConfig base = load_config(shipped("cifar-like.toml"));

  auto expect = [&](const std::string& key, auto&& mutate) {
    ExperimentConfig cfg = base;
    mutate(cfg);
    const std::string msg = config_error_of([&] { validate_config(cfg); });
    CHECK_MESSAGE(contains(msg, key), "message was: " << msg);
  };

  expect("run.rounds", [](ExperimentConfig& c) { c.rounds = 0; });
  expect("run.out", [](ExperimentConfig& c) { c.out_dir.clear(); });
  expect("run.clients", [](ExperimentConfig& c) { c.clients = 1; });
  expect("agent.gamma_h", [](ExperimentConfig& c) { c.agent.gamma_h = 0.0; });
  expect("agent.gamma_h", [](ExperimentConfig& c) { c.agent.gamma_h = -1.0; });
  expect("agent.window", [](ExperimentConfig& c) { c.agent.window = -1; });
  expect("agent.sigma_floor", [](ExperimentConfig& c) { c.agent.sigma_floor = 0.0; });
  expect("agent.init_sigma", [](ExperimentConfig& c) { c.agent.init_sigma = 1e-4; });
  expect("agent.mlp_hidden", [](ExperimentConfig& c) { c.agent.mlp_hidden = 0; });
  expect("agent.cardinality_cap",
         [](ExperimentConfig& c) { c.agent.discrete.cardinality_cap = 0; });
  expect("space.scale", [](ExperimentConfig& c) { c.space.scale = 0.0; });
  expect("data.n_samples", [](ExperimentConfig& c) { c.data.n_samples = 5; });
  expect("data.classes", [](ExperimentConfig& c) { c.data.classes = 1; });
  expect("data.d_in", [](ExperimentConfig& c) { c.data.d_in = 5; });
  expect("data.cluster_spread", [](ExperimentConfig& c) { c.data.cluster_spread = 0.0; });
  expect("data.domain_shift", [](ExperimentConfig& c) { c.data.domain_shift = -0.1; });
  expect("data.dirichlet_alpha", [](ExperimentConfig& c) { c.data.dirichlet_alpha = 0.0; });
  expect("data.size_weights", [](ExperimentConfig& c) { c.data.size_weights = {1.0, 1.0}; });
  expect("data.size_weights", [](ExperimentConfig& c) {
    c.data.size_weights.assign(c.clients, 1.0);
    c.data.size_weights.back() = 0.0;
  });
  expect("data.split", [](ExperimentConfig& c) { c.data.split = {0.0, 0.5, 0.5}; });
  expect("data.split", [](ExperimentConfig& c) { c.data.split = {0.5, 0.3, 0.3}; });
  expect("model.hidden", [](ExperimentConfig& c) {
    c.model.kind = ModelKind::mlp_1_hidden;
    c.model.hidden = 0;
  });
  expect("train.learning_rate", [](ExperimentConfig& c) { c.train.learning_rate = 0.0; });
  expect("train.iterations", [](ExperimentConfig& c) { c.train.iterations = 0; });
  expect("train.batch_size", [](ExperimentConfig& c) { c.train.batch_size = 0; });
  expect("train.server_lr", [](ExperimentConfig& c) { c.train.server_lr = -1.0; });
}

TEST_CASE("baseline kind and proximal strength must agree") {
  const ExperimentConfig base = load_config(shipped("cifar-like.toml"));

  ExperimentConfig avg_with_mu = base;
  avg_with_mu.baseline.kind = BaselineKind::fedavg;
  avg_with_mu.baseline.prox_mu = 0.01;
  const std::string msg1 = config_error_of([&] { validate_config(avg_with_mu); });
  CHECK(contains(msg1, "must be 0 for fedavg"));

  ExperimentConfig prox_without_mu = base;
  prox_without_mu.baseline.kind = BaselineKind::fedprox;
  prox_without_mu.baseline.prox_mu = 0.0;
  const std::string msg2 = config_error_of([&] { validate_config(prox_without_mu); });
  CHECK(contains(msg2, "must be > 0 for fedprox"));
}

TEST_CASE("every searched dim must map onto a training knob") {
  const ExperimentConfig base = load_config(shipped("cifar-like.toml"));

  ExperimentConfig wrong_lr_kind = base;
  wrong_lr_kind.space.dims[0].kind = DimKind::integer_count;
  CHECK(contains(config_error_of([&] { validate_config(wrong_lr_kind); }),
                 "must have kind continuous"));

  ExperimentConfig wrong_li_kind = base;
  wrong_li_kind.space.dims[1].kind = DimKind::continuous_positive;
  CHECK(contains(config_error_of([&] { validate_config(wrong_li_kind); }),
                 "must have kind integer"));

  ExperimentConfig unknown_role = base;
  unknown_role.space.dims[0].name = "momentum";
  CHECK(contains(config_error_of([&] { validate_config(unknown_role); }),
                 "has no training role"));

  ExperimentConfig aw_clash = base;  // aggregation_weights is true here
  SpaceDimConfig aw;
  aw.name = "aw0";
  aw.min = 0.0;
  aw.max = 1.0;
  aw.kind = DimKind::simplex_weight;
  aw_clash.space.dims.push_back(aw);
  CHECK(contains(config_error_of([&] { validate_config(aw_clash); }),
                 "clashes with space.aggregation_weights"));
}

TEST_CASE("discrete search demands a grid on every dim") {
  ExperimentConfig cfg = load_config(shipped("pancreas-like.toml"));
  cfg.space.dims[1].grid_points = 0;
  const std::string msg = config_error_of([&] { validate_config(cfg); });
  CHECK(contains(msg, "space.dim 'li'"));
  CHECK(contains(msg, "grid_points >= 2"));

  ExperimentConfig aw_cfg = load_config(shipped("pancreas-like.toml"));
  aw_cfg.space.aggregation_weights = true;
  aw_cfg.space.aw_grid_points = 0;
  CHECK(contains(config_error_of([&] { validate_config(aw_cfg); }),
                 "space.aw_grid_points"));
}

TEST_CASE("explicit aggregation-weight dims must cover all clients in order") {
  ExperimentConfig base = load_config(shipped("cifar-like.toml"));
  base.space.aggregation_weights = false;

  auto make_aw = [](std::size_t k) {
    SpaceDimConfig d;
    d.name = "aw" + std::to_string(k);
    d.min = 0.0;
    d.max = 1.0;
    d.kind = DimKind::simplex_weight;
    return d;
  };

  ExperimentConfig partial = base;
  for (std::size_t k = 0; k < 3; ++k) partial.space.dims.push_back(make_aw(k));
  const std::string msg1 = config_error_of([&] { validate_config(partial); });
  CHECK(contains(msg1, "must cover all 8 clients"));
  CHECK(contains(msg1, "(found 3)"));

  ExperimentConfig shuffled = base;
  for (std::size_t k = 0; k < 8; ++k) shuffled.space.dims.push_back(make_aw(k));
  std::swap(shuffled.space.dims[4].name, shuffled.space.dims[8].name);  // aw1 <-> aw5
  const std::string msg2 = config_error_of([&] { validate_config(shuffled); });
  CHECK(contains(msg2, "in order"));
  CHECK(contains(msg2, "found 'aw5' where 'aw1' was expected"));

  ExperimentConfig complete = base;
  for (std::size_t k = 0; k < 8; ++k) complete.space.dims.push_back(make_aw(k));
  CHECK_NOTHROW(validate_config(complete));
  const HyperparamSpace space = build_space_from_config(complete);
  CHECK(space.dims.size() == 11);  // lr, li, slr + eight explicit weights
}

TEST_CASE("bandit runs are restricted to one plain dim with an in-range target") {
  const ExperimentConfig base = load_config(shipped("bandit.toml"));

  ExperimentConfig outside = base;
  outside.bandit.target = 1.5;
  const std::string msg = config_error_of([&] { validate_config(outside); });
  CHECK(contains(msg, "bandit.target"));
  CHECK(contains(msg, "inside the dim range"));

  ExperimentConfig two_dims = base;
  two_dims.space.dims.push_back(two_dims.space.dims[0]);
  two_dims.space.dims[1].name = "h2";
  CHECK(contains(config_error_of([&] { validate_config(two_dims); }),
                 "exactly one [[space.dim]]"));

  ExperimentConfig with_aw = base;
  with_aw.space.aggregation_weights = true;
  CHECK(contains(config_error_of([&] { validate_config(with_aw); }),
                 "no aggregation weights"));
}

TEST_CASE("dim-level range problems surface at validation time") {
  ExperimentConfig cfg = load_config(shipped("cifar-like.toml"));
  cfg.space.dims[0].min = 0.1;
  cfg.space.dims[0].max = 0.001;  // inverted
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("space builder appends one simplex weight per client when asked") {
  const ExperimentConfig cfg = load_config(shipped("cifar-like.toml"));
  const HyperparamSpace space = build_space_from_config(cfg);
  REQUIRE(space.dims.size() == 11);  // 3 declared + 8 appended
  CHECK(space.dims[0].name == "lr");
  CHECK(space.dims[1].name == "li");
  CHECK(space.dims[2].name == "slr");
  for (std::size_t k = 0; k < 8; ++k) {
    const HyperparamDim& d = space.dims[3 + k];
    CHECK(d.name == "aw" + std::to_string(k));
    CHECK(d.kind == DimKind::simplex_weight);
    CHECK(d.raw_min == 0.0);
    CHECK(d.raw_max == 1.0);
  }

  const ExperimentConfig grid_cfg = load_config(shipped("pancreas-like.toml"));
  const HyperparamSpace grid_space = build_space_from_config(grid_cfg);
  CHECK(grid_space.dims.size() == 3);
  CHECK(grid_cardinality(grid_space) == 8u * 8u * 5u);
}

TEST_CASE("config echoes to json with the same values") {
  const ExperimentConfig cfg = load_config(shipped("cifar-like.toml"));
  const nlohmann::json j = config_to_json(cfg);
  CHECK(j["run"]["seed"].get<std::uint64_t>() == 1);
  CHECK(j["run"]["task"].get<std::string>() == "fl");
  CHECK(j["run"]["clients"].get<std::size_t>() == 8);
  CHECK(j["agent"]["mode"].get<std::string>() == "continuous");
  CHECK(j["space"]["dim"][0]["name"].get<std::string>() == "lr");
  CHECK(j["space"]["dim"][0]["log"].get<bool>() == true);
  CHECK(j["baseline"]["kind"].get<std::string>() == "fedavg");
  CHECK_FALSE(j.contains("bandit"));

  const nlohmann::json jb = config_to_json(load_config(shipped("bandit.toml")));
  CHECK(jb["bandit"]["target"].get<double>() == doctest::Approx(0.75));
  CHECK(jb["run"]["task"].get<std::string>() == "bandit");
}
