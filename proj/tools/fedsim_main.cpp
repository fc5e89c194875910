// Command-line entry point: binds TOML experiment configs to the federated
// run loop, the fixed-hyperparameter baselines, the sampler cost benchmark,
// and the SVG plotting helpers.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/parallel.hpp"

namespace {

// Exit codes, one per failure class so scripts can tell them apart.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;
constexpr int kExitCapacity = 5;

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::string mode_override;
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* cfg = cmd->add_option("--config", opts.config_path, "experiment config (TOML)");
  if (config_required) cfg->required();
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&opts](const std::string&) { opts.has_seed = true; });
  cmd->add_option("--out", opts.out_override, "output directory override");
  cmd->add_option("--mode", opts.mode_override, "search mode override")
      ->check(CLI::IsMember({"ds", "cs", "mlp"}));
  cmd->add_flag("--quiet", opts.quiet, "suppress per-round progress output");
}

fedsim::SearchMode mode_from_flag(const std::string& flag) {
  if (flag == "ds") return fedsim::SearchMode::discrete;
  if (flag == "cs") return fedsim::SearchMode::continuous;
  return fedsim::SearchMode::mlp;
}

// Load + override + validate, then echo the fully resolved config.
fedsim::ExperimentConfig resolve_config(const CommonOpts& opts, bool echo) {
  fedsim::ExperimentConfig cfg = fedsim::load_config(opts.config_path);
  if (opts.has_seed) cfg.seed = opts.seed;
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  if (!opts.mode_override.empty()) cfg.agent.mode = mode_from_flag(opts.mode_override);
  fedsim::validate_config(cfg);
  if (echo) {
    std::printf("%s\n", fedsim::config_to_json(cfg).dump(2).c_str());
    std::fflush(stdout);
  }
  return cfg;
}

void print_summary(const fedsim::RunSummary& summary) {
  std::printf("%s\n", summary.to_json().dump(2).c_str());
}

std::vector<std::uint64_t> parse_sizes(const std::string& text) {
  std::vector<std::uint64_t> sizes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string tok = text.substr(pos, comma - pos);
    try {
      sizes.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw fedsim::ConfigError("invalid cardinality '" + tok + "' in --sizes");
    }
    pos = comma + 1;
  }
  if (sizes.empty()) throw fedsim::ConfigError("--sizes needs at least one cardinality");
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic federated-learning simulator with an online "
               "hyperparameter search agent"};
  app.require_subcommand(1);

  if (const char* workers = std::getenv("FEDSIM_WORKERS")) {
    const int n = std::atoi(workers);
    if (n > 0) fedsim::par::set_threads(n);
  }

  CommonOpts run_opts;
  auto* run_cmd = app.add_subcommand("run", "searched federated run (samples hyperparameters "
                                            "each round, learns the sampling distribution)");
  add_common(run_cmd, run_opts, true);

  CommonOpts base_opts;
  auto* base_cmd =
      app.add_subcommand("baseline", "fixed-hyperparameter federated run (weighted averaging, "
                                     "optionally with a proximal term)");
  add_common(base_cmd, base_opts, true);

  CommonOpts local_opts;
  int local_client = 0;
  auto* local_cmd = app.add_subcommand(
      "local-only", "train on one client's shard alone, cross-evaluate on every test shard");
  add_common(local_cmd, local_opts, true);
  local_cmd->add_option("--client", local_client, "client id to train on")->required();

  std::string bench_out = "runs/bench";
  std::string bench_sizes = "1000,10000,100000,1000000,10000000";
  std::size_t bench_dims = 2;
  std::uint64_t bench_seed = 20240;
  bool bench_quiet = false;
  auto* bench_cmd =
      app.add_subcommand("bench-search", "time one sampled draw per search mode across grid "
                                         "cardinalities; writes cost.csv and a log-log plot");
  bench_cmd->add_option("--out", bench_out, "output directory");
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated grid cardinalities");
  bench_cmd->add_option("--dims", bench_dims, "search-space dimensionality")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_seed, "benchmark rng seed");
  bench_cmd->add_flag("--quiet", bench_quiet, "suppress the table");

  std::string plot_dir;
  std::string plot_svg;
  auto* plot_cmd = app.add_subcommand(
      "plot", "render the hyperparameter evolution of a finished run as an SVG");
  plot_cmd->add_option("--run-dir", plot_dir, "run output directory holding rounds.csv")
      ->required();
  plot_cmd->add_option("--svg", plot_svg, "output file (default <run-dir>/hyperparams.svg)");

  CommonOpts validate_opts;
  auto* validate_cmd =
      app.add_subcommand("validate-config", "parse and validate a config, echo it resolved");
  add_common(validate_cmd, validate_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) {
      const fedsim::ExperimentConfig cfg = resolve_config(run_opts, !run_opts.quiet);
      const fedsim::RunSummary summary = cfg.task == fedsim::RunTask::bandit
                                             ? fedsim::run_bandit(cfg, run_opts.quiet)
                                             : fedsim::run_searched(cfg, run_opts.quiet);
      print_summary(summary);
    } else if (*base_cmd) {
      const fedsim::ExperimentConfig cfg = resolve_config(base_opts, !base_opts.quiet);
      print_summary(fedsim::run_baseline(cfg, base_opts.quiet));
    } else if (*local_cmd) {
      const fedsim::ExperimentConfig cfg = resolve_config(local_opts, !local_opts.quiet);
      print_summary(fedsim::local_only(cfg, local_client, local_opts.quiet));
    } else if (*bench_cmd) {
      const std::vector<std::uint64_t> sizes = parse_sizes(bench_sizes);
      fedsim::BenchOptions opts;
      opts.dims = bench_dims;
      opts.seed = bench_seed;
      const fedsim::SearchMode modes[] = {fedsim::SearchMode::discrete,
                                          fedsim::SearchMode::continuous,
                                          fedsim::SearchMode::mlp};
      const std::vector<fedsim::CostProbe> probes =
          fedsim::benchmark_search_cost(sizes, modes, opts);
      std::error_code ec;
      std::filesystem::create_directories(bench_out, ec);
      if (ec) {
        throw fedsim::IoError("cannot create output directory '" + bench_out +
                              "': " + ec.message());
      }
      fedsim::write_cost_csv(bench_out + "/cost.csv", probes);
      fedsim::plot_search_cost(probes, bench_out + "/search_cost.svg");
      if (!bench_quiet) {
        std::printf("%-4s %12s %18s %12s\n", "mode", "cardinality", "s/sample", "peak_bytes");
        for (const fedsim::CostProbe& p : probes) {
          std::printf("%-4s %12llu %18.9f %12zu\n", fedsim::to_string(p.mode).c_str(),
                      static_cast<unsigned long long>(p.cardinality), p.seconds_per_sample,
                      p.peak_bytes);
        }
      }
    } else if (*plot_cmd) {
      const std::string csv = plot_dir + "/rounds.csv";
      const std::string svg = plot_svg.empty() ? plot_dir + "/hyperparams.svg" : plot_svg;
      auto [schema, records] = fedsim::read_round_csv(csv);
      fedsim::plot_hyperparam_evolution(schema, records, svg);
      std::printf("wrote %s\n", svg.c_str());
    } else if (*validate_cmd) {
      (void)resolve_config(validate_opts, true);
    }
  } catch (const fedsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const fedsim::CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return kExitCapacity;
  } catch (const fedsim::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const fedsim::RewardError& e) {
    std::fprintf(stderr, "reward error: %s\n", e.what());
    return kExitDivergence;
  } catch (const fedsim::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitOk;
}
