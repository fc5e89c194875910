#ifndef FEDSIM_ROUND_RECORD_HPP
#define FEDSIM_ROUND_RECORD_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace fedsim {

struct PhaseTimings {
  double local_train_s = 0.0;
  double aggregate_s = 0.0;
  double evaluate_s = 0.0;
  double rl_update_s = 0.0;
};

// One row of a run's per-round log. The FL block is absent for bandit runs
// and the policy block is absent for baseline runs; the CSV schema follows.
struct RoundRecord {
  long round = 0;  // 1-based
  double reward = 0.0;
  std::vector<double> h_raw;  // sampled hyperparameters, raw units

  bool has_fl = false;
  double hyper_loss = 0.0;
  double test_acc = 0.0;
  std::vector<double> val_loss;
  std::vector<double> val_acc;

  bool has_policy = false;
  std::vector<double> mu_raw;     // policy mean mapped to raw units
  std::vector<double> sigma_raw;  // half-width of the raw mu +/- sigma band

  PhaseTimings timings;  // persisted to timings.csv, never to rounds.csv
};

struct CsvSchema {
  std::vector<std::string> dim_names;
  std::size_t n_clients = 0;
  bool has_fl = true;
  bool has_policy = true;
};

}  // namespace fedsim
#endif
