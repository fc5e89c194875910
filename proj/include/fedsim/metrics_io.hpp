#ifndef FEDSIM_METRICS_IO_HPP
#define FEDSIM_METRICS_IO_HPP

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/ds_kernels.hpp"
#include "fedsim/rl_agent.hpp"
#include "fedsim/round_record.hpp"

namespace fedsim {

// Shortest decimal string that parses back to exactly the same double;
// locale-independent. Used everywhere a number must be byte-reproducible.
std::string format_double(double value);

// Streaming writer: header on open, one flushed row per append, so a killed
// run leaves a valid prefix behind.
class RoundCsvWriter {
 public:
  RoundCsvWriter(const std::string& path, CsvSchema schema);

  void append(const RoundRecord& record);
  const CsvSchema& schema() const { return schema_; }

 private:
  std::string path_;
  CsvSchema schema_;
  std::ofstream out_;
};

void write_round_csv(const std::string& path, const CsvSchema& schema,
                     const std::vector<RoundRecord>& records);

std::pair<CsvSchema, std::vector<RoundRecord>> read_round_csv(const std::string& path);

// Wall-clock phase breakdown, one row per round. Kept out of rounds.csv so
// that file stays byte-identical across repeat runs of the same seed.
void write_timings_csv(const std::string& path, const std::vector<RoundRecord>& records);

// Per-dimension mu trajectory with a +/- sigma band, raw units, rounds on the
// x-axis. Requires policy snapshots; a baseline run has no policy and is
// rejected. Re-checks that aggregation-weight means sum to 1 at every round.
void plot_hyperparam_evolution(const CsvSchema& schema, const std::vector<RoundRecord>& records,
                               const std::string& svg_path);

struct CostProbe {
  SearchMode mode = SearchMode::continuous;
  std::uint64_t cardinality = 0;
  std::size_t peak_bytes = 0;
  double seconds_per_sample = 0.0;
};

struct BenchOptions {
  std::size_t dims = 2;
  int ds_reps = 3;        // median over this many single-draw timings
  int cs_reps = 5;        // median over this many batch timings
  int cs_inner = 1024;    // draws per continuous timing batch
  std::uint64_t seed = 20240;
  std::uint64_t cardinality_cap = 200'000'000;
  KernelMode kernel = KernelMode::kAuto;
};

// Times one sampled draw (with scores) per mode across grids of increasing
// cardinality; memory is the sampler-structure footprint reported by the
// sampler itself.
std::vector<CostProbe> benchmark_search_cost(std::span<const std::uint64_t> cardinalities,
                                             std::span<const SearchMode> modes,
                                             const BenchOptions& options);

void write_cost_csv(const std::string& path, const std::vector<CostProbe>& probes);

// Log-log time and memory panels versus grid cardinality, one series per mode.
void plot_search_cost(const std::vector<CostProbe>& probes, const std::string& svg_path);

}  // namespace fedsim
#endif
