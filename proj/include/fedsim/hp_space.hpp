#ifndef FEDSIM_HP_SPACE_HPP
#define FEDSIM_HP_SPACE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedsim {

enum class DimKind { continuous_positive, integer_count, simplex_weight };

std::string_view to_string(DimKind kind);
DimKind dim_kind_from_string(std::string_view s);

struct HyperparamDim {
  std::string name;
  double raw_min = 0.0;
  double raw_max = 0.0;
  DimKind kind = DimKind::continuous_positive;
  int grid_points = 0;  // 0 = unset; required for discrete search
  bool log_scaled = false;
};

// Search space over D hyperparameters. Normalized coordinates of every dim
// span the same zero-centered interval [-scale, +scale].
struct HyperparamSpace {
  std::vector<HyperparamDim> dims;
  double scale = 1.0;
  int simplex_begin = -1;  // contiguous simplex-weight group, -1 if none
  int simplex_count = 0;

  std::size_t size() const { return dims.size(); }
};

// Validates dims (unique names, sane ranges, one contiguous simplex group)
// and builds the normalization maps.
HyperparamSpace build_space(std::vector<HyperparamDim> dims, double scale = 1.0);

// Raw -> normalized for a single non-simplex dim.
double normalize_dim(const HyperparamSpace& space, std::size_t d, double raw);

// Normalized -> raw for the full vector: coordinates are clipped into
// [-scale, scale], integer-count dims are rounded to the nearest integer and
// clamped to >= 1, and the simplex group is mapped through softmax.
std::vector<double> to_raw(const HyperparamSpace& space, std::span<const double> normalized);

// Same inverse map but without integer rounding; used for policy snapshots
// and plots where the distribution mean is a continuous quantity.
std::vector<double> to_raw_continuous(const HyperparamSpace& space,
                                      std::span<const double> normalized);

// Product of grid_points over all dims; throws ConfigError when a dim has no
// grid and CapacityError on u64 overflow.
std::uint64_t grid_cardinality(const HyperparamSpace& space);

// Learnable condition of the sampling distribution (diagonal covariance).
struct DistributionParams {
  std::vector<double> mu;
  std::vector<double> log_sigma;
};

// mu = 0 (range centers), sigma = init_sigma for every dim.
DistributionParams initial_params(const HyperparamSpace& space, double init_sigma = 0.5);

// One concrete assignment: normalized (post-clip / on-grid) coordinates, raw
// values, and the log-probability score at the sampled point.
struct HyperparamSample {
  std::vector<double> normalized;
  std::vector<double> raw;
  std::vector<double> score_mu;
  std::vector<double> score_log_sigma;
};

std::vector<double> softmax(std::span<const double> logits);

}  // namespace fedsim

#endif
