#include "fedsim/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string_view to_string(DimKind kind) {
  switch (kind) {
    case DimKind::continuous_positive: return "continuous-positive";
    case DimKind::integer_count: return "integer-count";
    case DimKind::simplex_weight: return "simplex-weight";
  }
  return "unknown";
}

DimKind dim_kind_from_string(std::string_view s) {
  if (s == "continuous-positive") return DimKind::continuous_positive;
  if (s == "integer-count") return DimKind::integer_count;
  if (s == "simplex-weight") return DimKind::simplex_weight;
  throw ConfigError("unknown dim kind '" + std::string(s) + "'");
}

namespace {

void validate_dim(const HyperparamDim& d) {
  if (d.name.empty()) {
    throw ConfigError("dim name must not be empty");
  }
  if (!(d.raw_min < d.raw_max)) {
    throw ConfigError("dim '" + d.name + "': raw_min must be < raw_max");
  }
  if (d.grid_points != 0 && d.grid_points < 2) {
    throw ConfigError("dim '" + d.name + "': grid_points must be >= 2");
  }
  if (d.log_scaled && !(d.raw_min > 0.0)) {
    throw ConfigError("dim '" + d.name + "': log_scaled requires raw_min > 0");
  }
  switch (d.kind) {
    case DimKind::continuous_positive:
      if (d.raw_min < 0.0) {
        throw ConfigError("dim '" + d.name + "': continuous-positive requires raw_min >= 0");
      }
      break;
    case DimKind::integer_count:
      if (d.raw_max < 1.0) {
        throw ConfigError("dim '" + d.name + "': integer-count requires raw_max >= 1");
      }
      break;
    case DimKind::simplex_weight:
      if (d.log_scaled) {
        throw ConfigError("dim '" + d.name + "': simplex-weight dims cannot be log_scaled");
      }
      if (d.raw_min < 0.0 || d.raw_max > 1.0) {
        throw ConfigError("dim '" + d.name + "': simplex-weight range must lie in [0, 1]");
      }
      break;
  }
}

// Affine position of raw within its (possibly log-mapped) range, in [0, 1].
double unit_position(const HyperparamDim& d, double raw) {
  if (d.log_scaled) {
    return (std::log(raw) - std::log(d.raw_min)) /
           (std::log(d.raw_max) - std::log(d.raw_min));
  }
  return (raw - d.raw_min) / (d.raw_max - d.raw_min);
}

double from_unit_position(const HyperparamDim& d, double u) {
  if (d.log_scaled) {
    return std::exp(std::log(d.raw_min) + u * (std::log(d.raw_max) - std::log(d.raw_min)));
  }
  return d.raw_min + u * (d.raw_max - d.raw_min);
}

}  // namespace

HyperparamSpace build_space(std::vector<HyperparamDim> dims, double scale) {
  if (dims.empty()) {
    throw ConfigError("search space needs at least one dim");
  }
  if (!(scale > 0.0)) {
    throw ConfigError("normalized scale must be > 0");
  }
  std::unordered_set<std::string> names;
  for (const auto& d : dims) {
    validate_dim(d);
    if (!names.insert(d.name).second) {
      throw ConfigError("duplicate dim name '" + d.name + "'");
    }
  }

  HyperparamSpace space;
  space.scale = scale;
  space.dims = std::move(dims);

  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    if (space.dims[i].kind != DimKind::simplex_weight) continue;
    if (space.simplex_begin < 0) {
      space.simplex_begin = static_cast<int>(i);
    } else if (i != static_cast<std::size_t>(space.simplex_begin + space.simplex_count)) {
      throw ConfigError("simplex-weight dims must form one contiguous group");
    }
    ++space.simplex_count;
  }
  return space;
}

double normalize_dim(const HyperparamSpace& space, std::size_t d, double raw) {
  const auto& dim = space.dims.at(d);
  if (dim.kind == DimKind::simplex_weight) {
    throw ConfigError("simplex-weight dims have no per-dim normalization");
  }
  return space.scale * (2.0 * unit_position(dim, raw) - 1.0);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (const double v : logits) max_logit = std::max(max_logit, v);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

namespace {

std::vector<double> inverse_map(const HyperparamSpace& space,
                                std::span<const double> normalized, bool round_integers) {
  if (normalized.size() != space.size()) {
    throw ConfigError("normalized vector length does not match space dims");
  }
  std::vector<double> raw(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& dim = space.dims[i];
    const double n = std::clamp(normalized[i], -space.scale, space.scale);
    if (dim.kind == DimKind::simplex_weight) {
      raw[i] = n;  // filled in below from the whole group
      continue;
    }
    const double u = (n / space.scale + 1.0) / 2.0;
    double value = from_unit_position(dim, u);
    if (dim.kind == DimKind::integer_count && round_integers) {
      auto v = std::llround(value);
      v = std::max<long long>(v, 1);
      v = std::max<long long>(v, static_cast<long long>(std::ceil(dim.raw_min)));
      v = std::min<long long>(v, static_cast<long long>(std::floor(dim.raw_max)));
      value = static_cast<double>(std::max<long long>(v, 1));
    }
    raw[i] = value;
  }
  if (space.simplex_count > 0) {
    const std::size_t begin = static_cast<std::size_t>(space.simplex_begin);
    std::vector<double> weights =
        softmax(std::span(raw).subspan(begin, static_cast<std::size_t>(space.simplex_count)));
    std::copy(weights.begin(), weights.end(), raw.begin() + static_cast<long>(begin));
  }
  return raw;
}

}  // namespace

std::vector<double> to_raw(const HyperparamSpace& space, std::span<const double> normalized) {
  return inverse_map(space, normalized, true);
}

std::vector<double> to_raw_continuous(const HyperparamSpace& space,
                                      std::span<const double> normalized) {
  return inverse_map(space, normalized, false);
}

std::uint64_t grid_cardinality(const HyperparamSpace& space) {
  std::uint64_t total = 1;
  for (const auto& dim : space.dims) {
    if (dim.grid_points < 2) {
      throw ConfigError("dim '" + dim.name + "' has no grid_points; discrete search unavailable");
    }
    const auto points = static_cast<std::uint64_t>(dim.grid_points);
    if (total > std::numeric_limits<std::uint64_t>::max() / points) {
      throw CapacityError("grid cardinality overflows 64 bits");
    }
    total *= points;
  }
  return total;
}

DistributionParams initial_params(const HyperparamSpace& space, double init_sigma) {
  DistributionParams params;
  params.mu.assign(space.size(), 0.0);
  params.log_sigma.assign(space.size(), std::log(init_sigma));
  return params;
}

}  // namespace fedsim
