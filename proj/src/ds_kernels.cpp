#include "fedsim/ds_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"

namespace fedsim {

GridAxes make_grid_axes(const HyperparamSpace& space) {
  GridAxes axes;
  axes.cardinality = grid_cardinality(space);  // validates grid_points per dim
  axes.points.reserve(space.size());
  axes.lo.reserve(space.size());
  axes.step.reserve(space.size());
  for (const auto& dim : space.dims) {
    axes.points.push_back(dim.grid_points);
    axes.lo.push_back(-space.scale);
    axes.step.push_back(2.0 * space.scale / static_cast<double>(dim.grid_points - 1));
  }
  return axes;
}

std::vector<double> decode_grid_point(const GridAxes& axes, std::uint64_t flat) {
  const std::size_t n_dims = axes.dims();
  std::vector<double> out(n_dims);
  for (std::size_t d = n_dims; d-- > 0;) {
    const auto points = static_cast<std::uint64_t>(axes.points[d]);
    const auto idx = flat % points;
    flat /= points;
    out[d] = axes.lo[d] + axes.step[d] * static_cast<double>(idx);
  }
  return out;
}

namespace {

// Odometer over the mixed-radix grid (last dim fastest). Per-dim terms and
// their running prefix are always rebuilt left to right, so the exponent is
// bit-identical no matter where a block starts.
class GridWalker {
 public:
  GridWalker(const GridAxes& axes, std::span<const double> mu, std::span<const double> sigma)
      : axes_(axes), mu_(mu), sigma_(sigma), n_dims_(axes.dims()),
        idx_(n_dims_), q_(n_dims_), s1_(n_dims_), s2_(n_dims_), prefix_(n_dims_) {}

  void init(std::uint64_t flat) {
    for (std::size_t d = n_dims_; d-- > 0;) {
      const auto points = static_cast<std::uint64_t>(axes_.points[d]);
      idx_[d] = static_cast<int>(flat % points);
      flat /= points;
    }
    for (std::size_t d = 0; d < n_dims_; ++d) set_dim(d);
    rebuild_prefix(0);
  }

  void advance() {
    std::size_t d = n_dims_;
    while (d-- > 0) {
      if (++idx_[d] < axes_.points[d]) break;
      idx_[d] = 0;
      if (d == 0) break;  // wrapped past the end; caller stops here
    }
    for (std::size_t j = d; j < n_dims_; ++j) set_dim(j);
    rebuild_prefix(d);
  }

  double exponent() const { return prefix_[n_dims_ - 1]; }
  std::span<const double> s1() const { return s1_; }
  std::span<const double> s2() const { return s2_; }

 private:
  void set_dim(std::size_t d) {
    const double level = axes_.lo[d] + axes_.step[d] * static_cast<double>(idx_[d]);
    const double t = level - mu_[d];
    const double r = t / sigma_[d];
    q_[d] = -0.5 * r * r;
    s1_[d] = t / (sigma_[d] * sigma_[d]);
    s2_[d] = r * r;
  }

  void rebuild_prefix(std::size_t from) {
    for (std::size_t d = from; d < n_dims_; ++d) {
      prefix_[d] = (d == 0 ? 0.0 : prefix_[d - 1]) + q_[d];
    }
  }

  const GridAxes& axes_;
  std::span<const double> mu_;
  std::span<const double> sigma_;
  std::size_t n_dims_;
  std::vector<int> idx_;
  std::vector<double> q_, s1_, s2_, prefix_;
};

template <bool Parallel>
GridMoments grid_moments_impl(const GridAxes& axes, std::span<const double> mu,
                              std::span<const double> sigma, std::vector<double>& dens) {
  const std::uint64_t n = axes.cardinality;
  const std::size_t n_dims = axes.dims();
  const std::size_t n_blocks = par::num_blocks(static_cast<std::size_t>(n));

  std::vector<double> block_max(n_blocks, -std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n_blocks); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const auto range = par::block(b, static_cast<std::size_t>(n));
    GridWalker walker(axes, mu, sigma);
    walker.init(range.begin);
    double local_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = range.begin; i < range.end; ++i) {
      local_max = std::max(local_max, walker.exponent());
      if (i + 1 < range.end) walker.advance();
    }
    block_max[b] = local_max;
  }
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (const double m : block_max) max_exponent = std::max(max_exponent, m);

  dens.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> block_z(n_blocks, 0.0);
  std::vector<double> block_m1(n_blocks * n_dims, 0.0);
  std::vector<double> block_m2(n_blocks * n_dims, 0.0);
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n_blocks); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const auto range = par::block(b, static_cast<std::size_t>(n));
    GridWalker walker(axes, mu, sigma);
    walker.init(range.begin);
    double z = 0.0;
    double* m1 = block_m1.data() + b * n_dims;
    double* m2 = block_m2.data() + b * n_dims;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      const double w = std::exp(walker.exponent() - max_exponent);
      dens[i] = w;
      z += w;
      const auto s1 = walker.s1();
      const auto s2 = walker.s2();
      for (std::size_t d = 0; d < n_dims; ++d) {
        m1[d] += w * s1[d];
        m2[d] += w * s2[d];
      }
      if (i + 1 < range.end) walker.advance();
    }
    block_z[b] = z;
  }

  GridMoments moments;
  moments.max_exponent = max_exponent;
  moments.m1.assign(n_dims, 0.0);
  moments.m2.assign(n_dims, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    moments.z += block_z[b];
    for (std::size_t d = 0; d < n_dims; ++d) {
      moments.m1[d] += block_m1[b * n_dims + d];
      moments.m2[d] += block_m2[b * n_dims + d];
    }
  }
  return moments;
}

template <bool Parallel>
std::size_t locate_quantile_impl(std::span<const double> dens, double target) {
  const std::size_t n = dens.size();
  const std::size_t n_blocks = par::num_blocks(n);
  std::vector<double> partial(n_blocks, 0.0);
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n_blocks); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const auto range = par::block(b, n);
    double s = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) s += dens[i];
    partial[b] = s;
  }
  double cum = 0.0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (cum + partial[b] > target) {
      const auto range = par::block(b, n);
      double running = cum;
      for (std::size_t i = range.begin; i < range.end; ++i) {
        running += dens[i];
        if (running > target) return i;
      }
      return range.end - 1;  // block partial exceeded target but the scan rounded short
    }
    cum += partial[b];
  }
  return n - 1;
}

}  // namespace

GridMoments grid_moments_serial(const GridAxes& axes, std::span<const double> mu,
                                std::span<const double> sigma, std::vector<double>& dens) {
  return grid_moments_impl<false>(axes, mu, sigma, dens);
}

GridMoments grid_moments_parallel(const GridAxes& axes, std::span<const double> mu,
                                  std::span<const double> sigma, std::vector<double>& dens) {
  return grid_moments_impl<true>(axes, mu, sigma, dens);
}

GridMoments grid_moments(const GridAxes& axes, std::span<const double> mu,
                         std::span<const double> sigma, std::vector<double>& dens,
                         KernelMode mode) {
  switch (mode) {
    case KernelMode::kSerial: return grid_moments_serial(axes, mu, sigma, dens);
    case KernelMode::kParallel: return grid_moments_parallel(axes, mu, sigma, dens);
    case KernelMode::kAuto: break;
  }
  const bool big = axes.cardinality >= 4 * par::kBlock;
  return (par::openmp_enabled() && big) ? grid_moments_parallel(axes, mu, sigma, dens)
                                        : grid_moments_serial(axes, mu, sigma, dens);
}

std::size_t locate_quantile_serial(std::span<const double> dens, double target) {
  return locate_quantile_impl<false>(dens, target);
}

std::size_t locate_quantile_parallel(std::span<const double> dens, double target) {
  return locate_quantile_impl<true>(dens, target);
}

std::size_t locate_quantile(std::span<const double> dens, double target, KernelMode mode) {
  switch (mode) {
    case KernelMode::kSerial: return locate_quantile_serial(dens, target);
    case KernelMode::kParallel: return locate_quantile_parallel(dens, target);
    case KernelMode::kAuto: break;
  }
  const bool big = dens.size() >= 4 * par::kBlock;
  return (par::openmp_enabled() && big) ? locate_quantile_parallel(dens, target)
                                        : locate_quantile_serial(dens, target);
}

}  // namespace fedsim
