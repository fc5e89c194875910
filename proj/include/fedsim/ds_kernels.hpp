#ifndef FEDSIM_DS_KERNELS_HPP
#define FEDSIM_DS_KERNELS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/hp_space.hpp"

namespace fedsim {

// Normalized grid axes for discrete search: level j of dim d sits at
// lo[d] + step[d] * j, j in [0, points[d]).
struct GridAxes {
  std::vector<int> points;
  std::vector<double> lo;
  std::vector<double> step;
  std::uint64_t cardinality = 0;

  std::size_t dims() const { return points.size(); }
};

GridAxes make_grid_axes(const HyperparamSpace& space);

// Normalized coordinates of a flat grid index (last dim fastest).
std::vector<double> decode_grid_point(const GridAxes& axes, std::uint64_t flat);

// Density-weighted grid sums backing the discrete PMF and its score:
//   z  = sum_g exp(e(g) - max_exponent)
//   m1[d] = sum_g dens(g) * (g_d - mu_d) / sigma_d^2
//   m2[d] = sum_g dens(g) * ((g_d - mu_d) / sigma_d)^2
// where e(g) = -0.5 * sum_d ((g_d - mu_d)/sigma_d)^2.
struct GridMoments {
  double max_exponent = 0.0;
  double z = 0.0;
  std::vector<double> m1;
  std::vector<double> m2;
};

enum class KernelMode { kAuto, kSerial, kParallel };

// Fills `dens` (resized to cardinality) with exp(e - max_exponent) per grid
// point and returns the moments. Serial and parallel variants share the same
// fixed-block accumulation order and give bit-identical results.
GridMoments grid_moments_serial(const GridAxes& axes, std::span<const double> mu,
                                std::span<const double> sigma, std::vector<double>& dens);
GridMoments grid_moments_parallel(const GridAxes& axes, std::span<const double> mu,
                                  std::span<const double> sigma, std::vector<double>& dens);
GridMoments grid_moments(const GridAxes& axes, std::span<const double> mu,
                         std::span<const double> sigma, std::vector<double>& dens,
                         KernelMode mode);

// First index where the running density sum (two-level, block order) exceeds
// target. Serial and parallel variants agree bit-for-bit.
std::size_t locate_quantile_serial(std::span<const double> dens, double target);
std::size_t locate_quantile_parallel(std::span<const double> dens, double target);
std::size_t locate_quantile(std::span<const double> dens, double target, KernelMode mode);

}  // namespace fedsim

#endif
