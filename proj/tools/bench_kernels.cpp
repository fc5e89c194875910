// Compares the serial reference grid kernels against the OpenMP variants:
// wall time, speedup, and a bit-for-bit identity check on every output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "fedsim/ds_kernels.hpp"
#include "fedsim/hp_space.hpp"
#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"

namespace {

using fedsim::GridAxes;
using fedsim::GridMoments;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fedsim::HyperparamSpace make_space(std::size_t dims, long points_per_dim) {
  std::vector<fedsim::HyperparamDim> hd(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    hd[d].name = "x" + std::to_string(d);
    hd[d].raw_min = 0.1;
    hd[d].raw_max = 10.0;
    hd[d].kind = fedsim::DimKind::continuous_positive;
    hd[d].grid_points = static_cast<int>(points_per_dim);
    hd[d].log_scaled = true;
  }
  return fedsim::build_space(hd, 1.0);
}

bool bits_equal(double a, double b) {
  std::uint64_t ua = 0, ub = 0;
  std::memcpy(&ua, &a, sizeof a);
  std::memcpy(&ub, &b, sizeof b);
  return ua == ub;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!bits_equal(a[i], b[i])) return false;
  }
  return true;
}

bool moments_equal(const GridMoments& a, const GridMoments& b) {
  return bits_equal(a.max_exponent, b.max_exponent) && bits_equal(a.z, b.z) &&
         bits_equal(a.m1, b.m1) && bits_equal(a.m2, b.m2);
}

}  // namespace

int main() {
  std::printf("threads: %d (OpenMP %s)\n\n", fedsim::par::max_threads(),
              fedsim::par::openmp_enabled() ? "on" : "off");
  std::printf("%-12s %10s | %12s %12s %8s | %12s %12s %8s | %s\n", "cardinality", "dims",
              "moments_ser", "moments_par", "speedup", "quantile_ser", "quantile_par", "speedup",
              "identical");

  const struct {
    std::size_t dims;
    long points;
  } cases[] = {{2, 100}, {2, 316}, {2, 1000}, {2, 3163}, {3, 216}};

  bool all_identical = true;
  for (const auto& c : cases) {
    const fedsim::HyperparamSpace space = make_space(c.dims, c.points);
    const GridAxes axes = fedsim::make_grid_axes(space);
    const fedsim::DistributionParams params = fedsim::initial_params(space);
    std::vector<double> sigma(space.size());
    for (std::size_t d = 0; d < space.size(); ++d) sigma[d] = std::exp(params.log_sigma[d]);

    std::vector<double> dens_s, dens_p;
    auto t0 = std::chrono::steady_clock::now();
    const GridMoments ms = fedsim::grid_moments_serial(axes, params.mu, sigma, dens_s);
    const double t_ms = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const GridMoments mp = fedsim::grid_moments_parallel(axes, params.mu, sigma, dens_p);
    const double t_mp = seconds_since(t0);

    fedsim::RngStream rng(20240);
    const double target = rng.uniform() * ms.z;

    t0 = std::chrono::steady_clock::now();
    const std::size_t qs = fedsim::locate_quantile_serial(dens_s, target);
    const double t_qs = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const std::size_t qp = fedsim::locate_quantile_parallel(dens_p, target);
    const double t_qp = seconds_since(t0);

    const bool identical = moments_equal(ms, mp) && bits_equal(dens_s, dens_p) && qs == qp;
    all_identical = all_identical && identical;

    std::printf("%-12llu %10zu | %11.6fs %11.6fs %7.2fx | %11.6fs %11.6fs %7.2fx | %s\n",
                static_cast<unsigned long long>(axes.cardinality), c.dims, t_ms, t_mp,
                t_ms / t_mp, t_qs, t_qp, t_qs / t_qp, identical ? "yes" : "NO");
  }

  std::printf("\nserial and parallel kernels %s\n",
              all_identical ? "agree bit-for-bit on every case" : "DISAGREE");
  return all_identical ? 0 : 1;
}
