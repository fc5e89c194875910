#include "fedsim/sampler.hpp"

#include <cmath>
#include <string>

#include "fedsim/errors.hpp"
#include "fedsim/parallel.hpp"

namespace fedsim {

namespace {

void check_params(const HyperparamSpace& space, const DistributionParams& params) {
  if (params.mu.size() != space.size() || params.log_sigma.size() != space.size()) {
    throw ConfigError("distribution params length does not match space dims");
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!std::isfinite(params.mu[i]) || !std::isfinite(params.log_sigma[i])) {
      throw ConfigError("distribution params must be finite");
    }
  }
}

std::vector<double> sigmas(const DistributionParams& params) {
  std::vector<double> out(params.log_sigma.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(params.log_sigma[i]);
  return out;
}

}  // namespace

void continuous_score(const DistributionParams& params, std::span<const double> h,
                      std::span<double> score_mu, std::span<double> score_log_sigma) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double sigma = std::exp(params.log_sigma[i]);
    const double t = h[i] - params.mu[i];
    const double r = t / sigma;
    score_mu[i] = t / (sigma * sigma);
    score_log_sigma[i] = r * r - 1.0;
  }
}

HyperparamSample sample_continuous(const HyperparamSpace& space, const DistributionParams& params,
                                   RngStream& rng, SampleStats* stats) {
  check_params(space, params);
  const std::size_t n_dims = space.size();
  const std::vector<double> sigma = sigmas(params);

  std::vector<double> pre_clip(n_dims);
  for (std::size_t i = 0; i < n_dims; ++i) {
    pre_clip[i] = params.mu[i] + sigma[i] * rng.normal();
  }

  HyperparamSample sample;
  sample.score_mu.resize(n_dims);
  sample.score_log_sigma.resize(n_dims);
  continuous_score(params, pre_clip, sample.score_mu, sample.score_log_sigma);

  sample.normalized.resize(n_dims);
  for (std::size_t i = 0; i < n_dims; ++i) {
    sample.normalized[i] = std::clamp(pre_clip[i], -space.scale, space.scale);
  }
  sample.raw = to_raw(space, sample.normalized);

  if (stats != nullptr) {
    stats->cardinality = 0;
    stats->peak_bytes = 5 * n_dims * sizeof(double);
  }
  return sample;
}

namespace {

GridAxes checked_axes(const HyperparamSpace& space, const DiscreteSampleOptions& options) {
  GridAxes axes = make_grid_axes(space);
  if (axes.cardinality > options.cardinality_cap) {
    throw CapacityError("grid cardinality " + std::to_string(axes.cardinality) +
                        " exceeds cap " + std::to_string(options.cardinality_cap));
  }
  return axes;
}

}  // namespace

HyperparamSample sample_discrete(const HyperparamSpace& space, const DistributionParams& params,
                                 RngStream& rng, const DiscreteSampleOptions& options,
                                 SampleStats* stats) {
  check_params(space, params);
  const GridAxes axes = checked_axes(space, options);
  const std::size_t n_dims = space.size();
  const std::vector<double> sigma = sigmas(params);

  std::vector<double> dens;
  const GridMoments moments = grid_moments(axes, params.mu, sigma, dens, options.kernel);

  const double target = rng.uniform() * moments.z;
  const std::size_t flat = locate_quantile(dens, target, options.kernel);

  HyperparamSample sample;
  sample.normalized = decode_grid_point(axes, flat);
  sample.raw = to_raw(space, sample.normalized);
  sample.score_mu.resize(n_dims);
  sample.score_log_sigma.resize(n_dims);
  // Gradient of log PMF: the point's own term minus the PMF expectation. The
  // continuous normalizer cancels in the PMF ratio, so there is no -1 term.
  for (std::size_t d = 0; d < n_dims; ++d) {
    const double t = sample.normalized[d] - params.mu[d];
    const double r = t / sigma[d];
    sample.score_mu[d] = t / (sigma[d] * sigma[d]) - moments.m1[d] / moments.z;
    sample.score_log_sigma[d] = r * r - moments.m2[d] / moments.z;
  }

  if (stats != nullptr) {
    const std::size_t n_blocks = par::num_blocks(dens.size());
    stats->cardinality = axes.cardinality;
    stats->peak_bytes = dens.size() * sizeof(double)                  // density buffer
                        + n_blocks * (2 * n_dims + 2) * sizeof(double);  // block partials
  }
  return sample;
}

std::vector<double> discrete_pmf(const HyperparamSpace& space, const DistributionParams& params,
                                 const DiscreteSampleOptions& options) {
  check_params(space, params);
  const GridAxes axes = checked_axes(space, options);
  const std::vector<double> sigma = sigmas(params);
  std::vector<double> dens;
  const GridMoments moments = grid_moments(axes, params.mu, sigma, dens, options.kernel);
  for (double& w : dens) w /= moments.z;
  return dens;
}

}  // namespace fedsim
