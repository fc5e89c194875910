#ifndef FEDSIM_SAMPLER_HPP
#define FEDSIM_SAMPLER_HPP

#include <cstdint>
#include <span>

#include "fedsim/ds_kernels.hpp"
#include "fedsim/hp_space.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Cost-probe support: what one sample allocated and how large the grid was.
struct SampleStats {
  std::uint64_t cardinality = 0;
  std::size_t peak_bytes = 0;
};

struct DiscreteSampleOptions {
  std::uint64_t cardinality_cap = 50'000'000;
  KernelMode kernel = KernelMode::kAuto;
};

// Evaluates the Gaussian density on the full grid, normalizes to a PMF, draws
// one point by inverse CDF, and stores the gradient of log PMF at the drawn
// point. Grid cardinality above the cap is a CapacityError.
HyperparamSample sample_discrete(const HyperparamSpace& space, const DistributionParams& params,
                                 RngStream& rng, const DiscreteSampleOptions& options = {},
                                 SampleStats* stats = nullptr);

// Draws mu + sigma * z with z ~ N(0, I) via Box-Muller, clips into the
// normalized range, and stores the analytic Gaussian score at the pre-clip
// point.
HyperparamSample sample_continuous(const HyperparamSpace& space, const DistributionParams& params,
                                   RngStream& rng, SampleStats* stats = nullptr);

// Analytic diagonal-Gaussian score at h:
//   score_mu[i]        = (h_i - mu_i) / sigma_i^2
//   score_log_sigma[i] = ((h_i - mu_i)/sigma_i)^2 - 1
void continuous_score(const DistributionParams& params, std::span<const double> h,
                      std::span<double> score_mu, std::span<double> score_log_sigma);

// Full normalized PMF over the grid (sums to 1); used by diagnostics and
// tests. Same capacity rules as sample_discrete.
std::vector<double> discrete_pmf(const HyperparamSpace& space, const DistributionParams& params,
                                 const DiscreteSampleOptions& options = {});

}  // namespace fedsim

#endif
