// Gaussian-tail (Chernoff) upper bounds on the LFR's false-alarm and
// detection probabilities.
#pragma once

#include <cmath>
#include <cstddef>

#include "wsnfuse/fusion.hpp"

namespace wsnfuse {

enum class Hypothesis { kH0 = 0, kH1 = 1 };

/// Mean and variance of the LFR statistic under each hypothesis
/// (index 0 = H0, 1 = H1).
struct TailBoundParams {
  double mean[2] = {0.0, 0.0};
  double variance[2] = {0.0, 0.0};

  [[nodiscard]] double mean_of(Hypothesis h) const noexcept {
    return mean[static_cast<int>(h)];
  }
  [[nodiscard]] double variance_of(Hypothesis h) const noexcept {
    return variance[static_cast<int>(h)];
  }
};

inline TailBoundParams bound_params(const FusionContext& ctx) {
  TailBoundParams p;
  for (std::size_t m = 0; m < ctx.size(); ++m) {
    const double d = ctx.weights_lfr[m];
    const double pt = ctx.channels.p_tilde[m];
    const double var = ctx.channels.sigma_tilde_sq[m];
    const double lam[2] = {ctx.intensities.lambda0, ctx.intensities.lambda1[m]};
    for (int j = 0; j < 2; ++j) {
      p.mean[j] += lam[j] * d * std::sqrt(pt);
      p.variance[j] += d * d * (lam[j] * pt + var);
    }
  }
  return p;
}

/// exp(-(z - mean)^2 / (2 var)) above the mean; 1 at or below it, where the
/// Chernoff optimiser would leave t > 0.
inline double tail_bound(double threshold, const TailBoundParams& params,
                         Hypothesis hypothesis) {
  const double mean = params.mean_of(hypothesis);
  const double var = params.variance_of(hypothesis);
  if (threshold <= mean) return 1.0;
  if (var == 0.0) return 0.0;
  const double u = threshold - mean;
  return std::exp(-u * u / (2.0 * var));
}

}  // namespace wsnfuse
