// Minimum-total-power CH allocation under a mean-difference floor.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "wsnfuse/errors.hpp"

namespace wsnfuse {

struct AllocationProblem {
  std::vector<double> lambda_d;         // lambda1_m - lambda0
  std::vector<double> snch_noise_vars;  // sigma^2_{c,m}
  std::vector<double> chfc_noise_vars;  // sigma^2_{f,m}
  double sn_power = 1.0;                // P_0
  double md_floor = 1.0;                // D_0

  [[nodiscard]] std::size_t size() const noexcept { return lambda_d.size(); }
  [[nodiscard]] double d1() const noexcept { return md_floor / sn_power; }

  void validate() const {
    const auto m = lambda_d.size();
    if (snch_noise_vars.size() != m || chfc_noise_vars.size() != m) {
      throw std::invalid_argument("allocation lists must have one entry per cluster");
    }
    if (!(sn_power > 0.0)) throw std::invalid_argument("sn_power must be > 0");
    if (!(md_floor > 0.0)) throw std::invalid_argument("md_floor must be > 0");
    for (std::size_t i = 0; i < m; ++i) {
      if (!(snch_noise_vars[i] > 0.0)) {
        throw std::invalid_argument("SN-CH noise variances must be > 0");
      }
      // sigma_f = 0 makes MD jump at P_m = 0+, so the optimum is not attained
      if (!(chfc_noise_vars[i] > 0.0)) {
        throw std::invalid_argument("CH-FC noise variances must be > 0");
      }
      if (!(lambda_d[i] >= 0.0)) throw std::invalid_argument("lambda_d must be >= 0");
    }
  }

  /// Limit of the mean difference as every P_m grows without bound.
  [[nodiscard]] double md_supremum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      s += lambda_d[i] * lambda_d[i] / snch_noise_vars[i];
    }
    return sn_power * s;
  }
};

struct PowerAllocation {
  std::vector<double> powers;
  double nu = 0.0;
  std::vector<std::size_t> active_set;
  double achieved_md = 0.0;

  [[nodiscard]] double total() const {
    return std::accumulate(powers.begin(), powers.end(), 0.0);
  }
};

/// MD = P_0 sum_m P_m lambda_d^2 / (sigma_c^2 P_m + sigma_f^2).
inline double mean_difference(const std::vector<double>& powers,
                              const AllocationProblem& problem) {
  if (powers.size() != problem.size()) {
    throw std::invalid_argument("one power per cluster expected");
  }
  double s = 0.0;
  for (std::size_t m = 0; m < powers.size(); ++m) {
    if (powers[m] < 0.0) throw std::invalid_argument("powers must be >= 0");
    if (powers[m] == 0.0) continue;
    const double ld = problem.lambda_d[m];
    s += powers[m] * ld * ld /
         (problem.snch_noise_vars[m] * powers[m] + problem.chfc_noise_vars[m]);
  }
  return problem.sn_power * s;
}

/// Unclamped closed-form power for cluster m at dual level sqrt(nu).
inline double unclamped_power(const AllocationProblem& problem, std::size_t m,
                              double sqrt_nu) {
  const double sc = problem.snch_noise_vars[m];
  const double sf2 = problem.chfc_noise_vars[m];
  return (problem.lambda_d[m] * std::sqrt(sf2) * sqrt_nu - sf2) / sc;
}

/// Water-filling solution of  min sum P_m  s.t.  P >= 0, MD(P) >= D_0.
///
/// The closed form for sqrt(nu) assumes every multiplier mu_m vanishes, which
/// only holds on the clusters that end up powered. Clusters are therefore
/// admitted in order of their activation level sigma_f / lambda_d (the value
/// of sqrt(nu) at which their power turns positive) until the resulting
/// sqrt(nu) is consistent: every admitted cluster strictly positive, every
/// excluded cluster non-positive.
inline PowerAllocation allocate(const AllocationProblem& problem) {
  problem.validate();
  const double d1 = problem.d1();
  const double sup = problem.md_supremum();
  if (!(sup / problem.sn_power > d1)) {
    std::ostringstream msg;
    msg << "mean-difference floor " << problem.md_floor
        << " is not below the achievable supremum " << sup;
    throw InfeasibleError(msg.str(), sup);
  }

  const std::size_t M = problem.size();
  std::vector<std::size_t> order;
  std::vector<double> level(M, std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < M; ++m) {
    if (problem.lambda_d[m] > 0.0) {
      level[m] = std::sqrt(problem.chfc_noise_vars[m]) / problem.lambda_d[m];
      order.push_back(m);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return level[a] < level[b]; });

  double num = 0.0;
  double den = -d1;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t m = order[k];
    const double sc = problem.snch_noise_vars[m];
    num += problem.lambda_d[m] * std::sqrt(problem.chfc_noise_vars[m]) / sc;
    den += problem.lambda_d[m] * problem.lambda_d[m] / sc;
    if (den <= 0.0) continue;
    const double sqrt_nu = num / den;
    const bool last_positive = sqrt_nu > level[m];
    const bool next_off = k + 1 == order.size() || sqrt_nu <= level[order[k + 1]];
    if (!last_positive || !next_off) continue;

    PowerAllocation out;
    out.powers.assign(M, 0.0);
    out.nu = sqrt_nu * sqrt_nu;
    for (std::size_t j = 0; j <= k; ++j) {
      out.powers[order[j]] = unclamped_power(problem, order[j], sqrt_nu);
      out.active_set.push_back(order[j]);
    }
    std::sort(out.active_set.begin(), out.active_set.end());
    out.achieved_md = mean_difference(out.powers, problem);
    return out;
  }
  throw InfeasibleError("no consistent active set (empty allocation)", sup);
}

/// Stationarity residual |1 - mu_m - nu lambda_d^2 sigma_f^2 / (sigma_c^2 P + sigma_f^2)^2|
/// with mu_m = 0, maximised over the active set.
inline double stationarity_residual(const PowerAllocation& a,
                                    const AllocationProblem& problem) {
  double worst = 0.0;
  for (auto m : a.active_set) {
    const double ld = problem.lambda_d[m];
    const double sf2 = problem.chfc_noise_vars[m];
    const double den = problem.snch_noise_vars[m] * a.powers[m] + sf2;
    worst = std::max(worst, std::abs(1.0 - a.nu * ld * ld * sf2 / (den * den)));
  }
  return worst;
}

/// Percentage of `reference_total` not spent by `powers`.
inline double power_saving(const std::vector<double>& powers, double reference_total) {
  if (!(reference_total > 0.0)) {
    throw std::invalid_argument("reference_total must be > 0");
  }
  const double used = std::accumulate(powers.begin(), powers.end(), 0.0);
  return (reference_total - used) / reference_total * 100.0;
}

/// The printed form (1/P_tot) sum_m (P_tot - P_m) x 100, with P_tot the
/// per-cluster reference power; can exceed 100%.
inline double power_saving_literal(const std::vector<double>& powers,
                                   double reference_per_cluster) {
  if (!(reference_per_cluster > 0.0)) {
    throw std::invalid_argument("reference power must be > 0");
  }
  double s = 0.0;
  for (double p : powers) s += reference_per_cluster - p;
  return s / reference_per_cluster * 100.0;
}

}  // namespace wsnfuse
