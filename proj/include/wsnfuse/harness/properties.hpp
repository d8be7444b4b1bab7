// Quick self-check of model properties, run by `wsnfuse validate`.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "wsnfuse/bounds.hpp"
#include "wsnfuse/fusion.hpp"
#include "wsnfuse/harness/config.hpp"
#include "wsnfuse/power.hpp"
#include "wsnfuse/rng.hpp"
#include "wsnfuse/sensing.hpp"

namespace wsnfuse {

struct PropertyOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

/// Maximiser of a unimodal f on [a, b] by golden-section search.
inline double golden_max(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  // the maximum may sit on the boundary
  if (f(a) >= f(x) && f(a) >= f(b)) return a;
  return x;
}

}  // namespace detail

/// Runs every check on a small deterministic workload. Uses `config` for the
/// sensing geometry and channel; `seed` drives the random instances.
inline std::vector<PropertyOutcome> check_properties(const ExperimentConfig& config) {
  std::vector<PropertyOutcome> out;
  auto rng = make_stream(config.seed, 0, Lane::kDecisions);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto record = [&](std::string name, bool ok, std::string detail = {}) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    double worst = 0.0;
    for (double p : {1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.999}) {
      worst = std::max(worst, std::abs(p - local_pfa_of(threshold_for_pfa(p, 1.3), 1.3)));
    }
    record("pfa threshold round trip", worst < 1e-12, "max error " + detail::format_double(worst));
  }

  const auto region = config.region();
  const auto sensing = config.sensing();
  {
    const double l0 = lambda0(config.intensity, sensing.local_pfa, region.cluster_area());
    const double l1 = lambda1(config.intensity, TargetParams{0.0, config.target().location},
                              region.cluster_rect(0), sensing);
    record("zero-power target gives lambda0", std::abs(l1 - l0) <= 1e-9 * l0);
    const auto in = cluster_intensities(config.intensity, config.target(), region, sensing);
    bool ok = true;
    for (double v : in.lambda1) ok = ok && v >= in.lambda0;
    record("lambda1 >= lambda0 in every cluster", ok);
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double l0 = 0.5 + 10.0 * u01(rng);
      std::vector<double> means(1 + static_cast<std::size_t>(5 * u01(rng)));
      for (auto& v : means) v = 15.0 * u01(rng);
      const auto est = estimate_lambda1(means, l0);
      auto objective = [&](double lam) {
        double s = 0.0;
        for (double v : means) s += v * std::log(lam) - lam;
        return s;
      };
      const double ref = detail::golden_max(objective, l0, l0 + 50.0);
      worst = std::max(worst, std::abs(est.lambda1_hat - ref));
    }
    record("constrained ML closed form matches search", worst < 1e-6,
           "max gap " + detail::format_double(worst));
  }

  {
    double worst = INFINITY;
    for (int i = 0; i < 200; ++i) {
      const double zt = -3.0 + 20.0 * u01(rng);
      const double lam = 0.2 + 15.0 * u01(rng);
      const double s = 0.05 + 5.0 * u01(rng);
      worst = std::min(worst, log_likelihood(zt, lam, s) - loglik_lower_bound(zt, lam, s));
    }
    record("likelihood lower bound holds", worst >= -1e-10,
           "min slack " + detail::format_double(worst));
  }

  {
    bool ok = true;
    double prev = -INFINITY;
    for (int i = 0; i <= 60; ++i) {
      const double v = llr_term(-5.0 + 0.5 * i, 4.0, 1.0, 1.0);
      ok = ok && v > prev;
      prev = v;
    }
    record("LLR increasing in the observation", ok);
  }

  {
    const auto in = cluster_intensities(config.intensity, config.target(), region, sensing);
    const auto ctx = make_fusion_context(in, derive(config.channel()));
    const double offset = approx_llr_offset(ctx);
    double worst = 0.0;
    std::normal_distribution<double> n(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> z(ctx.size());
      for (auto& v : z) v = n(rng);
      worst = std::max(worst,
                       std::abs(approx_llr(z, ctx) - offset + lfr_statistic(z, ctx.weights_lfr)));
    }
    record("approximate LLR is affine in the LFR statistic", worst < 1e-9,
           "max error " + detail::format_double(worst));

    const auto bp = bound_params(ctx);
    bool ok = bp.mean[1] >= bp.mean[0];
    double prev = 2.0;
    for (int i = 0; i < 100; ++i) {
      const double b = tail_bound(bp.mean[0] + 0.1 * i, bp, Hypothesis::kH0);
      ok = ok && b <= prev && b >= 0.0 && b <= 1.0;
      prev = b;
    }
    record("tail bound monotone and in [0,1]", ok);
  }

  {
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
      const std::size_t M = 1 + static_cast<std::size_t>(9 * u01(rng)) % 9;
      AllocationProblem p;
      for (std::size_t m = 0; m < M; ++m) {
        p.lambda_d.push_back(u01(rng) < 0.2 ? 0.0 : 5.0 * u01(rng));
        p.snch_noise_vars.push_back(0.1 + 2.0 * u01(rng));
        p.chfc_noise_vars.push_back(0.1 + 2.0 * u01(rng));
      }
      p.sn_power = 0.5 + 2.0 * u01(rng);
      const double sup = p.md_supremum();
      if (!(sup > 0.0)) continue;
      p.md_floor = (0.05 + 0.9 * u01(rng)) * sup;
      const auto a = allocate(p);
      bool ok = stationarity_residual(a, p) < 1e-8 && a.nu > 0.0 &&
                std::abs(a.achieved_md - p.md_floor) <= 1e-6 * p.md_floor;
      const double sqrt_nu = std::sqrt(a.nu);
      for (std::size_t m = 0; m < M; ++m) {
        const bool on = a.powers[m] > 0.0;
        ok = ok && a.powers[m] >= 0.0 && on == (unclamped_power(p, m, sqrt_nu) > 0.0);
      }
      failures += ok ? 0 : 1;
    }
    record("power allocation KKT certificate", failures == 0,
           std::to_string(failures) + " of 100 problems failed");
  }
  return out;
}

inline bool report_properties(const std::vector<PropertyOutcome>& outcomes, std::ostream& os) {
  bool all = true;
  for (const auto& o : outcomes) {
    os << (o.passed ? "PASS " : "FAIL ") << o.name;
    if (!o.detail.empty()) os << " (" << o.detail << ')';
    os << '\n';
    all = all && o.passed;
  }
  return all;
}

}  // namespace wsnfuse
