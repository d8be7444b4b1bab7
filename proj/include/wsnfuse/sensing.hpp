// Target signature, matched-filter local detection and cluster intensities.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "wsnfuse/deployment.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/quadrature.hpp"
#include "wsnfuse/rng.hpp"

namespace wsnfuse {

using Counts = std::vector<std::int64_t>;

/// Standard normal upper tail Q(x) = P(N(0,1) > x).
inline double normal_tail(double x) noexcept {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Inverse of normal_tail on (0, 1).
inline double normal_tail_inverse(double p) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

struct TargetParams {
  double power = 1.0;  // P_t
  Point location{4.0, 5.0};
};

/// Local detector parameters under the single-sample Gaussian shift model:
/// statistic ~ N(0, s^2) without target, N(a, s^2) with amplitude a.
struct SensingConfig {
  double noise_std = 1.0;
  double ref_distance = 1.0;
  double local_threshold = 0.0;
  double local_pfa = 0.5;

  /// Config whose threshold realizes `pfa` exactly.
  static SensingConfig from_pfa(double pfa, double noise_std,
                                double ref_distance);

  void validate() const {
    if (!(noise_std > 0.0)) throw std::invalid_argument("noise_std must be > 0");
    if (!(ref_distance > 0.0)) {
      throw std::invalid_argument("ref_distance must be > 0");
    }
    if (!(local_pfa > 0.0 && local_pfa < 1.0)) {
      throw std::invalid_argument("local_pfa must lie in (0, 1)");
    }
  }
};

/// Noise-free amplitude sqrt(P_t) / max(d0, |X_t - x|).
inline double amplitude(const TargetParams& target, const Point& point,
                        double ref_distance) {
  if (!(ref_distance > 0.0)) {
    throw std::invalid_argument("ref_distance must be > 0");
  }
  return std::sqrt(target.power) /
         std::max(ref_distance, distance(target.location, point));
}

inline double threshold_for_pfa(double pfa, double noise_std) {
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw std::invalid_argument("local false-alarm probability must lie in (0, 1)");
  }
  return noise_std * normal_tail_inverse(pfa);
}

inline double local_pfa_of(double threshold, double noise_std) noexcept {
  return normal_tail(threshold / noise_std);
}

inline SensingConfig SensingConfig::from_pfa(double pfa, double noise_std,
                                             double ref_distance) {
  SensingConfig cfg{noise_std, ref_distance, threshold_for_pfa(pfa, noise_std),
                    pfa};
  cfg.validate();
  return cfg;
}

inline double local_pd(double signal_amplitude, const SensingConfig& config) noexcept {
  return normal_tail((config.local_threshold - signal_amplitude) / config.noise_std);
}

/// Draws one matched-filter statistic per sensor and counts threshold
/// crossings per cluster. One normal variate is consumed per sensor whether or
/// not a target is present, so two calls with equal stream states are paired.
inline Counts simulate_decisions(const SensorField& field,
                                 const std::optional<TargetParams>& target,
                                 const SensingConfig& config, RandomStream& rng) {
  Counts counts(field.region.cluster_count(), 0);
  std::normal_distribution<double> noise(0.0, config.noise_std);
  for (std::size_t i = 0; i < field.size(); ++i) {
    double s = noise(rng);
    if (target) s += amplitude(*target, field.positions[i], config.ref_distance);
    if (s >= config.local_threshold) ++counts[field.cluster[i]];
  }
  return counts;
}

/// lambda_0 = intensity * P_fa * |C|.
inline double lambda0(double intensity, double pfa, double cluster_area) noexcept {
  return intensity * pfa * cluster_area;
}

namespace detail {

inline constexpr std::size_t kQuadStartNodes = 32;
inline constexpr std::size_t kQuadMaxNodes = 512;
inline constexpr double kQuadRelTol = 1e-6;

}  // namespace detail

/// lambda_1 = intensity * integral of P_d over the cluster rectangle.
///
/// Tensor-product Gauss-Legendre, doubled from 32 to 512 nodes per axis until
/// two successive estimates agree to 1e-6 relative. Both axes are split at the
/// target coordinate and at the saturation circle |x - X_t| = d0 so that every
/// panel sees a smooth integrand.
inline double lambda1(double intensity, const TargetParams& target,
                      const Rect& cluster, const SensingConfig& config) {
  const double pfa = config.local_pfa;
  if (target.power == 0.0) return lambda0(intensity, pfa, cluster.area());

  const double tx = target.location.x;
  const double ty = target.location.y;
  const double d0 = config.ref_distance;
  const auto xs = quad::segment_points(cluster.x0, cluster.x1,
                                       {tx - d0, tx, tx + d0});
  auto pd_at = [&](double x, double y) {
    return local_pd(amplitude(target, {x, y}, d0), config);
  };

  double previous = 0.0;
  for (std::size_t n = detail::kQuadStartNodes; n <= detail::kQuadMaxNodes;
       n *= 2) {
    const auto& rule = quad::gauss_legendre(n);
    auto inner = [&](double x) {
      std::vector<double> cuts{ty};
      const double u = x - tx;
      if (std::abs(u) < d0) {
        const double h = std::sqrt(d0 * d0 - u * u);
        cuts.push_back(ty - h);
        cuts.push_back(ty + h);
      }
      const auto ys = quad::segment_points(cluster.y0, cluster.y1, cuts);
      return quad::integrate_segments([&](double y) { return pd_at(x, y); },
                                      ys, rule);
    };
    const double value = quad::integrate_segments(inner, xs, rule);
    if (n > detail::kQuadStartNodes &&
        std::abs(value - previous) <= detail::kQuadRelTol * std::abs(value)) {
      return intensity * value;
    }
    previous = value;
  }
  std::ostringstream msg;
  msg << "lambda1 quadrature did not reach relative tolerance "
      << detail::kQuadRelTol << " at " << detail::kQuadMaxNodes
      << " nodes per axis (last estimate " << intensity * previous
      << ", cluster [" << cluster.x0 << ',' << cluster.x1 << "]x[" << cluster.y0
      << ',' << cluster.y1 << "])";
  throw NumericError(msg.str());
}

/// Expected detecting-sensor counts per cluster under both hypotheses.
struct ClusterIntensities {
  double lambda0 = 0.0;
  std::vector<double> lambda1;

  [[nodiscard]] std::size_t size() const noexcept { return lambda1.size(); }
};

/// Intensities for every cluster of `region`. Without a target lambda_1
/// collapses to lambda_0.
inline ClusterIntensities cluster_intensities(
    double intensity, const std::optional<TargetParams>& target,
    const RegionLayout& region, const SensingConfig& config) {
  ClusterIntensities out;
  out.lambda0 = lambda0(intensity, config.local_pfa, region.cluster_area());
  out.lambda1.resize(region.cluster_count(), out.lambda0);
  if (!target) return out;
  for (std::size_t m = 0; m < region.cluster_count(); ++m) {
    // quadrature error can leave lambda_1 a hair below lambda_0
    out.lambda1[m] = std::max(
        out.lambda0, lambda1(intensity, *target, region.cluster_rect(m), config));
  }
  return out;
}

}  // namespace wsnfuse
