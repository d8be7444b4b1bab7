// Gauss-Legendre rules and a breakpoint-aware 2-D rectangle integrator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

namespace wsnfuse::quad {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on P_n. Exact for polynomials of
/// degree 2n - 1.
inline GaussLegendreRule make_gauss_legendre(std::size_t n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double dn = static_cast<double>(n);
  // returns (P_n(x), P_n'(x))
  auto legendre = [n, dn](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double dk = static_cast<double>(k);
      const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, dn * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (dn + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Process-wide cache; rules are immutable once built.
inline const GaussLegendreRule& gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, GaussLegendreRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

/// Integral of f over [a, b] with the n-point rule.
template <typename F>
double integrate(F&& f, double a, double b, const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

/// Sorted, de-duplicated breakpoints restricted to [a, b], endpoints included.
inline std::vector<double> segment_points(double a, double b,
                                          std::vector<double> interior) {
  std::vector<double> pts{a};
  std::sort(interior.begin(), interior.end());
  for (double v : interior) {
    if (v > a && v < b && v - pts.back() > 1e-12 * (b - a)) pts.push_back(v);
  }
  if (b - pts.back() <= 1e-12 * (b - a)) pts.pop_back();
  pts.push_back(b);
  return pts;
}

/// Piecewise rule over the segments delimited by `pts`.
template <typename F>
double integrate_segments(F&& f, const std::vector<double>& pts,
                          const GaussLegendreRule& rule) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    sum += integrate(f, pts[i], pts[i + 1], rule);
  }
  return sum;
}

}  // namespace wsnfuse::quad
