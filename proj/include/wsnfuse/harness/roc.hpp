// Empirical ROC curves from paired statistic samples.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsnfuse/errors.hpp"
#include "wsnfuse/harness/config.hpp"

namespace wsnfuse {

struct RocPoint {
  double gamma = 0.0;
  double pfa = 0.0;
  double pd = 0.0;
  double pfa_se = 0.0;
  double pd_se = 0.0;

  bool operator==(const RocPoint&) const = default;
};

/// Points ordered by increasing threshold, so P_FA and P_D are non-increasing.
struct RocCurve {
  std::string rule;
  std::vector<RocPoint> points;

  bool operator==(const RocCurve&) const = default;
};

/// Binomial standard error of a frequency p over n trials.
inline double binomial_se(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Fraction of `sorted` strictly above gamma.
inline double exceedance(const std::vector<double>& sorted, double gamma) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), gamma);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

/// Threshold grid over the pooled samples. `points` > 0 gives an even grid on
/// [min - 3 sd, max + 3 sd]; `points` == 0 gives every distinct sample value
/// plus one value below the minimum, which traces the full empirical ROC.
inline std::vector<double> threshold_grid(const std::vector<double>& h0,
                                          const std::vector<double>& h1,
                                          std::size_t points) {
  std::vector<double> pooled(h0);
  pooled.insert(pooled.end(), h1.begin(), h1.end());
  if (pooled.empty()) throw std::invalid_argument("no samples to build a threshold grid");
  std::sort(pooled.begin(), pooled.end());
  const double lo = pooled.front();
  const double hi = pooled.back();
  if (points == 0) {
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    pooled.insert(pooled.begin(), lo - 1.0);
    return pooled;
  }
  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= static_cast<double>(pooled.size());
  double ss = 0.0;
  for (double v : pooled) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(pooled.size()));
  const double a = lo - 3.0 * sd;
  const double b = hi + 3.0 * sd;
  if (points == 1 || a == b) return {a};
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

/// Decides H1 when the statistic exceeds gamma.
inline RocCurve build_roc(std::string rule, std::vector<double> h0, std::vector<double> h1,
                          const std::vector<double>& thresholds) {
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  std::vector<double> grid(thresholds);
  std::sort(grid.begin(), grid.end());
  RocCurve curve{std::move(rule), {}};
  curve.points.reserve(grid.size());
  for (double g : grid) {
    const double pfa = exceedance(h0, g);
    const double pd = exceedance(h1, g);
    curve.points.push_back({g, pfa, pd, binomial_se(pfa, h0.size()), binomial_se(pd, h1.size())});
  }
  return curve;
}

inline RocCurve build_roc(std::string rule, const std::vector<double>& h0,
                          const std::vector<double>& h1, std::size_t threshold_points) {
  return build_roc(std::move(rule), h0, h1, threshold_grid(h0, h1, threshold_points));
}

/// P_D at a target P_FA, interpolating linearly between neighbouring points.
/// Where several points share the target P_FA the largest P_D is returned.
inline double pd_at_pfa(const RocCurve& curve, double pfa_target) {
  if (curve.points.empty()) throw std::invalid_argument("empty ROC curve");
  // (pfa, best pd) sorted by pfa
  std::map<double, double> best;
  for (const auto& p : curve.points) {
    auto [it, inserted] = best.emplace(p.pfa, p.pd);
    if (!inserted) it->second = std::max(it->second, p.pd);
  }
  const double lo = best.begin()->first;
  const double hi = best.rbegin()->first;
  if (pfa_target < lo || pfa_target > hi) {
    std::ostringstream msg;
    msg << "P_FA " << pfa_target << " lies outside the curve range [" << lo << ", " << hi
        << "]; refusing to extrapolate";
    throw std::out_of_range(msg.str());
  }
  const auto upper = best.lower_bound(pfa_target);
  if (upper->first == pfa_target) return upper->second;
  const auto lower = std::prev(upper);
  const double t = (pfa_target - lower->first) / (upper->first - lower->first);
  return lower->second + t * (upper->second - lower->second);
}

inline constexpr const char* kRocHeader = "rule,gamma,pfa,pd,pfa_se,pd_se";

inline void write_roc_csv(std::ostream& out, const std::vector<RocCurve>& curves) {
  out << kRocHeader << '\n';
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << c.rule << ',' << detail::format_double(p.gamma) << ','
          << detail::format_double(p.pfa) << ',' << detail::format_double(p.pd) << ','
          << detail::format_double(p.pfa_se) << ',' << detail::format_double(p.pd_se) << '\n';
    }
  }
}

/// Reads a ROC CSV back; curves keep the order in which rules first appear.
inline std::vector<RocCurve> read_roc_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kRocHeader) {
    throw ConfigError("ROC CSV: missing or unexpected header");
  }
  std::vector<RocCurve> curves;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw ConfigError("ROC CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    RocPoint p;
    try {
      p = {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
           std::stod(cells[4]), std::stod(cells[5])};
    } catch (const std::exception&) {
      throw ConfigError("ROC CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (curves.empty() || curves.back().rule != cells[0]) {
      curves.push_back({cells[0], {}});
    }
    curves.back().points.push_back(p);
  }
  return curves;
}

}  // namespace wsnfuse
