// Region layout, cluster grid and homogeneous Poisson deployment of sensors.
#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsnfuse/errors.hpp"
#include "wsnfuse/rng.hpp"

namespace wsnfuse {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-aligned rectangle [x0, x1) x [y0, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  [[nodiscard]] double area() const noexcept { return (x1 - x0) * (y1 - y0); }
  [[nodiscard]] Point centroid() const noexcept {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  }
};

/// Rectangular region of interest tiled by a rows x cols grid of identical
/// clusters. Cells are half-open on their top and right edges; the outer
/// top/right boundary of the region itself belongs to the last row/column.
class RegionLayout {
 public:
  RegionLayout() : RegionLayout(50.0, 50.0, 3, 3) {}

  RegionLayout(double width, double height, std::size_t grid_rows,
               std::size_t grid_cols)
      : width_(width), height_(height), rows_(grid_rows), cols_(grid_cols) {
    if (!(width > 0.0) || !(height > 0.0)) {
      throw std::invalid_argument("region width and height must be positive");
    }
    if (grid_rows == 0 || grid_cols == 0) {
      throw std::invalid_argument("cluster grid needs at least one cell");
    }
    ch_positions_.reserve(cluster_count());
    for (std::size_t m = 0; m < cluster_count(); ++m) {
      ch_positions_.push_back(cluster_rect(m).centroid());
    }
  }

  [[nodiscard]] double width() const noexcept { return width_; }
  [[nodiscard]] double height() const noexcept { return height_; }
  [[nodiscard]] std::size_t grid_rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t grid_cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t cluster_count() const noexcept {
    return rows_ * cols_;
  }
  [[nodiscard]] double area() const noexcept { return width_ * height_; }
  [[nodiscard]] double cell_width() const noexcept {
    return width_ / static_cast<double>(cols_);
  }
  [[nodiscard]] double cell_height() const noexcept {
    return height_ / static_cast<double>(rows_);
  }
  [[nodiscard]] double cluster_area() const noexcept {
    return cell_width() * cell_height();
  }

  [[nodiscard]] bool contains(const Point& p) const noexcept {
    return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_;
  }

  /// Geometry of cluster m (row-major).
  [[nodiscard]] Rect cluster_rect(std::size_t m) const {
    if (m >= cluster_count()) {
      throw std::out_of_range("cluster index " + std::to_string(m) +
                              " out of range");
    }
    const auto row = static_cast<double>(m / cols_);
    const auto col = static_cast<double>(m % cols_);
    return {col * cell_width(), row * cell_height(),
            (col + 1.0) * cell_width(), (row + 1.0) * cell_height()};
  }

  /// Cluster-head positions; centroids unless overridden. Reporting only.
  [[nodiscard]] const std::vector<Point>& ch_positions() const noexcept {
    return ch_positions_;
  }
  void set_ch_positions(std::vector<Point> positions) {
    if (positions.size() != cluster_count()) {
      throw std::invalid_argument("one cluster-head position per cluster");
    }
    ch_positions_ = std::move(positions);
  }

 private:
  double width_;
  double height_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Point> ch_positions_;
};

/// Row-major index of the grid cell containing `p`.
inline std::size_t cluster_of(const Point& p, const RegionLayout& region) {
  if (!region.contains(p)) {
    throw OutOfRegionError("point (" + std::to_string(p.x) + ", " +
                           std::to_string(p.y) + ") lies outside the region");
  }
  auto index = [](double v, double cell, std::size_t n) {
    auto i = static_cast<std::size_t>(std::floor(v / cell));
    return i >= n ? n - 1 : i;
  };
  const std::size_t col = index(p.x, region.cell_width(), region.grid_cols());
  const std::size_t row = index(p.y, region.cell_height(), region.grid_rows());
  return row * region.grid_cols() + col;
}

/// One realization of sensor positions together with their cluster labels.
struct SensorField {
  std::vector<Point> positions;
  std::vector<std::size_t> cluster;  // parallel to positions
  RegionLayout region;

  [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }

  /// Number of sensors in each cluster.
  [[nodiscard]] std::vector<std::size_t> cluster_counts() const {
    std::vector<std::size_t> counts(region.cluster_count(), 0);
    for (auto m : cluster) ++counts[m];
    return counts;
  }
};

/// Homogeneous PPP over the region: N ~ Pois(intensity * area), then N
/// i.i.d. uniform positions.
inline SensorField sample_ppp(double intensity, const RegionLayout& region,
                              RandomStream& rng) {
  if (!(intensity >= 0.0)) {
    throw std::invalid_argument("PPP intensity must be non-negative");
  }
  SensorField field{{}, {}, region};
  const double mean = intensity * region.area();
  if (mean == 0.0) return field;
  std::poisson_distribution<long long> count_dist(mean);
  const auto n = static_cast<std::size_t>(count_dist(rng));
  std::uniform_real_distribution<double> ux(0.0, region.width());
  std::uniform_real_distribution<double> uy(0.0, region.height());
  field.positions.reserve(n);
  field.cluster.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng);
    const Point p{x, uy(rng)};
    field.positions.push_back(p);
    field.cluster.push_back(cluster_of(p, region));
  }
  return field;
}

}  // namespace wsnfuse
