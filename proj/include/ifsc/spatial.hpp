#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifsc/geometry.hpp"

namespace ifsc {

/// Uniform bucket grid over a point cloud. Cells are addressed by a linear id
/// over the occupied bounding box; the cell size is enlarged if that id would
/// not fit in 62 bits.
class SpatialGrid {
 public:
  SpatialGrid(const PointCloud& cloud, double cell) : cloud_(&cloud), dim_(cloud.dim()) {
    if (cloud.empty()) throw std::invalid_argument("SpatialGrid: empty cloud");
    if (!(cell > 0.0)) throw std::domain_error("SpatialGrid: cell size must be positive");
    lo_.fill(0.0);
    std::array<double, kMaxDim> hi{};
    for (std::size_t k = 0; k < dim_; ++k) {
      lo_[k] = std::numeric_limits<double>::infinity();
      hi[k] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      auto p = cloud[i];
      for (std::size_t k = 0; k < dim_; ++k) {
        lo_[k] = std::min(lo_[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    }
    while (true) {
      long double total = 1.0L;
      for (std::size_t k = 0; k < dim_; ++k) {
        counts_[k] = static_cast<std::int64_t>(std::floor((hi[k] - lo_[k]) / cell)) + 1;
        total *= static_cast<long double>(counts_[k]);
      }
      if (total < 4.0e18L) break;
      cell *= 2.0;
    }
    cell_ = cell;

    std::vector<std::uint64_t> ids(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) ids[i] = linear_id(cell_of(cloud[i]));
    order_.resize(cloud.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return ids[a] < ids[b]; });
    buckets_.reserve(cloud.size());
    for (std::size_t b = 0; b < order_.size();) {
      std::size_t e = b;
      while (e < order_.size() && ids[order_[e]] == ids[order_[b]]) ++e;
      buckets_.emplace(ids[order_[b]], std::make_pair(static_cast<std::uint32_t>(b),
                                                      static_cast<std::uint32_t>(e)));
      b = e;
    }
  }

  double cell() const { return cell_; }
  const PointCloud& cloud() const { return *cloud_; }

  /// Calls fn(index, squared_distance) for every point with squared distance <= r^2.
  template <typename Fn>
  void for_each_within(std::span<const double> q, double r, Fn&& fn) const {
    std::array<std::int64_t, kMaxDim> first{}, last{};
    for (std::size_t k = 0; k < dim_; ++k) {
      first[k] = std::max<std::int64_t>(0, coord_floor(q[k] - r, k));
      last[k] = std::min<std::int64_t>(counts_[k] - 1, coord_floor(q[k] + r, k));
      if (first[k] > last[k]) return;
    }
    const double r2 = r * r;
    std::array<std::int64_t, kMaxDim> c = first;
    while (true) {
      visit_cell(c, [&](std::uint32_t idx) {
        const double d2 = distance2(q, (*cloud_)[idx]);
        if (d2 <= r2) fn(idx, d2);
      });
      std::size_t k = 0;
      for (; k < dim_; ++k) {
        if (++c[k] <= last[k]) break;
        c[k] = first[k];
      }
      if (k == dim_) break;
    }
  }

  /// Exact nearest sample: (index, squared distance).
  std::pair<std::uint32_t, double> nearest(std::span<const double> q) const {
    std::array<std::int64_t, kMaxDim> qc{};
    for (std::size_t k = 0; k < dim_; ++k)
      qc[k] = std::clamp<std::int64_t>(coord_floor(q[k], k), 0, counts_[k] - 1);
    std::int64_t max_ring = 0;
    for (std::size_t k = 0; k < dim_; ++k)
      max_ring = std::max({max_ring, qc[k], counts_[k] - 1 - qc[k]});

    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_idx = 0;
    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
      for_each_ring_cell(qc, ring, [&](const std::array<std::int64_t, kMaxDim>& c) {
        visit_cell(c, [&](std::uint32_t idx) {
          const double d2 = distance2(q, (*cloud_)[idx]);
          if (d2 < best || (d2 == best && idx < best_idx)) {
            best = d2;
            best_idx = idx;
          }
        });
      });
      // Points in rings > ring are at least ring * cell away.
      const double bound = static_cast<double>(ring) * cell_;
      if (best <= bound * bound) break;
    }
    return {best_idx, best};
  }

 private:
  std::int64_t coord_floor(double x, std::size_t k) const {
    const double v = std::floor((x - lo_[k]) / cell_);
    if (v < -1e18) return std::numeric_limits<std::int64_t>::min() / 4;
    if (v > 1e18) return std::numeric_limits<std::int64_t>::max() / 4;
    return static_cast<std::int64_t>(v);
  }

  std::array<std::int64_t, kMaxDim> cell_of(std::span<const double> p) const {
    std::array<std::int64_t, kMaxDim> c{};
    for (std::size_t k = 0; k < dim_; ++k)
      c[k] = std::clamp<std::int64_t>(coord_floor(p[k], k), 0, counts_[k] - 1);
    return c;
  }

  std::uint64_t linear_id(const std::array<std::int64_t, kMaxDim>& c) const {
    std::uint64_t id = 0;
    for (std::size_t k = dim_; k-- > 0;)
      id = id * static_cast<std::uint64_t>(counts_[k]) + static_cast<std::uint64_t>(c[k]);
    return id;
  }

  template <typename Fn>
  void visit_cell(const std::array<std::int64_t, kMaxDim>& c, Fn&& fn) const {
    auto it = buckets_.find(linear_id(c));
    if (it == buckets_.end()) return;
    for (std::uint32_t j = it->second.first; j < it->second.second; ++j) fn(order_[j]);
  }

  // Cells at Chebyshev distance exactly `ring` from `center`, clipped to the grid.
  template <typename Fn>
  void for_each_ring_cell(const std::array<std::int64_t, kMaxDim>& center, std::int64_t ring,
                          Fn&& fn) const {
    std::array<std::int64_t, kMaxDim> first{}, last{};
    for (std::size_t k = 0; k < dim_; ++k) {
      first[k] = std::max<std::int64_t>(0, center[k] - ring);
      last[k] = std::min<std::int64_t>(counts_[k] - 1, center[k] + ring);
    }
    std::array<std::int64_t, kMaxDim> c = first;
    while (true) {
      bool on_shell = (ring == 0);
      for (std::size_t k = 0; k < dim_ && !on_shell; ++k)
        on_shell = (std::llabs(c[k] - center[k]) == ring);
      if (on_shell) {
        fn(c);
      } else {
        // Interior cell: jump across the interior along the first axis.
        const std::int64_t jump = center[0] + ring;
        if (jump <= last[0]) {
          c[0] = jump;
          continue;
        }
        c[0] = last[0];
      }
      std::size_t k = 0;
      for (; k < dim_; ++k) {
        if (++c[k] <= last[k]) break;
        c[k] = first[k];
      }
      if (k == dim_) break;
    }
  }

  const PointCloud* cloud_;
  std::size_t dim_;
  double cell_ = 1.0;
  std::array<double, kMaxDim> lo_{};
  std::array<std::int64_t, kMaxDim> counts_{};
  std::vector<std::uint32_t> order_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> buckets_;
};

/// Cell size giving roughly two to four points per occupied cell.
inline double nearest_cell_size(const PointCloud& cloud) {
  std::array<double, kMaxDim> lo{}, hi{};
  for (std::size_t k = 0; k < cloud.dim(); ++k) {
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t k = 0; k < cloud.dim(); ++k) {
      lo[k] = std::min(lo[k], cloud[i][k]);
      hi[k] = std::max(hi[k], cloud[i][k]);
    }
  double extent = 0.0;
  for (std::size_t k = 0; k < cloud.dim(); ++k) extent = std::max(extent, hi[k] - lo[k]);
  const double n = static_cast<double>(cloud.size());
  if (extent == 0.0 || n < 8) return std::max(extent, 1e-300) + 1.0;
  double cell = extent / n;
  std::unordered_map<std::uint64_t, char> seen;
  while (cell < extent) {
    seen.clear();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      std::uint64_t h = 1469598103934665603ull;
      for (std::size_t k = 0; k < cloud.dim(); ++k) {
        const auto c = static_cast<std::int64_t>(std::floor((cloud[i][k] - lo[k]) / cell));
        h = (h ^ static_cast<std::uint64_t>(c)) * 1099511628211ull;
      }
      seen.emplace(h, 0);
    }
    if (n / static_cast<double>(seen.size()) >= 2.0) break;
    cell *= 2.0;
  }
  return cell;
}

}  // namespace ifsc
