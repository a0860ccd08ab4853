#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ifsc/geometry.hpp"
#include "ifsc/spatial.hpp"

namespace ifsc {

// ---------------------------------------------------------------------------
// Hausdorff distance

struct HausdorffResult {
  double value = 0.0;
  /// Sample realising the larger one-sided distance.
  Point witness;
  /// True when the witness belongs to the first argument.
  bool witness_in_first = true;
};

namespace detail {

inline void require_compatible(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch between clouds");
  if (a.empty() || b.empty()) throw std::invalid_argument("clouds must be nonempty");
}

// sup_{a in from} d(a, to), with the maximising index.
inline std::pair<double, std::size_t> directed_hausdorff(const PointCloud& from,
                                                         const PointCloud& to) {
  const SpatialGrid grid(to, nearest_cell_size(to));
  double worst = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const double d2 = grid.nearest(from[i]).second;
    if (d2 > worst) {
      worst = d2;
      arg = i;
    }
  }
  return {std::sqrt(worst), arg};
}

}  // namespace detail

inline HausdorffResult hausdorff_with_witness(const PointCloud& a, const PointCloud& b) {
  detail::require_compatible(a, b);
  const auto [dab, ia] = detail::directed_hausdorff(a, b);
  const auto [dba, ib] = detail::directed_hausdorff(b, a);
  if (dab >= dba) return {dab, a.point(ia), true};
  return {dba, b.point(ib), false};
}

inline double hausdorff(const PointCloud& a, const PointCloud& b) {
  return hausdorff_with_witness(a, b).value;
}

/// Distance from p to the nearest sample of `cloud`.
inline double distance_to_cloud(const PointCloud& cloud, const Point& p) {
  if (cloud.empty()) throw std::invalid_argument("distance_to_cloud: empty cloud");
  if (p.dim() != cloud.dim()) throw std::invalid_argument("dimension mismatch");
  const SpatialGrid grid(cloud, nearest_cell_size(cloud));
  return std::sqrt(grid.nearest(p.coords()).second);
}

// ---------------------------------------------------------------------------
// epsilon-graphs

/// Undirected graph on cloud indices with an edge for every pair at distance < epsilon.
struct EpsGraph {
  double epsilon = 0.0;
  std::size_t node_count = 0;
  std::vector<std::size_t> offsets;  // CSR, size node_count + 1
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;

  std::size_t edge_count() const { return targets.size() / 2; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {targets.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const double> neighbor_weights(std::size_t i) const {
    return {weights.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

inline EpsGraph eps_graph(const PointCloud& a, double epsilon) {
  if (!(epsilon > 0.0)) throw std::domain_error("eps_graph: epsilon must be positive");
  if (a.empty()) throw std::invalid_argument("eps_graph: empty cloud");
  const SpatialGrid grid(a, epsilon);
  const double eps2 = epsilon * epsilon;
  EpsGraph g;
  g.epsilon = epsilon;
  g.node_count = a.size();
  g.offsets.assign(a.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<std::pair<std::uint32_t, double>> nb;
    grid.for_each_within(a[i], epsilon, [&](std::uint32_t j, double d2) {
      if (j != i && d2 < eps2 && d2 > 0.0) nb.emplace_back(j, std::sqrt(d2));
    });
    std::sort(nb.begin(), nb.end());
    for (const auto& [j, w] : nb) {
      g.targets.push_back(j);
      g.weights.push_back(w);
    }
    g.offsets[i + 1] = g.targets.size();
  }
  return g;
}

// ---------------------------------------------------------------------------
// epsilon-chain distance

/// nullopt encodes "Disconnected": no epsilon-chain joins the endpoints.
using ChainValue = std::optional<double>;

struct ChainQuery {
  ChainValue value;
  std::size_t source = 0;
  std::size_t target = 0;
  /// epsilon < 3 * pitch: the cloud may under-approximate connectivity.
  bool under_resolved = false;
};

namespace detail {

inline std::size_t snap(const SpatialGrid& grid, const Point& p, double tol, const char* which) {
  const auto [idx, d2] = grid.nearest(p.coords());
  if (std::sqrt(d2) > tol)
    throw std::invalid_argument(std::string("chain_distance: endpoint ") + which +
                                " is farther than the cloud pitch from every sample");
  return idx;
}

/// Dijkstra over the implicit epsilon-graph; neighbours come from the grid.
inline ChainValue shortest_chain(const PointCloud& a, const SpatialGrid& grid, std::size_t s,
                                 std::size_t t, double epsilon) {
  if (s == t) return 0.0;
  const double eps2 = epsilon * epsilon;
  std::vector<double> dist(a.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[s] = 0.0;
  heap.emplace(0.0, static_cast<std::uint32_t>(s));
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[u]) continue;
    if (u == t) return du;
    grid.for_each_within(a[u], epsilon, [&](std::uint32_t v, double d2) {
      if (d2 >= eps2 || v == u) return;
      const double nd = du + std::sqrt(d2);
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    });
  }
  return std::nullopt;
}

}  // namespace detail

inline ChainQuery chain_query(const PointCloud& a, const Point& x, const Point& y,
                              double epsilon) {
  if (!(epsilon > 0.0)) throw std::domain_error("chain_distance: epsilon must be positive");
  if (a.empty()) throw std::invalid_argument("chain_distance: empty cloud");
  if (x.dim() != a.dim() || y.dim() != a.dim())
    throw std::invalid_argument("chain_distance: dimension mismatch");
  const SpatialGrid grid(a, epsilon);
  ChainQuery q;
  q.source = detail::snap(grid, x, a.pitch(), "x");
  q.target = detail::snap(grid, y, a.pitch(), "y");
  q.under_resolved = epsilon < 3.0 * a.pitch();
  q.value = detail::shortest_chain(a, grid, q.source, q.target, epsilon);
  return q;
}

/// Infimal length of epsilon-chains from x to y inside the cloud (endpoints
/// snapped to the nearest sample within the pitch).
inline ChainValue chain_distance(const PointCloud& a, const Point& x, const Point& y,
                                 double epsilon) {
  return chain_query(a, x, y, epsilon).value;
}

// ---------------------------------------------------------------------------
// Profiles over a decreasing epsilon schedule

enum class VerdictKind { diverges, converges, inconclusive };

inline const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::diverges: return "diverges";
    case VerdictKind::converges: return "converges";
    case VerdictKind::inconclusive: return "inconclusive";
  }
  return "?";
}

struct ProfileVerdict {
  VerdictKind kind = VerdictKind::inconclusive;
  double slope = 0.0;  // diverges
  double limit = 0.0;  // converges
  std::string note;
};

struct ProfileEntry {
  double epsilon;
  ChainValue value;
  double pitch;
};

struct ChainMetricProfile {
  std::vector<ProfileEntry> entries;
  Point x, y;
  ProfileVerdict verdict;
};

inline constexpr double kDivergenceSlope = -0.15;
inline constexpr double kConvergenceStep = 0.01;

/// Least-squares slope of log(value) against log(epsilon).
inline double log_log_slope(std::span<const ProfileEntry> entries) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(entries.size());
  for (const auto& e : entries) {
    const double lx = std::log(e.epsilon), ly = std::log(*e.value);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline ProfileVerdict classify_profile(std::span<const ProfileEntry> entries) {
  ProfileVerdict v;
  for (const auto& e : entries)
    if (!e.value) {
      v.note = "disconnected at epsilon=" + std::to_string(e.epsilon);
      return v;
    }
  const std::size_t k_max = entries.size() - 1;
  const std::size_t window = std::max<std::size_t>(2, (k_max + 1) / 2);
  auto tail = entries.subspan(entries.size() - std::min(window, entries.size()));
  bool increasing = true;
  for (std::size_t i = 1; i < tail.size(); ++i) increasing &= (*tail[i].value > *tail[i - 1].value);
  v.slope = log_log_slope(tail);
  if (v.slope <= kDivergenceSlope && increasing) {
    v.kind = VerdictKind::diverges;
    return v;
  }
  if (entries.size() >= 3) {
    const double a = *entries[entries.size() - 3].value;
    const double b = *entries[entries.size() - 2].value;
    const double c = *entries[entries.size() - 1].value;
    const auto close = [](double p, double q) {
      return std::abs(q - p) < kConvergenceStep * std::max(std::abs(p), std::abs(q));
    };
    if (close(a, b) && close(b, c)) {
      v.kind = VerdictKind::converges;
      v.limit = c;
      return v;
    }
  }
  v.note = "no divergence trend and no plateau over the schedule";
  return v;
}

/// Chain distances for epsilon_k = eps0 * 2^-k, k = 0..k_max, each computed on a
/// fresh resampling of the model at pitch epsilon_k / 10.
inline ChainMetricProfile chain_profile(const ContinuumModel& m, const Point& x, const Point& y,
                                        double eps0, int k_max) {
  if (!(eps0 > 0.0)) throw std::domain_error("chain_profile: eps0 must be positive");
  if (k_max < 3) throw std::domain_error("chain_profile: k_max must be >= 3");
  ChainMetricProfile prof;
  prof.x = x;
  prof.y = y;
  for (int k = 0; k <= k_max; ++k) {
    const double eps = std::ldexp(eps0, -k);
    const double delta = eps / 10.0;
    const PointCloud cloud = m.refine(delta);
    prof.entries.push_back({eps, chain_distance(cloud, x, y, eps), delta});
  }
  prof.verdict = classify_profile(prof.entries);
  return prof;
}

// ---------------------------------------------------------------------------

namespace detail {

struct CoordHash {
  std::size_t operator()(const std::vector<double>& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (double c : v) {
      const double z = (c == 0.0) ? 0.0 : c;
      std::uint64_t bits;
      std::memcpy(&bits, &z, sizeof bits);
      h = (h ^ bits) * 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Exact point-set inclusion.
inline bool is_subset(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim()) return false;
  std::unordered_set<std::vector<double>, detail::CoordHash> members;
  members.reserve(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) members.emplace(b[i].begin(), b[i].end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!members.contains(std::vector<double>(a[i].begin(), a[i].end()))) return false;
  return true;
}

/// A subset of B => chain distance in A >= chain distance in B (Disconnected = +inf).
inline bool monotonicity_check(const PointCloud& a, const PointCloud& b, const Point& x,
                               const Point& y, double epsilon) {
  if (!is_subset(a, b)) throw std::invalid_argument("monotonicity_check: A is not a subset of B");
  const ChainValue da = chain_distance(a, x, y, epsilon);
  const ChainValue db = chain_distance(b, x, y, epsilon);
  if (!da) return true;
  if (!db) return false;
  return *da >= *db - 1e-12;
}

}  // namespace ifsc
