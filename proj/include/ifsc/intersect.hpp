#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifsc/geometry.hpp"

namespace ifsc {

struct IntersectionResult {
  bool intersects = false;
  /// Indices of two non-adjacent segments (segment i joins vertices i and i+1).
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

/// Squared distance between segments [p0,p1] and [q0,q1] in any dimension.
inline double segment_distance2(std::span<const double> p0, std::span<const double> p1,
                                std::span<const double> q0, std::span<const double> q1) {
  const std::size_t n = p0.size();
  double d1d1 = 0, d2d2 = 0, d1d2 = 0, d1r = 0, d2r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = p1[i] - p0[i];
    const double d2 = q1[i] - q0[i];
    const double r = p0[i] - q0[i];
    d1d1 += d1 * d1;
    d2d2 += d2 * d2;
    d1d2 += d1 * d2;
    d1r += d1 * r;
    d2r += d2 * r;
  }
  double s = 0.0, t = 0.0;
  const double denom = d1d1 * d2d2 - d1d2 * d1d2;
  if (denom > 0.0) s = std::clamp((d1d2 * d2r - d1r * d2d2) / denom, 0.0, 1.0);
  t = d2d2 > 0.0 ? (d1d2 * s + d2r) / d2d2 : 0.0;
  if (t < 0.0) {
    t = 0.0;
    s = d1d1 > 0.0 ? std::clamp(-d1r / d1d1, 0.0, 1.0) : 0.0;
  } else if (t > 1.0) {
    t = 1.0;
    s = d1d1 > 0.0 ? std::clamp((d1d2 - d1r) / d1d1, 0.0, 1.0) : 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = p0[i] + s * (p1[i] - p0[i]);
    const double b = q0[i] + t * (q1[i] - q0[i]);
    acc += (a - b) * (a - b);
  }
  return acc;
}

namespace detail {

inline double orient(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) &&
         std::min(a[1], b[1]) <= p[1] && p[1] <= std::max(a[1], b[1]);
}

/// Closed planar segments share at least one point.
inline bool segments_touch_2d(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline bool adjacent(std::size_t i, std::size_t j, std::size_t segs, bool closed) {
  const std::size_t lo = std::min(i, j), hi = std::max(i, j);
  if (hi - lo <= 1) return true;
  return closed && lo == 0 && hi == segs - 1;
}

inline bool segments_conflict(const Polyline& l, std::size_t i, std::size_t j, double tol) {
  const auto& v = l.vertices;
  const std::size_t n = v.size();
  const Point& a = v[i];
  const Point& b = v[(i + 1) % n];
  const Point& c = v[j];
  const Point& d = v[(j + 1) % n];
  if (l.dim() == 2 && segments_touch_2d(a, b, c, d)) return true;
  // the closest-point formula is inexact even for a shared endpoint
  if (a == c || a == d || b == c || b == d) return true;
  return segment_distance2(a.coords(), b.coords(), c.coords(), d.coords()) <= tol * tol;
}

/// All-pairs reference check.
inline IntersectionResult self_intersects_brute(const Polyline& l, double tol) {
  const std::size_t segs = l.closed ? l.vertices.size() : l.vertices.size() - 1;
  for (std::size_t i = 0; i < segs; ++i)
    for (std::size_t j = i + 2; j < segs; ++j) {
      if (adjacent(i, j, segs, l.closed)) continue;
      if (segments_conflict(l, i, j, tol)) return {true, std::make_pair(i, j)};
    }
  return {};
}

/// Non-consecutive vertices that coincide exactly; sweep orderings break down there.
inline IntersectionResult duplicate_vertex_check(const Polyline& l) {
  const auto& v = l.vertices;
  const std::size_t segs = l.closed ? v.size() : v.size() - 1;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  auto key = [](const Point& p) {
    std::uint64_t h = 1469598103934665603ull;
    for (double c : p.coords()) {
      const double z = (c == 0.0) ? 0.0 : c;  // fold -0.0
      std::uint64_t bits;
      std::memcpy(&bits, &z, sizeof bits);
      h = (h ^ bits) * 1099511628211ull;
    }
    return h;
  };
  auto segments_at = [&](std::size_t vi) {
    std::vector<std::size_t> s;
    if (vi < segs) s.push_back(vi);
    if (vi > 0) s.push_back(vi - 1);
    else if (l.closed) s.push_back(segs - 1);
    return s;
  };
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto& bucket = seen[key(v[i])];
    for (std::size_t j : bucket) {
      if (!(v[j] == v[i])) continue;
      for (std::size_t s : segments_at(j))
        for (std::size_t t : segments_at(i))
          if (!adjacent(s, t, segs, l.closed))
            return {true, std::make_pair(std::min(s, t), std::max(s, t))};
    }
    bucket.push_back(i);
  }
  return {};
}

/// Shamos-Hoey sweep over planar segments. Reports the first conflicting pair of
/// sweep-neighbours; with tol > 0 near misses are tested between sweep-neighbours.
inline IntersectionResult self_intersects_sweep(const Polyline& l, double tol) {
  if (auto dup = duplicate_vertex_check(l); dup.intersects) return dup;
  const auto& v = l.vertices;
  const std::size_t nv = v.size();
  const std::size_t segs = l.closed ? nv : nv - 1;

  struct Seg {
    Point lo, hi;
  };
  auto lex_less = [](const Point& a, const Point& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  };
  std::vector<Seg> s(segs);
  for (std::size_t i = 0; i < segs; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % nv];
    s[i] = lex_less(a, b) ? Seg{a, b} : Seg{b, a};
  }

  struct Event {
    double x, y;
    int type;  // 0 = remove, 1 = insert
    std::size_t seg;
  };
  std::vector<Event> events;
  events.reserve(2 * segs);
  for (std::size_t i = 0; i < segs; ++i) {
    events.push_back({s[i].lo[0], s[i].lo[1], 1, i});
    events.push_back({s[i].hi[0], s[i].hi[1], 0, i});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    if (a.type != b.type) return a.type < b.type;
    return a.seg < b.seg;
  });

  double sweep_x = 0.0, sweep_y = 0.0;
  auto y_at = [&](std::size_t i) {
    const Seg& g = s[i];
    if (g.hi[0] == g.lo[0]) return std::clamp(sweep_y, g.lo[1], g.hi[1]);
    if (sweep_x <= g.lo[0]) return g.lo[1];
    if (sweep_x >= g.hi[0]) return g.hi[1];
    const double t = (sweep_x - g.lo[0]) / (g.hi[0] - g.lo[0]);
    return g.lo[1] + t * (g.hi[1] - g.lo[1]);
  };
  auto slope = [&](std::size_t i) {
    const Seg& g = s[i];
    if (g.hi[0] == g.lo[0]) return std::numeric_limits<double>::infinity();
    return (g.hi[1] - g.lo[1]) / (g.hi[0] - g.lo[0]);
  };
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (a == b) return false;
    const double ya = y_at(a), yb = y_at(b);
    if (ya != yb) return ya < yb;
    const double sa = slope(a), sb = slope(b);
    if (sa != sb) return sa < sb;
    return a < b;
  };
  std::set<std::size_t, decltype(cmp)> status(cmp);
  std::vector<std::set<std::size_t, decltype(cmp)>::iterator> where(segs, status.end());

  auto check = [&](std::size_t a, std::size_t b) -> std::optional<IntersectionResult> {
    if (adjacent(a, b, segs, l.closed)) return std::nullopt;
    if (segments_conflict(l, a, b, tol))
      return IntersectionResult{true, std::make_pair(std::min(a, b), std::max(a, b))};
    return std::nullopt;
  };

  for (const Event& e : events) {
    sweep_x = e.x;
    sweep_y = e.y;
    if (e.type == 1) {
      auto [it, ok] = status.insert(e.seg);
      where[e.seg] = it;
      if (it != status.begin()) {
        if (auto r = check(*std::prev(it), e.seg)) return *r;
      }
      if (auto nx = std::next(it); nx != status.end()) {
        if (auto r = check(*nx, e.seg)) return *r;
      }
    } else {
      auto it = where[e.seg];
      if (it == status.end()) continue;
      auto nx = std::next(it);
      if (it != status.begin() && nx != status.end()) {
        if (auto r = check(*std::prev(it), *nx)) return *r;
      }
      status.erase(it);
      where[e.seg] = status.end();
    }
  }
  return {};
}

/// Sort-and-prune on the first coordinate; used for large non-planar polylines.
inline IntersectionResult self_intersects_prune(const Polyline& l, double tol) {
  const auto& v = l.vertices;
  const std::size_t nv = v.size();
  const std::size_t segs = l.closed ? nv : nv - 1;
  std::vector<std::size_t> order(segs);
  std::vector<std::pair<double, double>> span(segs);
  for (std::size_t i = 0; i < segs; ++i) {
    const double a = v[i][0], b = v[(i + 1) % nv][0];
    span[i] = {std::min(a, b) - tol, std::max(a, b) + tol};
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return span[a].first < span[b].first; });
  for (std::size_t p = 0; p < segs; ++p) {
    const std::size_t i = order[p];
    for (std::size_t q = p + 1; q < segs && span[order[q]].first <= span[i].second; ++q) {
      const std::size_t j = order[q];
      if (adjacent(i, j, segs, l.closed)) continue;
      if (segments_conflict(l, i, j, tol))
        return {true, std::make_pair(std::min(i, j), std::max(i, j))};
    }
  }
  return {};
}

}  // namespace detail

/// Default tolerance: 1e-12 times the bounding-box diameter.
inline double default_intersection_tol(const Polyline& l) {
  Point lo = l.vertices.front(), hi = l.vertices.front();
  for (const Point& p : l.vertices)
    for (std::size_t i = 0; i < p.dim(); ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  return 1e-12 * distance(lo, hi);
}

/// True iff two non-adjacent segments pass within `tol` of each other.
inline IntersectionResult self_intersects(const Polyline& l, double tol) {
  l.validate();
  if (!(tol >= 0.0)) throw std::domain_error("self_intersects: tol must be >= 0");
  if (l.vertices.size() <= 10000) return detail::self_intersects_brute(l, tol);
  if (l.dim() == 2) return detail::self_intersects_sweep(l, tol);
  return detail::self_intersects_prune(l, tol);
}

}  // namespace ifsc
