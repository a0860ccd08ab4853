#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ifsc/geometry.hpp"
#include "ifsc/intersect.hpp"

namespace ifsc {

// ---------------------------------------------------------------------------
// Needle embedding h = h2 o h1

/// (x1, x2, ..., xn) -> (x1, x1/s x2, ..., x1/s xn).
inline Point needle_h1(const Point& x, double sharpness = 100.0) {
  if (x.dim() < 2) throw std::invalid_argument("needle_h1 needs dimension >= 2");
  Point y = x;
  for (std::size_t i = 1; i < x.dim(); ++i) y[i] = x[0] / sharpness * x[i];
  return y;
}

/// (x1, x2, ...) -> (x1, sqrt(x1) sin(1/x1) + x2, ...), with the shift taken as 0 at x1 = 0.
inline Point needle_h2(const Point& x) {
  if (x.dim() < 2) throw std::invalid_argument("needle_h2 needs dimension >= 2");
  if (x[0] < 0.0) throw std::domain_error("needle_h2: first coordinate must be >= 0");
  Point y = x;
  y[1] = needle_profile(x[0]) + x[1];
  return y;
}

inline Point needle_embed(const Point& x, double sharpness = 100.0) {
  return needle_h2(needle_h1(x, sharpness));
}

/// Default base continuum: the segment [0,1] x {0}^(n-1), with p at the origin
/// and q = (1, 0, ..., 0).
inline ContinuumModel default_needle_base(std::size_t dim = 2) {
  Point p(dim), q(dim);
  q[0] = 1.0;
  ContinuumModel m;
  m.dim = dim;
  m.pieces.push_back({"base", Polyline{{p, q}}});
  m.marked.emplace("p", p);
  m.marked.emplace("q", q);
  return m;
}

struct NeedleModel {
  ContinuumModel base;
  double sharpness = 100.0;
  ContinuumModel image;
  std::size_t dim = 2;
};

namespace detail {

// Pitch slack below which the graph of sqrt(x) sin(1/x) is handled as a dense core.
inline double needle_core_cell(double delta) { return delta / std::numbers::sqrt2; }
inline double needle_core_end(double delta) {
  return std::sqrt(needle_core_cell(delta) / (3.0 * std::numbers::pi));
}

/// Samples of the graph over (0, t_end] forming a net of the dense core: for
/// every column/row cell of size `cell` that the graph meets, one exact graph
/// point in that cell. Assumes three half-periods fit in a column.
inline std::vector<Point> needle_core_net(double t_end, double cell, std::size_t dim) {
  std::vector<Point> out;
  const double pi = std::numbers::pi;
  auto lift = [&](double t) {
    Point p(dim);
    p[0] = t;
    p[1] = needle_profile(t);
    return p;
  };
  const auto columns = static_cast<std::size_t>(std::ceil(t_end / cell));
  for (std::size_t j = columns; j-- > 0;) {
    const double xb = std::min(static_cast<double>(j + 1) * cell, t_end);
    const double ub = 1.0 / xb;
    const double m0 = std::floor((ub - pi / 2) / pi) + 1.0;
    const double e1 = 1.0 / (pi / 2 + m0 * pi);
    const double e2 = 1.0 / (pi / 2 + (m0 + 1) * pi);
    const double e3 = 1.0 / (pi / 2 + (m0 + 2) * pi);
    const std::pair<double, double> branches[3] = {{e1, xb}, {e2, e1}, {e3, e2}};
    const auto rows = static_cast<long>(std::ceil(std::sqrt(xb) / cell)) + 1;
    for (long k = -rows; k <= rows; ++k) {
      const double y = static_cast<double>(k) * cell;
      for (const auto& [lo0, hi0] : branches) {
        double lo = lo0, hi = hi0;
        double flo = needle_profile(lo) - y, fhi = needle_profile(hi) - y;
        if (flo * fhi > 0.0) continue;
        for (int it = 0; it < 80 && hi - lo > 1e-19; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = needle_profile(mid) - y;
          if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        out.push_back(lift(0.5 * (lo + hi)));
        break;
      }
    }
  }
  out.push_back(Point(dim));
  return out;
}

/// Adaptive samples of u -> h(a + u (b - a)) on [u0, u1] with image sub-arcs <= 0.9 delta.
inline void sample_needle_segment(const Point& a, const Point& b, double u0, double u1,
                                  double sharpness, double delta, std::vector<Point>& out) {
  const std::size_t n = a.dim();
  const Point dir = b - a;
  auto at = [&](double u) {
    Point x = a;
    for (std::size_t k = 0; k < n; ++k) x[k] += u * dir[k];
    return x;
  };
  // |d/du h(a + u dir)| from the Jacobian of h2 o h1.
  auto speed = [&](double u) {
    const Point x = at(u);
    const double x1 = x[0];
    double s2 = dir[0] * dir[0];
    const double gp = x1 > 0.0 ? needle_profile_derivative(x1) : 0.0;
    const double r1 = (gp + x[1] / sharpness) * dir[0] + x1 / sharpness * dir[1];
    s2 += r1 * r1;
    for (std::size_t i = 2; i < n; ++i) {
      const double ri = x[i] / sharpness * dir[0] + x1 / sharpness * dir[i];
      s2 += ri * ri;
    }
    return std::sqrt(s2);
  };
  const double target = 0.9 * delta;
  double u = u0;
  Point prev = needle_embed(at(u), sharpness);
  out.push_back(prev);
  double h = std::min(u1 - u0, target);
  while (u < u1) {
    h = std::min(h * 2.0, u1 - u);
    while (true) {
      const double arc = h / 6.0 * (speed(u) + 4.0 * speed(u + 0.5 * h) + speed(u + h));
      const Point next = needle_embed(at(u + h), sharpness);
      if ((arc <= target && distance(prev, next) <= delta) || h <= 1e-16) break;
      h *= (arc > 2.0 * target) ? std::max(0.1, 0.9 * target / arc) : 0.5;
    }
    u = (u1 - u <= h) ? u1 : u + h;
    prev = needle_embed(at(u), sharpness);
    out.push_back(prev);
  }
}

struct NeedleSamples {
  std::vector<std::vector<Point>> curves;  // one ordered run per base segment portion
  std::vector<Point> core;
};

inline NeedleSamples needle_samples(const ContinuumModel& base, double sharpness, double delta) {
  const double t_core = needle_core_end(delta);
  NeedleSamples s;
  for (const auto& [name, l] : base.pieces) {
    for (std::size_t i = 0; i + 1 < l.vertices.size(); ++i) {
      const Point& a = l.vertices[i];
      const Point& b = l.vertices[i + 1];
      // Portion of the segment with first coordinate >= t_core.
      double u0 = 0.0, u1 = 1.0;
      const double da = a[0] - t_core, db = b[0] - t_core;
      if (da < 0.0 && db < 0.0) continue;
      if (da < 0.0) u0 = da / (da - db);
      if (db < 0.0) u1 = da / (da - db);
      if (!(u1 > u0)) continue;
      std::vector<Point> run;
      sample_needle_segment(a, b, u0, u1, sharpness, delta, run);
      s.curves.push_back(std::move(run));
    }
  }
  s.core = needle_core_net(t_core, needle_core_cell(delta), base.dim);
  return s;
}

inline void check_needle_base(const ContinuumModel& base) {
  if (base.dim < 2) throw std::invalid_argument("needle base: dimension must be >= 2");
  auto pit = base.marked.find("p");
  if (pit == base.marked.end()) throw std::invalid_argument("needle base: marked point 'p' missing");
  if (!(pit->second == Point(base.dim)))
    throw std::invalid_argument("needle base: p must be the origin");
  if (!base.dust.empty()) throw std::invalid_argument("needle base: loose samples are not supported");
  bool has_p = false;
  const auto fmt = [](const Point& x) {
    std::string s = "(";
    for (std::size_t k = 0; k < x.dim(); ++k) s += (k ? ", " : "") + std::to_string(x[k]);
    return s + ")";
  };
  for (const auto& [name, l] : base.pieces) {
    l.validate();
    if (l.dim() != base.dim) throw std::invalid_argument("needle base: piece dimension mismatch");
    for (const Point& v : l.vertices) {
      if (v[0] < 0.0 || v[0] > 1.0)
        throw std::invalid_argument("needle base: sample " + fmt(v) + " outside [0,1] in x1");
      for (std::size_t k = 1; k < v.dim(); ++k)
        if (v[k] < -1.0 || v[k] > 1.0)
          throw std::invalid_argument("needle base: sample " + fmt(v) + " outside [-1,1]");
      if (v[0] == 0.0) {
        if (!(v == Point(base.dim)))
          throw std::invalid_argument("needle base: sample " + fmt(v) +
                                      " meets the hyperplane x1 = 0 away from p");
        has_p = true;
      }
    }
  }
  if (!has_p) throw std::invalid_argument("needle base: p is not a vertex of any piece");
}

}  // namespace detail

/// Point cloud of h(base) at pitch delta: adaptive samples where x1 >= t_core,
/// an exact-point net of the oscillating core below it, and the marked images.
inline PointCloud needle_image_cloud(const ContinuumModel& base, double sharpness, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("needle: delta must be positive");
  const auto s = detail::needle_samples(base, sharpness, delta);
  PointCloud cloud(base.dim, delta);
  for (const auto& run : s.curves)
    for (const Point& p : run) cloud.push_back(p);
  for (const Point& p : s.core) cloud.push_back(p);
  for (const auto& [label, p] : base.marked) cloud.push_back(needle_embed(p, sharpness));
  return cloud;
}

inline NeedleModel build_needle(const ContinuumModel& base, double sharpness, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("build_needle: delta must be positive");
  if (!(sharpness > 0.0)) throw std::domain_error("build_needle: sharpness must be positive");
  detail::check_needle_base(base);
  NeedleModel nm{base, sharpness, {}, base.dim};
  ContinuumModel& img = nm.image;
  img.dim = base.dim;
  auto s = detail::needle_samples(base, sharpness, delta);
  std::size_t run_index = 0;
  for (auto& run : s.curves) {
    Polyline l;
    for (Point& p : run)
      if (l.vertices.empty() || !(l.vertices.back() == p)) l.vertices.push_back(std::move(p));
    if (l.vertices.size() >= 2)
      img.pieces.push_back({"needle" + (run_index ? std::to_string(run_index) : ""), std::move(l)});
    ++run_index;
  }
  img.dust.push_back({"core", std::move(s.core)});
  for (const auto& [label, p] : base.marked) img.marked.emplace("h(" + label + ")", needle_embed(p, sharpness));
  img.refiner = [base, sharpness](double d) { return needle_image_cloud(base, sharpness, d); };
  img.generator = {"needle", std::to_string(sharpness)};
  return nm;
}

inline NeedleModel build_default_needle(double delta, std::size_t dim = 2, double sharpness = 100.0) {
  NeedleModel nm = build_needle(default_needle_base(dim), sharpness, delta);
  return nm;
}

// ---------------------------------------------------------------------------
// Zigzag lines l_n and the space P

/// Safety factors placing l_n strictly inside its open polar wedge.
struct ZigzagGeometry {
  double outer = 0.9;       // outer tooth radius, fraction of 2^-n
  double inner = 0.1;       // inner tooth radius, fraction of 2^-n
  double half_width = 0.8;  // angular half-width, fraction of 2^-n-2
};

inline constexpr int kMaxZigzagIndex = 12;

/// p_n = polar(2^-n, 2^-n); p_0 = origin.
inline Point zigzag_pole(int n) {
  if (n == 0) return Point{0.0, 0.0};
  const double r = std::ldexp(1.0, -n);
  return polar_to_cartesian(r, r);
}

namespace detail {

struct ZigzagPlan {
  int n;
  long teeth;                 // odd
  std::vector<double> raise;  // per inner turnaround
};

inline Polyline zigzag_polyline(const ZigzagPlan& plan, const ZigzagGeometry& g) {
  const double R = std::ldexp(1.0, -plan.n);
  const double center = R;
  const double w = g.half_width * R / 4.0;
  const double r_in = g.inner * R, r_out = g.outer * R;
  const long M = plan.teeth;
  auto theta = [&](long k) {  // k = 0..M-1
    return M == 1 ? center - w : center - w + 2.0 * w * static_cast<double>(k) / static_cast<double>(M - 1);
  };
  Polyline l;
  l.vertices.reserve(static_cast<std::size_t>(2 * M + 2));
  l.vertices.push_back(zigzag_pole(0));
  for (long k = 0; k < M; ++k) {
    const double th = theta(k);
    // Even teeth run inward-to-outward; odd teeth return to a (possibly raised) inner turn.
    double inner_r = r_in;
    if (k % 2 == 1) inner_r = r_in + plan.raise[static_cast<std::size_t>(k / 2)];
    else if (k > 0) inner_r = r_in + plan.raise[static_cast<std::size_t>((k - 1) / 2)];
    if (k % 2 == 0) {
      l.vertices.push_back(polar_to_cartesian(inner_r, th));
      l.vertices.push_back(polar_to_cartesian(r_out, th));
    } else {
      l.vertices.push_back(polar_to_cartesian(r_out, th));
      l.vertices.push_back(polar_to_cartesian(inner_r, th));
    }
  }
  l.vertices.push_back(zigzag_pole(plan.n));
  return l;
}

inline double plan_length(const ZigzagPlan& plan, const ZigzagGeometry& g) {
  const Polyline l = zigzag_polyline(plan, g);
  double len = 0.0;
  for (std::size_t i = 1; i < l.vertices.size(); ++i)
    len += distance(l.vertices[i - 1].coords(), l.vertices[i].coords());
  return len;
}

}  // namespace detail

/// Simple broken line from p_0 to p_n of length 2^n inside the wedge
/// r < 2^-n, |theta - 2^-n| < 2^-n-2: radial teeth at increasing angles, with
/// inner turnarounds raised (bisection) to hit the length exactly.
inline Polyline build_zigzag_ln(int n, double length_tol = 1e-12, ZigzagGeometry g = {}) {
  if (n < 1) throw std::invalid_argument("build_zigzag_ln: n must be >= 1");
  if (n > kMaxZigzagIndex)
    throw std::invalid_argument("build_zigzag_ln: n > 12 refused (vertex count grows like 4^n)");
  if (!(length_tol > 0.0)) throw std::domain_error("build_zigzag_ln: length_tol must be positive");
  const double target = std::ldexp(1.0, n);
  const double R = std::ldexp(1.0, -n);
  const double cap = 0.9 * (g.outer - g.inner) * R;

  auto plan_for = [&](long teeth) {
    return detail::ZigzagPlan{n, teeth, std::vector<double>(static_cast<std::size_t>(teeth / 2), 0.0)};
  };
  // Smallest odd tooth count reaching the target length.
  long lo = 0, hi = 1;
  while (detail::plan_length(plan_for(2 * hi + 1), g) < target) hi *= 2;
  while (lo < hi) {
    const long mid = (lo + hi) / 2;
    if (detail::plan_length(plan_for(2 * mid + 1), g) >= target) hi = mid;
    else lo = mid + 1;
  }
  detail::ZigzagPlan plan = plan_for(2 * lo + 1);
  const std::size_t turns = plan.raise.size();

  auto apply = [&](double s) {
    for (std::size_t j = 0; j < turns; ++j)
      plan.raise[j] = std::clamp(s - static_cast<double>(j) * cap, 0.0, cap);
  };
  auto excess = [&](double s) {
    apply(s);
    return detail::plan_length(plan, g) - target;
  };
  double s_lo = 0.0, s_hi = std::min<double>(static_cast<double>(turns), 4.0) * cap;
  if (excess(s_lo) > target * length_tol) {
    if (excess(s_hi) > 0.0)
      throw std::logic_error("build_zigzag_ln: cannot trim the excess length");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (s_lo + s_hi);
      const double e = excess(mid);
      if (std::abs(e) <= target * length_tol * 0.5) {
        s_lo = s_hi = mid;
        break;
      }
      (e > 0.0 ? s_lo : s_hi) = mid;
    }
    apply(0.5 * (s_lo + s_hi));
  } else {
    apply(0.0);
  }
  return detail::zigzag_polyline(plan, g);
}

struct PModel {
  int n_max = 0;
  std::vector<Polyline> lines;  // lines[i] is l_{i+1}
  ContinuumModel model;
};

/// Pairwise check that l_i and l_j share only p_0, via the concatenation
/// reverse(l_i) + l_j, which is simple exactly when they do.
inline IntersectionResult lines_meet_beyond_origin(const Polyline& a, const Polyline& b) {
  Polyline joined;
  joined.vertices.assign(a.vertices.rbegin(), a.vertices.rend());
  joined.vertices.insert(joined.vertices.end(), b.vertices.begin() + 1, b.vertices.end());
  return self_intersects(joined, 0.0);
}

/// P truncated at n_max: the union of l_1 .. l_n_max with p_0 .. p_n_max marked.
inline PModel build_P(int n_max, double length_tol = 1e-12, bool verify = true) {
  if (n_max < 1 || n_max > kMaxZigzagIndex)
    throw std::invalid_argument("build_P: n_max must be in [1, 12]");
  PModel pm;
  pm.n_max = n_max;
  pm.model.dim = 2;
  pm.model.marked.emplace("p0", zigzag_pole(0));
  for (int n = 1; n <= n_max; ++n) {
    pm.lines.push_back(build_zigzag_ln(n, length_tol));
    pm.model.pieces.push_back({"l" + std::to_string(n), pm.lines.back()});
    pm.model.marked.emplace("p" + std::to_string(n), zigzag_pole(n));
  }
  if (verify) {
    for (int i = 0; i < n_max; ++i) {
      if (self_intersects(pm.lines[i], 0.0).intersects)
        throw std::logic_error("build_P: l" + std::to_string(i + 1) + " self-intersects");
      for (int j = i + 1; j < n_max; ++j)
        if (lines_meet_beyond_origin(pm.lines[i], pm.lines[j]).intersects)
          throw std::logic_error("build_P: l" + std::to_string(i + 1) + " and l" +
                                 std::to_string(j + 1) + " meet away from p0");
    }
  }
  pm.model.generator = {"P", std::to_string(n_max)};
  return pm;
}

}  // namespace ifsc
