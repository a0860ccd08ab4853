#pragma once

// Seeded generators and independent oracles shared by the unit tests and the
// acceptance runner.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ifsc/geometry.hpp"
#include "ifsc/ifs.hpp"

namespace ifsc::testkit {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Point random_point(Rng& rng, std::size_t dim, double lo = -1.0, double hi = 1.0) {
  Point p(dim);
  for (std::size_t k = 0; k < dim; ++k) p[k] = uniform(rng, lo, hi);
  return p;
}

/// Random walk with `n` steps of length in [0.05, 0.3].
inline Polyline random_walk(Rng& rng, std::size_t n, std::size_t dim = 2) {
  Polyline l;
  l.vertices.push_back(random_point(rng, dim));
  while (l.vertices.size() < n + 1) {
    Point dir = random_point(rng, dim);
    const double len = dir.norm();
    if (len < 1e-3) continue;
    l.vertices.push_back(l.vertices.back() + (uniform(rng, 0.05, 0.3) / len) * dir);
  }
  return l;
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, std::size_t dim = 2, double pitch = 1.0) {
  PointCloud c(dim, pitch);
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_point(rng, dim));
  return c;
}

/// Random affine map rescaled so its spectral norm is `lambda`.
inline MapSpec random_affine(Rng& rng, std::size_t dim, double lambda) {
  std::vector<double> m(dim * dim), b(dim);
  for (double& v : m) v = uniform(rng, -1.0, 1.0);
  for (double& v : b) v = uniform(rng, -0.5, 0.5);
  const double s = spectral_norm(m, dim);
  for (double& v : m) v *= lambda / s;
  return affine_map(dim, m, b);
}

/// Rotation by theta followed by a translation, in the plane.
inline MapSpec rigid_motion(double theta, double tx, double ty) {
  return affine_map(2, {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)}, {tx, ty});
}

inline Polyline apply(const MapSpec& f, const Polyline& l) {
  Polyline out;
  for (const Point& v : l.vertices) out.vertices.push_back(eval_map(f, v));
  return out;
}

inline PointCloud apply(const MapSpec& f, const PointCloud& c, double pitch) {
  PointCloud out(c.dim(), pitch);
  for (std::size_t i = 0; i < c.size(); ++i) out.push_back(eval_map(f, c.point(i)));
  return out;
}

/// Uniform sample of the unit circle with chord spacing below delta.
inline PointCloud circle_cloud(double delta) {
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / delta)) + 1;
  PointCloud c(2, delta);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c.push_back(Point{std::cos(t), std::sin(t)});
  }
  return c;
}

// Arc length of x -> sqrt(x) sin(1/x) over [a, 1], integrated with
// Gauss-Kronrod between consecutive zeros of sin(1/x).
inline double needle_arc_length(double a) {
  auto speed = [](double x) {
    const double s = std::sqrt(x);
    const double d = std::sin(1.0 / x) / (2.0 * s) - std::cos(1.0 / x) / (x * s);
    return std::sqrt(1.0 + d * d);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  std::vector<double> cuts{1.0};
  for (long k = 1;; ++k) {
    const double z = 1.0 / (static_cast<double>(k) * std::numbers::pi);
    if (z >= 1.0) continue;
    if (z <= a) break;
    cuts.push_back(z);
  }
  cuts.push_back(a);
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) total += GK::integrate(speed, cuts[i], cuts[i - 1], 8, 1e-12);
  return total;
}

/// Dense arc-length stepping of the graph over [a, 1] (explicit Euler in arc
/// length, step delta), used as a brute-force cloud.
inline PointCloud dense_needle_window(double a, double delta) {
  PointCloud c(2, delta);
  double x = a;
  while (x < 1.0) {
    c.push_back(Point{x, needle_profile(x)});
    const double d = needle_profile_derivative(x);
    x += 0.5 * delta / std::sqrt(1.0 + d * d);
  }
  c.push_back(Point{1.0, needle_profile(1.0)});
  return c;
}

}  // namespace ifsc::testkit
