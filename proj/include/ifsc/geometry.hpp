#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ifsc {

inline constexpr std::size_t kMaxDim = 8;

/// A point of R^n with 1 <= n <= kMaxDim, stored inline.
class Point {
 public:
  Point() = default;

  explicit Point(std::size_t dim) : dim_(check_dim(dim)) {}

  Point(std::initializer_list<double> coords) : dim_(check_dim(coords.size())) {
    std::copy(coords.begin(), coords.end(), c_.begin());
    check_finite();
  }

  explicit Point(std::span<const double> coords) : dim_(check_dim(coords.size())) {
    std::copy(coords.begin(), coords.end(), c_.begin());
    check_finite();
  }

  std::size_t dim() const { return dim_; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  std::span<const double> coords() const { return {c_.data(), dim_}; }
  std::span<double> coords() { return {c_.data(), dim_}; }

  double norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += c_[i] * c_[i];
    return std::sqrt(s);
  }

  bool is_finite() const {
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[i])) return false;
    return true;
  }

  friend bool operator==(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  friend Point operator+(Point a, const Point& b) {
    require_same_dim(a, b);
    for (std::size_t i = 0; i < a.dim_; ++i) a.c_[i] += b.c_[i];
    return a;
  }
  friend Point operator-(Point a, const Point& b) {
    require_same_dim(a, b);
    for (std::size_t i = 0; i < a.dim_; ++i) a.c_[i] -= b.c_[i];
    return a;
  }
  friend Point operator*(double s, Point a) {
    for (std::size_t i = 0; i < a.dim_; ++i) a.c_[i] *= s;
    return a;
  }

  static void require_same_dim(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_)
      throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim_) + " vs " +
                                  std::to_string(b.dim_));
  }

 private:
  static std::uint8_t check_dim(std::size_t d) {
    if (d < 1 || d > kMaxDim)
      throw std::invalid_argument("point dimension must be in [1, 8], got " + std::to_string(d));
    return static_cast<std::uint8_t>(d);
  }
  void check_finite() const {
    if (!is_finite()) throw std::domain_error("point has a non-finite coordinate");
  }

  std::array<double, kMaxDim> c_{};
  std::uint8_t dim_ = 2;
};

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(distance2(a, b));
}

inline double distance(const Point& a, const Point& b) {
  Point::require_same_dim(a, b);
  return distance(a.coords(), b.coords());
}

inline Point origin(std::size_t dim) { return Point(dim); }

/// (r, theta) -> (r cos theta, r sin theta).
inline Point polar_to_cartesian(double r, double theta) {
  if (!std::isfinite(r) || !std::isfinite(theta))
    throw std::domain_error("polar_to_cartesian: non-finite input");
  if (r < 0.0) throw std::domain_error("polar_to_cartesian: negative radius");
  return Point{r * std::cos(theta), r * std::sin(theta)};
}

/// Polar radius and angle (atan2 convention) of a planar point.
inline std::pair<double, double> cartesian_to_polar(const Point& p) {
  return {std::hypot(p[0], p[1]), std::atan2(p[1], p[0])};
}

// ---------------------------------------------------------------------------
// Point clouds

/// Finite sample of a set with a pitch guarantee: every point of the underlying
/// set is within `pitch` of some sample. Coordinates are stored flat.
class PointCloud {
 public:
  PointCloud(std::size_t dim, double pitch) : dim_(dim), pitch_(pitch) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("cloud dimension must be in [1, 8]");
    if (!(pitch > 0.0) || !std::isfinite(pitch))
      throw std::domain_error("cloud pitch must be positive and finite");
  }

  std::size_t dim() const { return dim_; }
  double pitch() const { return pitch_; }
  void set_pitch(double pitch) {
    if (!(pitch > 0.0)) throw std::domain_error("cloud pitch must be positive");
    pitch_ = pitch;
  }
  std::size_t size() const { return coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  Point point(std::size_t i) const { return Point((*this)[i]); }
  std::span<const double> flat() const { return coords_; }

  void push_back(const Point& p) {
    if (p.dim() != dim_) throw std::invalid_argument("cloud: dimension mismatch on insert");
    coords_.insert(coords_.end(), p.coords().begin(), p.coords().end());
  }
  void push_back(std::span<const double> p) {
    if (p.size() != dim_) throw std::invalid_argument("cloud: dimension mismatch on insert");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  void append(const PointCloud& other) {
    if (other.dim_ != dim_) throw std::invalid_argument("cloud: dimension mismatch on append");
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
  }
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

 private:
  std::size_t dim_;
  double pitch_;
  std::vector<double> coords_;
};

// ---------------------------------------------------------------------------
// Polylines

struct Polyline {
  std::vector<Point> vertices;
  bool closed = false;

  std::size_t dim() const { return vertices.empty() ? 0 : vertices.front().dim(); }
  std::size_t segment_count() const { return vertices.empty() ? 0 : vertices.size() - 1; }

  /// Throws std::invalid_argument when the type invariants do not hold.
  void validate() const {
    if (vertices.size() < 2) throw std::invalid_argument("polyline needs at least two vertices");
    const std::size_t d = vertices.front().dim();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (vertices[i].dim() != d) throw std::invalid_argument("polyline: mixed dimensions");
      if (!vertices[i].is_finite()) throw std::invalid_argument("polyline: non-finite vertex");
      if (i > 0 && vertices[i] == vertices[i - 1])
        throw std::invalid_argument("polyline: repeated consecutive vertex at " + std::to_string(i));
    }
  }
};

inline double polyline_length(const Polyline& l) {
  l.validate();
  double len = 0.0;
  for (std::size_t i = 1; i < l.vertices.size(); ++i)
    len += distance(l.vertices[i - 1].coords(), l.vertices[i].coords());
  return len;
}

/// Vertices plus evenly spaced points on every segment, in path order.
/// Consecutive samples are at most `delta` apart.
inline PointCloud sample_polyline(const Polyline& l, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::domain_error("sample_polyline: delta must be positive");
  l.validate();
  PointCloud cloud(l.dim(), delta);
  cloud.push_back(l.vertices.front());
  for (std::size_t i = 1; i < l.vertices.size(); ++i) {
    const Point& a = l.vertices[i - 1];
    const Point& b = l.vertices[i];
    const double len = distance(a, b);
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(len / delta)));
    for (std::size_t j = 1; j < k; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(k);
      Point p(a.dim());
      for (std::size_t c = 0; c < a.dim(); ++c) p[c] = a[c] + t * (b[c] - a[c]);
      cloud.push_back(p);
    }
    cloud.push_back(b);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Sampled planar graphs {(x, f(x))}

struct GraphCurve {
  std::function<double(double)> f;
  std::function<double(double)> df;
};

/// x -> sqrt(x) sin(1/x), extended by 0 at x = 0.
inline double needle_profile(double x) {
  if (x == 0.0) return 0.0;
  return std::sqrt(x) * std::sin(1.0 / x);
}

inline double needle_profile_derivative(double x) {
  const double s = std::sqrt(x);
  return std::sin(1.0 / x) / (2.0 * s) - std::cos(1.0 / x) / (x * s);
}

inline GraphCurve needle_graph() { return {needle_profile, needle_profile_derivative}; }

namespace detail {

// Arc length of the graph over [x, x+h] by 3-point Simpson on sqrt(1+f'^2).
inline double graph_arc_estimate(const GraphCurve& g, double x, double h) {
  auto speed = [&](double t) {
    const double d = g.df(t);
    return std::sqrt(1.0 + d * d);
  };
  return h / 6.0 * (speed(x) + 4.0 * speed(x + 0.5 * h) + speed(x + h));
}

}  // namespace detail

/// Arc-length-adaptive polyline through the graph of `g` over [a, b]: every
/// sampled sub-arc has estimated length <= 0.9 delta and chord <= delta.
inline Polyline sample_graph_polyline(const GraphCurve& g, double a, double b, double delta) {
  if (!(a > 0.0)) throw std::domain_error("sample_graph_curve: a must be positive");
  if (!(b > a)) throw std::domain_error("sample_graph_curve: need a < b");
  if (!(delta > 0.0)) throw std::domain_error("sample_graph_curve: delta must be positive");
  Polyline l;
  double x = a;
  double y = g.f(a);
  l.vertices.push_back(Point{x, y});
  const double target = 0.9 * delta;
  double h = std::min(b - a, target);
  while (x < b) {
    h = std::min(h * 2.0, b - x);
    while (true) {
      const double arc = detail::graph_arc_estimate(g, x, h);
      const double ny = g.f(x + h);
      const double chord = std::hypot(h, ny - y);
      if ((arc <= target && chord <= delta) || h <= 1e-15 * std::max(1.0, x)) break;
      h *= (arc > 2.0 * target) ? std::max(0.1, 0.9 * target / arc) : 0.5;
    }
    x = (b - x <= h) ? b : x + h;
    y = g.f(x);
    l.vertices.push_back(Point{x, y});
  }
  return l;
}

inline PointCloud sample_graph_curve(const GraphCurve& g, double a, double b, double delta) {
  const Polyline l = sample_graph_polyline(g, a, b, delta);
  PointCloud cloud(2, delta);
  cloud.reserve(l.vertices.size());
  for (const Point& p : l.vertices) cloud.push_back(p);
  return cloud;
}

// ---------------------------------------------------------------------------
// Continuum models

/// A compact set represented by polyline pieces and loose sample points, with
/// labelled marked points and a resampling capability at any pitch.
struct ContinuumModel {
  std::size_t dim = 2;
  std::vector<std::pair<std::string, Polyline>> pieces;
  /// Samples with no segment structure, e.g. the dense core of an oscillating curve.
  std::vector<std::pair<std::string, std::vector<Point>>> dust;
  std::map<std::string, Point> marked;
  /// Optional exact resampler; when empty, pieces are resampled as polylines.
  std::function<PointCloud(double)> refiner;
  /// Provenance for files: e.g. {"needle", "100"}. Empty for hand-made models.
  std::vector<std::string> generator;

  PointCloud refine(double delta) const {
    if (refiner) return refiner(delta);
    PointCloud cloud(dim, delta);
    for (const auto& [name, l] : pieces) cloud.append(sample_polyline(l, delta));
    for (const auto& [name, pts] : dust)
      for (const Point& p : pts) cloud.push_back(p);
    for (const auto& [label, p] : marked) cloud.push_back(p);
    return cloud;
  }

  const Point& mark(const std::string& label) const {
    auto it = marked.find(label);
    if (it == marked.end()) throw std::invalid_argument("unknown marked point '" + label + "'");
    return it->second;
  }
};

/// Model consisting of one straight segment with endpoints marked "a" and "b".
inline ContinuumModel segment_model(const Point& a, const Point& b) {
  ContinuumModel m;
  m.dim = a.dim();
  m.pieces.push_back({"segment", Polyline{{a, b}}});
  m.marked.emplace("a", a);
  m.marked.emplace("b", b);
  m.generator = {"segment"};
  return m;
}

}  // namespace ifsc
