#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "ifsc/geometry.hpp"
#include "ifsc/metric.hpp"
#include "ifsc/spatial.hpp"

namespace ifsc {

/// Axis-aligned box [lo, hi].
struct Box {
  Point lo, hi;

  std::size_t dim() const { return lo.dim(); }
  bool contains(std::span<const double> p, double slack = 0.0) const {
    for (std::size_t k = 0; k < lo.dim(); ++k)
      if (p[k] < lo[k] - slack || p[k] > hi[k] + slack) return false;
    return true;
  }
  bool degenerate() const {
    for (std::size_t k = 0; k < lo.dim(); ++k)
      if (!(hi[k] > lo[k])) return true;
    return false;
  }
};

/// [0,1] x [-1,1]^(n-1): the normalised home of the base continuum.
inline Box needle_box(std::size_t dim) {
  Box b{Point(dim), Point(dim)};
  b.hi[0] = 1.0;
  for (std::size_t k = 1; k < dim; ++k) {
    b.lo[k] = -1.0;
    b.hi[k] = 1.0;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Map descriptors

struct MapSpec;

struct AffineMap {
  std::vector<double> matrix;  // row-major n x n
  std::vector<double> offset;  // n
};
struct NeedleH1 {
  double sharpness = 100.0;
};
struct NeedleH2 {};
struct Composition {
  std::vector<MapSpec> maps;  // applied in list order: maps[0] first
};
/// Named builtins: "constant" (params = target point), "identity",
/// "needle_halving" (t -> t/2 along the graph of sqrt(x) sin(1/x)).
struct ClosedForm {
  std::string name;
  std::vector<double> params;
};

struct MapSpec {
  std::variant<AffineMap, NeedleH1, NeedleH2, Composition, ClosedForm> kind;
  std::size_t dim = 2;
  /// Lipschitz bound; certified when derived from the formula, otherwise declared.
  std::optional<double> lip_bound;
  bool lip_certified = false;
  std::optional<Box> region;

  std::string kind_name() const;
};

inline double needle_halving_y(double x1, double x2) {
  return needle_profile(x1 / 2.0) + (x2 - needle_profile(x1));
}

inline Point eval_map(const MapSpec& f, const Point& x) {
  if (x.dim() != f.dim)
    throw std::invalid_argument("eval_map: point dimension " + std::to_string(x.dim()) +
                                " does not match map dimension " + std::to_string(f.dim));
  if (f.region && !f.region->contains(x.coords()))
    throw std::domain_error("eval_map: point outside the map's region of validity");
  const std::size_t n = f.dim;
  return std::visit(
      [&](const auto& k) -> Point {
        using K = std::decay_t<decltype(k)>;
        Point y(n);
        if constexpr (std::is_same_v<K, AffineMap>) {
          for (std::size_t i = 0; i < n; ++i) {
            double s = k.offset[i];
            for (std::size_t j = 0; j < n; ++j) s += k.matrix[i * n + j] * x[j];
            y[i] = s;
          }
        } else if constexpr (std::is_same_v<K, NeedleH1>) {
          if (n < 2) throw std::invalid_argument("needle_h1 needs dimension >= 2");
          y[0] = x[0];
          for (std::size_t i = 1; i < n; ++i) y[i] = x[0] / k.sharpness * x[i];
        } else if constexpr (std::is_same_v<K, NeedleH2>) {
          if (n < 2) throw std::invalid_argument("needle_h2 needs dimension >= 2");
          if (x[0] < 0.0) throw std::domain_error("needle_h2: first coordinate must be >= 0");
          y = x;
          y[1] = needle_profile(x[0]) + x[1];
        } else if constexpr (std::is_same_v<K, Composition>) {
          y = x;
          for (const MapSpec& g : k.maps) y = eval_map(g, y);
        } else {
          if (k.name == "identity") {
            y = x;
          } else if (k.name == "constant") {
            y = Point(std::span<const double>(k.params));
          } else if (k.name == "needle_halving") {
            if (x[0] < 0.0) throw std::domain_error("needle_halving: first coordinate must be >= 0");
            y = x;
            y[0] = x[0] / 2.0;
            y[1] = needle_halving_y(x[0], x[1]);
          } else {
            throw std::invalid_argument("unknown closed-form map '" + k.name + "'");
          }
        }
        return y;
      },
      f.kind);
}

inline std::string MapSpec::kind_name() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, AffineMap>) return "affine";
        else if constexpr (std::is_same_v<K, NeedleH1>) return "needle_h1";
        else if constexpr (std::is_same_v<K, NeedleH2>) return "needle_h2";
        else if constexpr (std::is_same_v<K, Composition>) return "compose";
        else return k.name;
      },
      kind);
}

/// Largest singular value, rounded up by a few ulps so it stays an upper bound.
inline double spectral_norm(std::span<const double> matrix, std::size_t n) {
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = matrix[i * n + j];
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double s = svd.singularValues()(0);
  return s * (1.0 + 64.0 * std::numeric_limits<double>::epsilon());
}

/// Formula-derived Lipschitz bound on `box` (whole space when box is empty).
inline std::optional<double> certified_lipschitz(const MapSpec& f,
                                                 const std::optional<Box>& box = std::nullopt) {
  return std::visit(
      [&](const auto& k) -> std::optional<double> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, AffineMap>) {
          return spectral_norm(k.matrix, f.dim);
        } else if constexpr (std::is_same_v<K, NeedleH1>) {
          // ||J|| <= ||diag(1, x1/s, ...)|| + ||first-column tail|| over a convex box.
          if (!box) return std::nullopt;
          double x1 = std::max(std::abs(box->lo[0]), std::abs(box->hi[0]));
          double tail = 0.0;
          for (std::size_t i = 1; i < f.dim; ++i) {
            const double m = std::max(std::abs(box->lo[i]), std::abs(box->hi[i]));
            tail += m * m;
          }
          return std::max(1.0, x1 / k.sharpness) + std::sqrt(tail) / k.sharpness;
        } else if constexpr (std::is_same_v<K, Composition>) {
          double prod = 1.0;
          for (const MapSpec& g : k.maps) {
            if (!(g.lip_bound && g.lip_certified)) return std::nullopt;
            prod *= *g.lip_bound;
          }
          return prod;
        } else if constexpr (std::is_same_v<K, ClosedForm>) {
          if (k.name == "identity") return 1.0;
          if (k.name == "constant") return 0.0;
          return std::nullopt;
        } else {
          return std::nullopt;
        }
      },
      f.kind);
}

// Constructors -------------------------------------------------------------

inline MapSpec with_certified_bound(MapSpec f) {
  if (auto b = certified_lipschitz(f)) {
    f.lip_bound = b;
    f.lip_certified = true;
  }
  return f;
}

inline MapSpec affine_map(std::size_t dim, std::vector<double> matrix, std::vector<double> offset) {
  if (matrix.size() != dim * dim || offset.size() != dim)
    throw std::invalid_argument("affine_map: expected n*n matrix entries and n offsets");
  MapSpec f;
  f.kind = AffineMap{std::move(matrix), std::move(offset)};
  f.dim = dim;
  return with_certified_bound(std::move(f));
}

/// x -> s x + offset.
inline MapSpec scaling_map(double s, const Point& offset) {
  const std::size_t n = offset.dim();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = s;
  return affine_map(n, std::move(m), {offset.coords().begin(), offset.coords().end()});
}

inline MapSpec identity_map(std::size_t dim) {
  MapSpec f;
  f.kind = ClosedForm{"identity", {}};
  f.dim = dim;
  return with_certified_bound(std::move(f));
}

inline MapSpec constant_map(const Point& q) {
  MapSpec f;
  f.kind = ClosedForm{"constant", {q.coords().begin(), q.coords().end()}};
  f.dim = q.dim();
  return with_certified_bound(std::move(f));
}

inline MapSpec needle_h1_map(std::size_t dim, double sharpness = 100.0) {
  MapSpec f;
  f.kind = NeedleH1{sharpness};
  f.dim = dim;
  if (auto b = certified_lipschitz(f, needle_box(dim))) {
    f.lip_bound = b;
    f.lip_certified = true;
    f.region = needle_box(dim);
  }
  return f;
}

inline MapSpec needle_h2_map(std::size_t dim) {
  MapSpec f;
  f.kind = NeedleH2{};
  f.dim = dim;
  return f;
}

inline MapSpec needle_halving_map(std::optional<double> declared = std::nullopt) {
  MapSpec f;
  f.kind = ClosedForm{"needle_halving", {}};
  f.dim = 2;
  f.lip_bound = declared;
  return f;
}

inline MapSpec compose(std::vector<MapSpec> maps) {
  if (maps.empty()) throw std::invalid_argument("compose: empty list");
  MapSpec f;
  f.dim = maps.front().dim;
  for (const auto& g : maps)
    if (g.dim != f.dim) throw std::invalid_argument("compose: dimension mismatch");
  f.kind = Composition{std::move(maps)};
  return with_certified_bound(std::move(f));
}

inline MapSpec declare_lipschitz(MapSpec f, double lambda) {
  f.lip_bound = lambda;
  f.lip_certified = false;
  return f;
}

// ---------------------------------------------------------------------------
// Systems

enum class IfsMode { strict, weak };

struct IfsSpec {
  std::vector<MapSpec> maps;
  IfsMode mode = IfsMode::strict;
  std::size_t dim = 2;

  /// Strict mode requires every map to carry a bound below one.
  void validate() const {
    if (maps.empty()) throw std::invalid_argument("IFS needs at least one map");
    for (const auto& f : maps) {
      if (f.dim != dim) throw std::invalid_argument("IFS: map dimension mismatch");
      if (mode == IfsMode::strict && !(f.lip_bound && *f.lip_bound < 1.0))
        throw std::invalid_argument("IFS in strict mode: map '" + f.kind_name() +
                                    "' has no Lipschitz bound below 1");
    }
  }

  double max_lipschitz() const {
    double m = 0.0;
    for (const auto& f : maps) m = std::max(m, f.lip_bound.value_or(1.0));
    return m;
  }
};

// Lipschitz estimation -------------------------------------------------------

struct LipschitzEstimate {
  double lower = 0.0;
  std::optional<double> certified_upper;
  Point witness_x, witness_y;
};

inline LipschitzEstimate lipschitz_estimate(const MapSpec& f, const Box& box, std::size_t samples,
                                            std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("lipschitz_estimate: samples must be >= 2");
  if (box.dim() != f.dim) throw std::invalid_argument("lipschitz_estimate: box dimension mismatch");
  if (box.degenerate()) throw std::invalid_argument("lipschitz_estimate: degenerate box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&] {
    Point p(f.dim);
    for (std::size_t k = 0; k < f.dim; ++k) p[k] = box.lo[k] + u(rng) * (box.hi[k] - box.lo[k]);
    return p;
  };
  LipschitzEstimate est;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = draw(), y = draw();
    const double d = distance(x, y);
    if (d == 0.0) continue;
    const double r = distance(eval_map(f, x), eval_map(f, y)) / d;
    if (r > est.lower) {
      est.lower = r;
      est.witness_x = x;
      est.witness_y = y;
    }
  }
  if (std::holds_alternative<NeedleH1>(f.kind)) est.certified_upper = certified_lipschitz(f, box);
  else if (f.lip_certified) est.certified_upper = f.lip_bound;
  return est;
}

// Empirical contraction classes -----------------------------------------------

enum class ContractionClass { strict, weak_candidate, boundary, expansion_witness };

inline const char* to_string(ContractionClass c) {
  switch (c) {
    case ContractionClass::strict: return "strict";
    case ContractionClass::weak_candidate: return "weak_candidate";
    case ContractionClass::boundary: return "boundary";
    case ContractionClass::expansion_witness: return "expansion_witness";
  }
  return "?";
}

struct ContractionReport {
  ContractionClass kind = ContractionClass::boundary;
  double max_ratio = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t pairs_tested = 0;
  Point witness_x, witness_y;  // pair realising max_ratio
  std::string note = "empirical: the verdict describes sampled pairs only";
};

inline constexpr double kRatioSlack = 1e-9;

/// Samples pairs from the cloud (half uniformly, half among nearby indices) and
/// classifies the map by its distance ratios.
inline ContractionReport classify_contraction(const MapSpec& f, const PointCloud& domain,
                                              std::size_t pairs, std::uint64_t seed) {
  if (pairs < 1) throw std::invalid_argument("classify_contraction: pairs must be >= 1");
  if (domain.dim() != f.dim) throw std::invalid_argument("classify_contraction: dimension mismatch");
  bool distinct = false;
  for (std::size_t i = 1; i < domain.size() && !distinct; ++i)
    distinct = distance2(domain[0], domain[i]) > 0.0;
  if (!distinct) throw std::invalid_argument("classify_contraction: need two distinct points");

  const std::size_t n = domain.size();
  std::vector<Point> image(n);
  for (std::size_t i = 0; i < n; ++i) image[i] = eval_map(f, domain.point(i));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> offset(1, std::min<std::size_t>(8, n - 1));
  ContractionReport rep;
  for (std::size_t s = 0; s < pairs; ++s) {
    const std::size_t i = pick(rng);
    const std::size_t j = (s % 2 == 0) ? pick(rng) : (i + offset(rng)) % n;
    const double d = distance(domain[i], domain[j]);
    if (d == 0.0) continue;
    const double r = distance(image[i].coords(), image[j].coords()) / d;
    ++rep.pairs_tested;
    rep.min_ratio = std::min(rep.min_ratio, r);
    if (r > rep.max_ratio) {
      rep.max_ratio = r;
      rep.witness_x = domain.point(i);
      rep.witness_y = domain.point(j);
    }
  }
  if (rep.pairs_tested == 0) {
    rep.kind = ContractionClass::boundary;
    rep.note += "; no distinct pair was drawn";
  } else if (rep.max_ratio > 1.0 + kRatioSlack) {
    rep.kind = ContractionClass::expansion_witness;
  } else if (rep.max_ratio < 1.0 - kRatioSlack) {
    rep.kind = ContractionClass::strict;
  } else if (rep.min_ratio >= 1.0 - kRatioSlack) {
    rep.kind = ContractionClass::boundary;
  } else {
    rep.kind = ContractionClass::weak_candidate;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Barnsley-Hutchinson operator

namespace detail {

/// Greedy order-preserving merge that drops points within `tol` of a kept one.
class DedupSet {
 public:
  DedupSet(std::size_t dim, double tol) : dim_(dim), tol_(tol) {}

  bool insert(std::span<const double> p) {
    if (tol_ == 0.0) return exact_.emplace(p.begin(), p.end()).second && keep(p);
    std::array<std::int64_t, kMaxDim> c{};
    for (std::size_t k = 0; k < dim_; ++k) c[k] = static_cast<std::int64_t>(std::floor(p[k] / tol_));
    std::array<std::int64_t, kMaxDim> d{};
    d.fill(-1);
    const double t2 = tol_ * tol_;
    while (true) {
      std::array<std::int64_t, kMaxDim> q{};
      for (std::size_t k = 0; k < dim_; ++k) q[k] = c[k] + d[k];
      if (auto it = cells_.find(hash(q)); it != cells_.end())
        for (std::uint32_t idx : it->second)
          if (distance2(p, point(idx)) <= t2) return false;
      std::size_t k = 0;
      for (; k < dim_; ++k) {
        if (++d[k] <= 1) break;
        d[k] = -1;
      }
      if (k == dim_) break;
    }
    cells_[hash(c)].push_back(static_cast<std::uint32_t>(count()));
    return keep(p);
  }

  std::vector<double> take() { return std::move(coords_); }

 private:
  std::size_t count() const { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  bool keep(std::span<const double> p) {
    coords_.insert(coords_.end(), p.begin(), p.end());
    return true;
  }
  std::uint64_t hash(const std::array<std::int64_t, kMaxDim>& c) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t k = 0; k < dim_; ++k) h = (h ^ static_cast<std::uint64_t>(c[k])) * 1099511628211ull;
    return h;
  }

  std::size_t dim_;
  double tol_;
  std::vector<double> coords_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  std::unordered_set<std::vector<double>, CoordHash> exact_;
};

}  // namespace detail

/// F(B) = union of f_i(B), deduplicated at `dedup_tol` (default: half the input
/// pitch). The output pitch is max_i(lambda_i) * pitch + dedup_tol, with
/// lambda_i = 1 for maps without a bound.
inline PointCloud hutchinson(const IfsSpec& F, const PointCloud& b,
                             std::optional<double> dedup_tol = std::nullopt) {
  if (F.maps.empty()) throw std::invalid_argument("hutchinson: empty IFS");
  if (b.dim() != F.dim) throw std::invalid_argument("hutchinson: dimension mismatch");
  const double tol = dedup_tol.value_or(b.pitch() / 2.0);
  if (!(tol >= 0.0)) throw std::domain_error("hutchinson: dedup tolerance must be >= 0");
  detail::DedupSet merged(b.dim(), tol);
  for (const MapSpec& f : F.maps)
    for (std::size_t i = 0; i < b.size(); ++i) merged.insert(eval_map(f, b.point(i)).coords());
  const double pitch =
      std::max(F.max_lipschitz() * b.pitch() + tol, std::numeric_limits<double>::min());
  PointCloud out(b.dim(), pitch);
  const std::vector<double> coords = merged.take();
  out.reserve(coords.size() / b.dim());
  for (std::size_t i = 0; i < coords.size(); i += b.dim())
    out.push_back(std::span<const double>(coords.data() + i, b.dim()));
  return out;
}

struct AttractorResult {
  PointCloud cloud;
  /// steps[k] = hausdorff(B_k, B_{k+1}).
  std::vector<double> steps;
  bool converged = false;
  double lambda = 0.0;
  /// Distance bound to the true attractor: lambda / (1 - lambda) * last step.
  double error_bound = 0.0;
};

/// Iterates B_{k+1} = F(B_k) until a Hausdorff step falls below tol.
inline AttractorResult attractor(const IfsSpec& F, const PointCloud& seed, double tol, int max_iter,
                                 std::optional<double> dedup_tol = std::nullopt) {
  if (F.mode != IfsMode::strict)
    throw std::invalid_argument(
        "attractor: weakly contracting systems have no convergence rate; refusing to iterate");
  F.validate();
  if (!(tol > 0.0)) throw std::domain_error("attractor: tol must be positive");
  if (max_iter < 1) throw std::domain_error("attractor: max_iter must be >= 1");
  const double dedup = dedup_tol.value_or(tol * 1e-9);
  AttractorResult res{seed, {}, false, F.max_lipschitz(), 0.0};
  for (int k = 0; k < max_iter; ++k) {
    PointCloud next = hutchinson(F, res.cloud, dedup);
    const double step = hausdorff(res.cloud, next);
    res.steps.push_back(step);
    res.cloud = std::move(next);
    if (step < tol) {
      res.converged = true;
      break;
    }
  }
  res.error_bound = res.lambda / (1.0 - res.lambda) * res.steps.back();
  return res;
}

// ---------------------------------------------------------------------------
// Text format

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

inline double to_double(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses the IFS text format:
///   # comment
///   dim <n>                      (optional, default 2; must precede maps)
///   mode strict|weak             (optional, default strict)
///   affine <n*n matrix entries row-major> <n offsets> [lip <bound>]
///   needle_h1 <sharpness> [lip <bound>]
///   needle_h2 [lip <bound>]
///   constant <n coords>
///   identity
///   needle_halving [lip <bound>]
///   compose            followed by a begin ... end block of maps, applied in order
inline IfsSpec parse_ifs(const std::string& text) {
  IfsSpec spec;
  std::vector<std::vector<MapSpec>> stack;  // open compose blocks
  bool expect_begin = false;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::optional<double> declared;
    if (tok.size() >= 2 && tok[tok.size() - 2] == "lip") {
      declared = detail::to_double(tok.back(), line_no);
      tok.resize(tok.size() - 2);
    }
    const std::string& op = tok[0];
    const std::size_t n = spec.dim;
    auto nums = [&](std::size_t from) {
      std::vector<double> v;
      for (std::size_t i = from; i < tok.size(); ++i) v.push_back(detail::to_double(tok[i], line_no));
      return v;
    };
    if (expect_begin) {
      if (op != "begin") throw std::invalid_argument(where + "expected 'begin' after 'compose'");
      expect_begin = false;
      continue;
    }
    std::optional<MapSpec> map;
    if (op == "dim") {
      if (!spec.maps.empty() || !stack.empty())
        throw std::invalid_argument(where + "'dim' must precede all maps");
      const double d = detail::to_double(tok.at(1), line_no);
      if (d < 1 || d > kMaxDim || d != std::floor(d))
        throw std::invalid_argument(where + "dimension must be an integer in [1, 8]");
      spec.dim = static_cast<std::size_t>(d);
      continue;
    } else if (op == "mode") {
      if (tok.size() != 2 || (tok[1] != "strict" && tok[1] != "weak"))
        throw std::invalid_argument(where + "mode must be 'strict' or 'weak'");
      spec.mode = tok[1] == "strict" ? IfsMode::strict : IfsMode::weak;
      continue;
    } else if (op == "compose") {
      stack.emplace_back();
      expect_begin = true;
      if (tok.size() == 2 && tok[1] == "begin") expect_begin = false;
      else if (tok.size() != 1) throw std::invalid_argument(where + "unexpected tokens after 'compose'");
      continue;
    } else if (op == "begin") {
      throw std::invalid_argument(where + "'begin' without 'compose'");
    } else if (op == "end") {
      if (stack.empty()) throw std::invalid_argument(where + "'end' without 'compose'");
      auto maps = std::move(stack.back());
      stack.pop_back();
      if (maps.empty()) throw std::invalid_argument(where + "empty compose block");
      map = compose(std::move(maps));
    } else if (op == "affine") {
      auto v = nums(1);
      if (v.size() != n * n + n)
        throw std::invalid_argument(where + "affine in dimension " + std::to_string(n) + " needs " +
                                    std::to_string(n * n + n) + " numbers");
      map = affine_map(n, {v.begin(), v.begin() + static_cast<long>(n * n)},
                       {v.begin() + static_cast<long>(n * n), v.end()});
    } else if (op == "needle_h1") {
      auto v = nums(1);
      if (v.size() > 1) throw std::invalid_argument(where + "needle_h1 takes one sharpness value");
      map = needle_h1_map(n, v.empty() ? 100.0 : v[0]);
    } else if (op == "needle_h2") {
      if (tok.size() != 1) throw std::invalid_argument(where + "needle_h2 takes no arguments");
      map = needle_h2_map(n);
    } else if (op == "constant") {
      auto v = nums(1);
      if (v.size() != n) throw std::invalid_argument(where + "constant needs n coordinates");
      map = constant_map(Point(std::span<const double>(v)));
    } else if (op == "identity") {
      map = identity_map(n);
    } else if (op == "needle_halving") {
      if (n != 2) throw std::invalid_argument(where + "needle_halving is planar");
      map = needle_halving_map();
    } else {
      throw std::invalid_argument(where + "unknown map '" + op + "'");
    }
    if (declared) *map = declare_lipschitz(std::move(*map), *declared);
    if (stack.empty()) spec.maps.push_back(std::move(*map));
    else stack.back().push_back(std::move(*map));
  }
  if (expect_begin || !stack.empty()) throw std::invalid_argument("unterminated compose block");
  if (spec.maps.empty()) throw std::invalid_argument("IFS file defines no maps");
  return spec;
}

namespace detail {

inline void write_map(std::ostringstream& os, const MapSpec& f) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, AffineMap>) {
          os << "affine";
          for (double v : k.matrix) os << ' ' << fmt17(v);
          for (double v : k.offset) os << ' ' << fmt17(v);
        } else if constexpr (std::is_same_v<K, NeedleH1>) {
          os << "needle_h1 " << fmt17(k.sharpness);
        } else if constexpr (std::is_same_v<K, NeedleH2>) {
          os << "needle_h2";
        } else if constexpr (std::is_same_v<K, Composition>) {
          os << "compose\nbegin\n";
          for (const auto& g : k.maps) {
            write_map(os, g);
            os << '\n';
          }
          os << "end";
        } else {
          os << k.name;
          for (double v : k.params) os << ' ' << fmt17(v);
        }
      },
      f.kind);
  if (f.lip_bound && !f.lip_certified) os << " lip " << fmt17(*f.lip_bound);
}

}  // namespace detail

inline std::string to_text(const IfsSpec& spec) {
  std::ostringstream os;
  os << "dim " << spec.dim << "\nmode " << (spec.mode == IfsMode::strict ? "strict" : "weak") << '\n';
  for (const auto& f : spec.maps) {
    detail::write_map(os, f);
    os << '\n';
  }
  return os.str();
}

}  // namespace ifsc
