#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ifsc/continua.hpp"
#include "ifsc/geometry.hpp"
#include "ifsc/ifs.hpp"
#include "ifsc/metric.hpp"

namespace ifsc {

enum class Claim { needle_dichotomy, fixed_set_gap, p_coverage, length_budget };
enum class CertVerdict { certified, consistent, refuted, inconclusive };

inline const char* to_string(Claim c) {
  switch (c) {
    case Claim::needle_dichotomy: return "needle_dichotomy";
    case Claim::fixed_set_gap: return "fixed_set_gap";
    case Claim::p_coverage: return "p_coverage";
    case Claim::length_budget: return "length_budget";
  }
  return "?";
}

inline const char* to_string(CertVerdict v) {
  switch (v) {
    case CertVerdict::certified: return "certified";
    case CertVerdict::consistent: return "consistent";
    case CertVerdict::refuted: return "refuted";
    case CertVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

/// Outcome of one per-instance check. "certified" means: this F (or f) does
/// not have the property at this resolution, with this margin.
struct Certificate {
  Claim claim = Claim::length_budget;
  CertVerdict verdict = CertVerdict::inconclusive;
  double margin = 0.0;
  std::vector<Point> witnesses;
  std::vector<std::pair<std::size_t, std::size_t>> index_witnesses;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string note;

  void param(const std::string& key, const std::string& value) { parameters.emplace_back(key, value); }
  void param(const std::string& key, double value) { param(key, detail::fmt17(value)); }
};

// ---------------------------------------------------------------------------
// Length arithmetic

/// 2^i >= 2^n: whether a curve of length 2^i could in principle cover l_n.
inline bool length_budget(long i, long n) {
  if (i < 1 || n < 1) throw std::invalid_argument("length_budget: indices must be >= 1");
  return i >= n;
}

inline double require_certified_bound(const MapSpec& f, const char* who) {
  if (!f.lip_bound || !f.lip_certified)
    throw std::invalid_argument(std::string(who) + ": map '" + f.kind_name() +
                                "' has no certified Lipschitz bound");
  return *f.lip_bound;
}

/// lambda * length(l) for a map with a certified bound on a region containing l.
inline double image_length_bound(const MapSpec& f, const Polyline& l) {
  const double lambda = require_certified_bound(f, "image_length_bound");
  if (f.region)
    for (const Point& v : l.vertices)
      if (!f.region->contains(v.coords()))
        throw std::invalid_argument("image_length_bound: polyline leaves the certified region");
  return lambda * polyline_length(l);
}

struct ImageLengthCheck {
  double bound = 0.0;
  double chained = 0.0;  // length of the epsilon-chain through the mapped samples
  double slack = 0.0;
  bool ok = false;
};

/// Maps the ordered samples of l (pitch delta) and compares the length of the
/// resulting chain, whose gaps are below 3 delta, with the certified bound.
inline ImageLengthCheck image_length_check(const MapSpec& f, const Polyline& l, double delta) {
  ImageLengthCheck c;
  c.bound = image_length_bound(f, l);
  const PointCloud cloud = sample_polyline(l, delta);
  Point prev = eval_map(f, cloud.point(0));
  for (std::size_t i = 1; i < cloud.size(); ++i) {
    const Point cur = eval_map(f, cloud.point(i));
    c.chained += distance(prev, cur);
    prev = cur;
  }
  c.slack = 4.0 * *f.lip_bound * delta + 1e-12 * c.bound;
  c.ok = c.chained <= c.bound + c.slack;
  return c;
}

// ---------------------------------------------------------------------------
// Needle dichotomy

struct DichotomyOptions {
  std::size_t pairs = 200000;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string schedule_text(double eps0, int k_max) {
  std::string s;
  for (int k = 0; k <= k_max; ++k) s += (k ? ";" : "") + fmt17(std::ldexp(eps0, -k));
  return s;
}

inline std::size_t nearest_index(const PointCloud& cloud, const Point& p) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = distance2(cloud[i], p.coords());
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

inline double finest_value(const ChainMetricProfile& p) {
  return p.entries.back().value.value_or(std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Numerical form of: a contraction f of the needle h(C) with h(p) in f(h(C))
/// must be constant. Case A (f fixes h(p)): the orbit chain bound
/// d(x, f x)/(1 - lambda) is compared against the divergent chain x -> h(p).
/// Case B (f moves h(p)): a pair x, y with f x near h(p) must have a divergent
/// image chain although the chain x -> y converges.
inline Certificate needle_dichotomy_check(const MapSpec& f, const NeedleModel& N, double eps0, int k_max,
                                          DichotomyOptions opt = {}) {
  Certificate cert;
  cert.claim = Claim::needle_dichotomy;
  if (f.dim != N.dim) throw std::invalid_argument("needle_dichotomy_check: dimension mismatch");
  const double delta = std::ldexp(eps0, -k_max) / 10.0;
  cert.param("delta", delta);
  cert.param("eps_schedule", detail::schedule_text(eps0, k_max));
  cert.param("seed", std::to_string(opt.seed));
  cert.param("map", f.kind_name());

  const Point hp = N.image.mark("h(p)");
  const PointCloud cloud = N.image.refine(delta);
  std::vector<Point> image(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) image[i] = eval_map(f, cloud.point(i));

  // Constant maps are the branch the dichotomy allows.
  double spread = 0.0;
  for (const Point& q : image) spread = std::max(spread, distance(q, image.front()));
  if (spread <= delta) {
    cert.verdict = CertVerdict::consistent;
    cert.witnesses.push_back(image.front());
    cert.note = distance(image.front(), hp) <= delta ? "constant map onto h(p)"
                                                     : "constant map; h(p) is not in the image";
    return cert;
  }

  // Self-map check at 3 delta.
  {
    const SpatialGrid grid(cloud, nearest_cell_size(cloud));
    double worst = 0.0;
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double d = std::sqrt(grid.nearest(image[i].coords()).second);
      if (d > worst) {
        worst = d;
        worst_i = i;
      }
    }
    cert.param("self_map_gap", worst);
    if (worst > 3.0 * delta) {
      cert.verdict = CertVerdict::inconclusive;
      cert.witnesses.push_back(cloud.point(worst_i));
      cert.witnesses.push_back(image[worst_i]);
      cert.note = "not a self-map at resolution";
      return cert;
    }
  }

  if (!f.lip_bound || !(*f.lip_bound < 1.0)) {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = "map carries no Lipschitz bound below 1";
    return cert;
  }
  const double lambda = *f.lip_bound;
  cert.param("lambda", lambda);

  const ContractionReport rep = classify_contraction(f, cloud, opt.pairs, opt.seed);
  if (rep.kind == ContractionClass::expansion_witness) {
    cert.verdict = CertVerdict::refuted;
    cert.margin = rep.max_ratio - lambda;
    cert.witnesses = {rep.witness_x, rep.witness_y};
    cert.param("expansion_ratio", rep.max_ratio);
    cert.note = "precondition refuted: sampled pair expands distance, no bound below 1 exists";
    return cert;
  }
  if (!f.lip_certified) {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = "declared Lipschitz bound is not certified";
    return cert;
  }

  const Point fhp = eval_map(f, hp);
  if (distance(fhp, hp) <= delta) {
    // Case A: pick the sample moved farthest away from h(p).
    std::size_t xi = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double d = distance(image[i], hp);
      if (d > far) {
        far = d;
        xi = i;
      }
    }
    if (far <= 2.0 * delta) {
      cert.verdict = CertVerdict::inconclusive;
      cert.note = "no sample with f(x) away from h(p)";
      return cert;
    }
    const Point x = cloud.point(xi);
    const Point fx = cloud.point(detail::nearest_index(cloud, image[xi]));
    const auto step = chain_profile(N.image, x, fx, eps0, k_max);
    const auto tip = chain_profile(N.image, x, hp, eps0, k_max);
    if (step.verdict.kind != VerdictKind::converges || tip.verdict.kind != VerdictKind::diverges) {
      cert.verdict = CertVerdict::inconclusive;
      cert.note = std::string("case A: chain x->f(x) ") + to_string(step.verdict.kind) +
                  ", chain x->h(p) " + to_string(tip.verdict.kind);
      return cert;
    }
    const double series = step.verdict.limit / (1.0 - lambda);
    const double reach = detail::finest_value(tip);
    cert.param("series_bound", series);
    cert.param("tip_chain", reach);
    cert.witnesses = {x, fx, hp};
    cert.margin = reach - series;
    cert.verdict = reach > series ? CertVerdict::certified : CertVerdict::inconclusive;
    cert.note = reach > series ? "case A: orbit chain bound exceeded by divergent chain to h(p)"
                               : "case A: divergent chain has not yet passed the orbit bound";
    return cert;
  }

  // Case B: f moves h(p).
  std::size_t xi = 0, yi = 0;
  double near = std::numeric_limits<double>::infinity(), far = -1.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = distance(image[i], hp);
    if (d < near) {
      near = d;
      xi = i;
    }
    if (d > far) {
      far = d;
      yi = i;
    }
  }
  if (near > delta) {
    cert.verdict = CertVerdict::consistent;
    cert.witnesses.push_back(fhp);
    cert.margin = near;
    cert.note = "h(p) is not in the image at resolution";
    return cert;
  }
  if (far <= 2.0 * delta) {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = "no sample with f(y) outside 2 delta of h(p)";
    return cert;
  }
  const Point x = cloud.point(xi), y = cloud.point(yi);
  const Point fx = cloud.point(detail::nearest_index(cloud, image[xi]));
  const Point fy = cloud.point(detail::nearest_index(cloud, image[yi]));
  const auto pre = chain_profile(N.image, x, y, eps0, k_max);
  const auto post = chain_profile(N.image, fx, fy, eps0, k_max);
  if (pre.verdict.kind != VerdictKind::converges || post.verdict.kind != VerdictKind::diverges) {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = std::string("case B: chain x->y ") + to_string(pre.verdict.kind) +
                ", chain f(x)->f(y) " + to_string(post.verdict.kind);
    return cert;
  }
  cert.witnesses = {x, y, fx, fy};
  cert.margin = detail::finest_value(post) - lambda * pre.verdict.limit;
  cert.verdict = cert.margin > 0.0 ? CertVerdict::certified : CertVerdict::inconclusive;
  cert.note = "case B: image chain diverges while the source chain converges";
  return cert;
}

// ---------------------------------------------------------------------------
// Fixed set and coverage

inline constexpr double kFixedSetFactor = 10.0;

/// D = hausdorff(F(M), M) at pitch delta; certified when D > 10 delta.
inline Certificate fixed_set_check(const IfsSpec& F, const ContinuumModel& M, double delta) {
  if (F.dim != M.dim) throw std::invalid_argument("fixed_set_check: dimension mismatch");
  F.validate();
  if (F.mode != IfsMode::strict) throw std::invalid_argument("fixed_set_check: strict mode required");
  Certificate cert;
  cert.claim = Claim::fixed_set_gap;
  cert.param("delta", delta);
  const PointCloud cloud = M.refine(delta);
  const PointCloud image = hutchinson(F, cloud);
  const HausdorffResult h = hausdorff_with_witness(image, cloud);
  cert.param("hausdorff", h.value);
  cert.margin = h.value - kFixedSetFactor * delta;
  cert.witnesses.push_back(h.witness);
  if (cert.margin > 0.0) {
    cert.verdict = CertVerdict::certified;
    cert.note = h.witness_in_first ? "image point far from the set" : "set point far from the image";
  } else {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = "resolution-limited: Hausdorff gap within 10 delta";
  }
  return cert;
}

struct CoverageReport {
  Certificate certificate;
  std::vector<int> covered;
  std::vector<int> artifacts;  // covered p_n reached only by pieces with an insufficient budget
};

/// Which marked p_n (0 <= n <= n_max) lie within 3 delta of F(P).
inline CoverageReport p_point_coverage(const IfsSpec& F, const PModel& P, double delta) {
  if (F.dim != 2) throw std::invalid_argument("p_point_coverage: P lives in the plane");
  if (F.maps.empty()) throw std::invalid_argument("p_point_coverage: empty IFS");
  std::vector<double> lambdas;
  for (const MapSpec& f : F.maps) {
    double lam;
    if (f.lip_bound) lam = *f.lip_bound;
    else if (F.mode == IfsMode::weak) lam = 1.0;
    else
      throw std::invalid_argument("p_point_coverage: map '" + f.kind_name() +
                                  "' has no Lipschitz data");
    if (lam > 1.0)
      throw std::invalid_argument("p_point_coverage: map '" + f.kind_name() + "' has bound above 1");
    lambdas.push_back(lam);
  }

  CoverageReport out;
  Certificate& cert = out.certificate;
  cert.claim = Claim::p_coverage;
  cert.param("delta", delta);
  cert.param("n_max", std::to_string(P.n_max));

  const int poles = P.n_max + 1;
  // min_dist[n][piece] over all maps.
  std::vector<std::vector<double>> dist(poles, std::vector<double>(P.lines.size(),
                                                                   std::numeric_limits<double>::infinity()));
  std::vector<bool> fixes_p0(F.maps.size());
  for (std::size_t m = 0; m < F.maps.size(); ++m) {
    const MapSpec& f = F.maps[m];
    fixes_p0[m] = distance(eval_map(f, zigzag_pole(0)), zigzag_pole(0)) <= delta;
    for (std::size_t i = 0; i < P.lines.size(); ++i) {
      const PointCloud c = sample_polyline(P.lines[i], delta);
      PointCloud img(2, delta);
      img.reserve(c.size());
      for (std::size_t k = 0; k < c.size(); ++k) img.push_back(eval_map(f, c.point(k)));
      const SpatialGrid grid(img, nearest_cell_size(img));
      for (int n = 0; n < poles; ++n)
        dist[n][i] = std::min(dist[n][i], std::sqrt(grid.nearest(zigzag_pole(n).coords()).second));
    }
  }
  const bool all_fix_p0 = std::all_of(fixes_p0.begin(), fixes_p0.end(), [](bool b) { return b; });

  int witness = -1;
  double witness_gap = 0.0;
  for (int n = 0; n < poles; ++n) {
    const double gap = *std::min_element(dist[n].begin(), dist[n].end());
    if (gap <= 3.0 * delta) {
      out.covered.push_back(n);
      if (n >= 1 && all_fix_p0) {
        bool budget = false;
        for (std::size_t i = 0; i < P.lines.size(); ++i)
          if (dist[n][i] <= 3.0 * delta && length_budget(static_cast<long>(i) + 1, n)) budget = true;
        if (!budget) out.artifacts.push_back(n);
      }
    } else if (witness <= 0) {
      // Prefer the first uncovered p_n with n >= 1 over p_0.
      witness = n;
      witness_gap = gap;
    }
  }
  std::string cov;
  for (int n : out.covered) cov += (cov.empty() ? "" : ";") + std::to_string(n);
  cert.param("covered", cov);
  if (witness >= 0) {
    cert.verdict = CertVerdict::certified;
    cert.margin = witness_gap;
    cert.witnesses.push_back(zigzag_pole(witness));
    cert.param("witness_index", std::to_string(witness));
    cert.note = "p" + std::to_string(witness) + " is not covered by F(P)";
  } else {
    cert.verdict = CertVerdict::inconclusive;
    cert.note = "every marked p_n is covered at resolution";
  }
  if (!out.artifacts.empty()) {
    std::string a;
    for (int n : out.artifacts) a += (a.empty() ? "" : ";") + std::to_string(n);
    cert.param("resolution_artifacts", a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string coords_text(const Point& p) {
  std::string s;
  for (std::size_t k = 0; k < p.dim(); ++k) s += (k ? "," : "") + detail::fmt17(p[k]);
  return s;
}

/// key=value block, one entry per line.
inline std::string to_text(const Certificate& c) {
  std::ostringstream os;
  os << "claim=" << to_string(c.claim) << "\n";
  os << "verdict=" << to_string(c.verdict) << "\n";
  os << "margin=" << detail::fmt17(c.margin) << "\n";
  for (const auto& [k, v] : c.parameters) os << k << "=" << v << "\n";
  for (const Point& w : c.witnesses) os << "witness=" << coords_text(w) << "\n";
  for (const auto& [i, j] : c.index_witnesses) os << "witness_pair=" << i << "," << j << "\n";
  if (!c.note.empty()) os << "note=" << c.note << "\n";
  return os.str();
}

inline std::string csv_header() { return "claim,verdict,margin,delta,witnesses,note"; }

inline std::string to_csv_row(const Certificate& c) {
  std::string delta;
  for (const auto& [k, v] : c.parameters)
    if (k == "delta") delta = v;
  std::string w;
  for (const Point& p : c.witnesses) w += (w.empty() ? "" : " ") + coords_text(p);
  std::string note = c.note;
  std::replace(note.begin(), note.end(), ',', ';');
  return std::string(to_string(c.claim)) + "," + to_string(c.verdict) + "," +
         detail::fmt17(c.margin) + "," + delta + ",\"" + w + "\"," + note;
}

}  // namespace ifsc
