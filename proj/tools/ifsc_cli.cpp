// ifsc: build continua, compute chain profiles and attractors, run
// certificates and draw figures.
//
// Exit codes: 0 success / certified / consistent, 1 inconclusive,
// 2 usage or input error / refuted precondition.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ifsc/certify.hpp"
#include "ifsc/continua.hpp"
#include "ifsc/geometry.hpp"
#include "ifsc/ifs.hpp"
#include "ifsc/io.hpp"
#include "ifsc/metric.hpp"

namespace {

using namespace ifsc;

constexpr int kOk = 0;
constexpr int kInconclusive = 1;
constexpr int kError = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  bool quiet = false;
};

void emit(const Globals& g, const std::string& content) {
  if (g.out.empty()) std::cout << content;
  else write_file_atomic(g.out, content);
}

void info(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << "\n";
}

Point parse_coords(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) v.push_back(detail::to_double(item, 0));
  if (v.empty()) throw std::invalid_argument("empty coordinate list");
  return Point(std::span<const double>(v));
}

int exit_for(CertVerdict v) {
  switch (v) {
    case CertVerdict::certified:
    case CertVerdict::consistent: return kOk;
    case CertVerdict::inconclusive: return kInconclusive;
    case CertVerdict::refuted: return kError;
  }
  return kError;
}

PModel pmodel_from(const ContinuumModel& m) {
  if (m.dim != 2) throw std::invalid_argument("P model must be planar");
  PModel pm;
  pm.model = m;
  for (int n = 1;; ++n) {
    const auto it = std::find_if(m.pieces.begin(), m.pieces.end(),
                                 [&](const auto& pc) { return pc.first == "l" + std::to_string(n); });
    if (it == m.pieces.end()) break;
    pm.lines.push_back(it->second);
    pm.n_max = n;
  }
  if (pm.n_max == 0) throw std::invalid_argument("model has no pieces named l1, l2, ...");
  return pm;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterated function systems, chain metrics and non-attractor certificates"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized estimate")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default: standard output)");
  app.add_flag("--quiet", g.quiet, "Suppress diagnostics on standard error");

  // build ------------------------------------------------------------------
  auto* build = app.add_subcommand("build", "Build a continuum model");
  std::string kind;
  double delta = 1e-3, sharpness = 100.0, length_tol = 1e-12;
  int n_max = 6, n = 3;
  std::size_t dim = 2;
  std::string base_file, seg_from = "0,0", seg_to = "1,0";
  build->add_option("kind", kind, "needle | P | zigzag | segment")
      ->required()
      ->check(CLI::IsMember({"needle", "P", "zigzag", "segment"}));
  build->add_option("--delta", delta, "Sampling pitch (needle)")->check(CLI::PositiveNumber);
  build->add_option("--sharpness", sharpness, "Flattening constant of h1")->check(CLI::PositiveNumber);
  build->add_option("--dim", dim, "Ambient dimension (needle)")->check(CLI::Range(2, 8));
  build->add_option("--base", base_file, "Base continuum model file (needle)");
  build->add_option("--n-max", n_max, "Number of zigzag lines (P)")->check(CLI::Range(1, kMaxZigzagIndex));
  build->add_option("--n", n, "Zigzag index")->check(CLI::Range(1, kMaxZigzagIndex));
  build->add_option("--length-tol", length_tol, "Relative length tolerance")->check(CLI::PositiveNumber);
  build->add_option("--from", seg_from, "Segment start, comma separated");
  build->add_option("--to", seg_to, "Segment end, comma separated");

  // chain ------------------------------------------------------------------
  auto* chain = app.add_subcommand("chain", "Chain-distance profile between two marked points");
  std::string model_file, from_label, to_label;
  double eps0 = 0.1;
  int k_max = 5;
  chain->add_option("model", model_file, "Model file")->required();
  chain->add_option("--from", from_label, "Marked label of the first point")->required();
  chain->add_option("--to", to_label, "Marked label of the second point")->required();
  chain->add_option("--eps0", eps0, "Coarsest epsilon")->check(CLI::PositiveNumber);
  chain->add_option("--kmax", k_max, "Number of halvings")->check(CLI::Range(3, 30));

  // attractor --------------------------------------------------------------
  auto* attr = app.add_subcommand("attractor", "Iterate the Barnsley-Hutchinson operator");
  std::string ifs_file, seed_cloud, steps_file;
  double tol = 1e-4;
  int max_iter = 60;
  attr->add_option("ifs", ifs_file, "IFS file")->required();
  attr->add_option("--tol", tol, "Stop when a Hausdorff step falls below this")->check(CLI::PositiveNumber);
  attr->add_option("--max-iter", max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  attr->add_option("--seed-cloud", seed_cloud, "Model file used as the starting set (default: origin)");
  attr->add_option("--steps", steps_file, "Convergence CSV (default: <out>.steps.csv, or standard error)");

  // certify ----------------------------------------------------------------
  auto* cert = app.add_subcommand("certify", "Run a certificate");
  std::string cert_kind, cert_ifs, cert_model;
  double cert_delta = 1e-3;
  int budget_i = 1, budget_n = 1;
  std::size_t pairs = 200000;
  cert->add_option("kind", cert_kind, "dichotomy | fixed-set | coverage | length")
      ->required()
      ->check(CLI::IsMember({"dichotomy", "fixed-set", "coverage", "length"}));
  cert->add_option("--ifs", cert_ifs, "IFS file (dichotomy: exactly one map)");
  cert->add_option("--model", cert_model, "Model file");
  cert->add_option("--delta", cert_delta, "Sampling pitch")->check(CLI::PositiveNumber);
  cert->add_option("--eps0", eps0, "Coarsest epsilon (dichotomy)")->check(CLI::PositiveNumber);
  cert->add_option("--kmax", k_max, "Number of halvings (dichotomy)")->check(CLI::Range(3, 30));
  cert->add_option("--pairs", pairs, "Sampled pairs for the contraction test")->check(CLI::PositiveNumber);
  cert->add_option("--i", budget_i, "Source line index (length)")->check(CLI::PositiveNumber);
  cert->add_option("--n", budget_n, "Target line index (length)")->check(CLI::PositiveNumber);

  // plot -------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "Draw a model or profile CSV as SVG");
  std::string plot_in, svg_out;
  plot->add_option("input", plot_in, "Model file or profile CSV")->required();
  plot->add_option("--svg", svg_out, "SVG output path (default: --out or standard output)");

  if (argc <= 1) {
    std::cerr << app.help();
    return kError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*build) {
      if (kind == "needle") {
        ContinuumModel base = default_needle_base(dim);
        if (!base_file.empty()) base = parse_model(read_file(base_file));
        const NeedleModel nm = build_needle(base, sharpness, delta);
        emit(g, needle_to_text(nm));
        info(g, "needle: " + std::to_string(nm.image.refine(delta).size()) + " samples");
      } else if (kind == "P") {
        const PModel pm = build_P(n_max, length_tol);
        emit(g, model_to_text(pm.model));
      } else if (kind == "zigzag") {
        ContinuumModel m;
        m.dim = 2;
        const Polyline l = build_zigzag_ln(n, length_tol);
        m.pieces.push_back({"l" + std::to_string(n), l});
        m.marked.emplace("p0", zigzag_pole(0));
        m.marked.emplace("p" + std::to_string(n), zigzag_pole(n));
        m.generator = {"zigzag", std::to_string(n)};
        emit(g, model_to_text(m));
        info(g, "length " + detail::fmt17(polyline_length(l)));
      } else {
        emit(g, model_to_text(segment_model(parse_coords(seg_from), parse_coords(seg_to))));
      }
      return kOk;
    }

    if (*chain) {
      const ContinuumModel m = parse_model(read_file(model_file));
      const auto prof = chain_profile(m, m.mark(from_label), m.mark(to_label), eps0, k_max);
      emit(g, profile_csv(prof));
      std::cout << verdict_line(prof.verdict) << "\n";
      return prof.verdict.kind == VerdictKind::inconclusive ? kInconclusive : kOk;
    }

    if (*attr) {
      const IfsSpec F = parse_ifs(read_file(ifs_file));
      PointCloud seed(F.dim, tol);
      if (seed_cloud.empty()) seed.push_back(Point(F.dim));
      else seed = parse_model(read_file(seed_cloud)).refine(tol);
      if (seed.dim() != F.dim) throw std::invalid_argument("seed cloud dimension differs from the IFS");
      const AttractorResult r = attractor(F, seed, tol, max_iter);
      ContinuumModel out;
      out.dim = F.dim;
      out.dust.push_back({"attractor", {}});
      for (std::size_t i = 0; i < r.cloud.size(); ++i) out.dust.back().second.push_back(r.cloud.point(i));
      out.generator = {"attractor"};
      emit(g, model_to_text(out));
      std::string csv = "iteration,hausdorff_step\n";
      for (std::size_t k = 0; k < r.steps.size(); ++k)
        csv += std::to_string(k + 1) + "," + detail::fmt17(r.steps[k]) + "\n";
      csv += "# converged=" + std::string(r.converged ? "true" : "false") +
             " lambda=" + detail::fmt17(r.lambda) + " error_bound=" + detail::fmt17(r.error_bound) + "\n";
      if (!steps_file.empty()) write_file_atomic(steps_file, csv);
      else if (!g.out.empty()) write_file_atomic(g.out + ".steps.csv", csv);
      else if (!g.quiet) std::cerr << csv;
      return r.converged ? kOk : kInconclusive;
    }

    if (*cert) {
      Certificate c;
      std::string extra;
      if (cert_kind == "length") {
        if (cert_ifs.empty()) {
          c.claim = Claim::length_budget;
          const bool ok = length_budget(budget_i, budget_n);
          c.param("i", std::to_string(budget_i));
          c.param("n", std::to_string(budget_n));
          c.param("budget", ok ? "sufficient" : "insufficient");
          c.verdict = CertVerdict::certified;
          c.margin = std::ldexp(1.0, budget_i) - std::ldexp(1.0, budget_n);
          c.note = ok ? "2^i >= 2^n" : "2^i < 2^n: l_i cannot reach p_n under a 1-Lipschitz map";
          c.witnesses.push_back(zigzag_pole(std::min(budget_n, kMaxZigzagIndex)));
        } else {
          if (cert_model.empty()) throw std::invalid_argument("certify length needs --model with --ifs");
          const IfsSpec F = parse_ifs(read_file(cert_ifs));
          const ContinuumModel m = parse_model(read_file(cert_model));
          c.claim = Claim::length_budget;
          c.param("delta", cert_delta);
          bool all_ok = true;
          double worst = std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < F.maps.size(); ++k)
            for (const auto& [name, l] : m.pieces) {
              const auto chk = image_length_check(F.maps[k], l, cert_delta);
              c.param("map" + std::to_string(k) + "/" + name + "/bound", chk.bound);
              c.param("map" + std::to_string(k) + "/" + name + "/chained", chk.chained);
              all_ok &= chk.ok;
              worst = std::min(worst, chk.bound + chk.slack - chk.chained);
            }
          c.margin = worst;
          c.verdict = all_ok ? CertVerdict::certified : CertVerdict::inconclusive;
          c.note = all_ok ? "chained image lengths stay within the certified bounds"
                          : "a chained image length exceeds its bound";
        }
      } else {
        if (cert_ifs.empty() || cert_model.empty())
          throw std::invalid_argument("certify " + cert_kind + " needs --ifs and --model");
        const IfsSpec F = parse_ifs(read_file(cert_ifs));
        const ParsedModel pm = parse_model_file(read_file(cert_model));
        if (cert_kind == "dichotomy") {
          if (F.maps.size() != 1) throw std::invalid_argument("certify dichotomy takes a single map");
          if (pm.base.pieces.empty()) throw std::invalid_argument("certify dichotomy needs a needle model");
          const NeedleModel nm = build_needle(pm.base, pm.sharpness, std::ldexp(eps0, -k_max) / 10.0);
          c = needle_dichotomy_check(F.maps[0], nm, eps0, k_max, {pairs, g.seed});
        } else if (cert_kind == "fixed-set") {
          c = fixed_set_check(F, pm.model, cert_delta);
        } else {
          const auto rep = p_point_coverage(F, pmodel_from(pm.model), cert_delta);
          c = rep.certificate;
        }
      }
      emit(g, to_text(c));
      return exit_for(c.verdict);
    }

    if (*plot) {
      const std::string text = read_file(plot_in);
      const bool is_csv = text.rfind("epsilon", 0) == 0;
      const std::string svg = is_csv ? profile_svg(parse_csv(text)) : model_svg(parse_model(text));
      if (!svg_out.empty()) write_file_atomic(svg_out, svg);
      else emit(g, svg);
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
