#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ifsc/continua.hpp"
#include "ifsc/geometry.hpp"
#include "ifsc/ifs.hpp"
#include "ifsc/metric.hpp"

namespace ifsc {

// ---------------------------------------------------------------------------
// Model text format
//
//   dim <n>
//   generator <kind> [params...]
//   polyline <name> <count>      followed by <count> vertex lines
//   points <name> <count>        loose samples, same layout
//   marked <label> <coords...>
//
// Entries named "base/..." carry the base continuum of a needle model.

inline constexpr const char* kBasePrefix = "base/";

namespace detail {

inline void write_point(std::ostream& os, const Point& p) {
  for (std::size_t k = 0; k < p.dim(); ++k) os << (k ? " " : "") << fmt17(p[k]);
  os << "\n";
}

inline void write_model_body(std::ostream& os, const ContinuumModel& m, const std::string& prefix) {
  for (const auto& [name, l] : m.pieces) {
    os << "polyline " << prefix << name << " " << l.vertices.size() << "\n";
    for (const Point& v : l.vertices) write_point(os, v);
  }
  for (const auto& [name, pts] : m.dust) {
    os << "points " << prefix << name << " " << pts.size() << "\n";
    for (const Point& v : pts) write_point(os, v);
  }
  for (const auto& [label, p] : m.marked) {
    os << "marked " << prefix << label << " ";
    write_point(os, p);
  }
}

inline bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace detail

inline std::string model_to_text(const ContinuumModel& m) {
  std::ostringstream os;
  os << "dim " << m.dim << "\n";
  if (!m.generator.empty()) {
    os << "generator";
    for (const auto& g : m.generator) os << " " << g;
    os << "\n";
  }
  detail::write_model_body(os, m, "");
  return os.str();
}

inline std::string needle_to_text(const NeedleModel& nm) {
  std::ostringstream os;
  os << model_to_text(nm.image);
  detail::write_model_body(os, nm.base, kBasePrefix);
  return os.str();
}

struct ParsedModel {
  ContinuumModel model;
  ContinuumModel base;  // empty unless the file stores a needle base
  double sharpness = 0.0;
};

/// Parses a model file. Needle files get their resampling capability back by
/// rebuilding the image from the stored base.
inline ParsedModel parse_model_file(const std::string& text) {
  ParsedModel out;
  ContinuumModel& m = out.model;
  ContinuumModel& base = out.base;
  bool have_dim = false;
  std::istringstream in(text);
  std::size_t line_no = 0;
  std::string line;
  auto next_point = [&](std::size_t dim) {
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = detail::tokens(line);
      if (t.empty()) continue;
      if (t.size() != dim)
        throw std::runtime_error("model line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(dim) + " coordinates");
      Point p(dim);
      for (std::size_t k = 0; k < dim; ++k) p[k] = detail::to_double(t[k], line_no);
      if (!p.is_finite()) throw std::runtime_error("model line " + std::to_string(line_no) + ": non-finite value");
      return p;
    }
    throw std::runtime_error("model: unexpected end of file");
  };
  auto count_of = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(s, &pos);
      if (pos != s.size() || v < 0) throw std::invalid_argument(s);
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      throw std::runtime_error("model line " + std::to_string(line_no) + ": bad count '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto t = detail::tokens(line);
    if (t.empty()) continue;
    const std::string where = "model line " + std::to_string(line_no) + ": ";
    if (t[0] == "dim") {
      if (t.size() != 2) throw std::runtime_error(where + "dim takes one value");
      const std::size_t d = count_of(t[1]);
      if (d < 1 || d > kMaxDim) throw std::runtime_error(where + "dimension out of range");
      m.dim = base.dim = d;
      have_dim = true;
      continue;
    }
    if (!have_dim) throw std::runtime_error(where + "'dim' must come first");
    if (t[0] == "generator") {
      m.generator.assign(t.begin() + 1, t.end());
    } else if (t[0] == "polyline" || t[0] == "points") {
      if (t.size() != 3) throw std::runtime_error(where + t[0] + " takes a name and a count");
      const std::size_t n = count_of(t[2]);
      std::vector<Point> pts;
      pts.reserve(n);
      for (std::size_t i = 0; i < n; ++i) pts.push_back(next_point(m.dim));
      const bool is_base = detail::has_prefix(t[1], kBasePrefix);
      ContinuumModel& dst = is_base ? base : m;
      const std::string name = is_base ? t[1].substr(std::string(kBasePrefix).size()) : t[1];
      if (t[0] == "polyline") {
        Polyline l{std::move(pts)};
        try {
          l.validate();
        } catch (const std::exception& e) {
          throw std::runtime_error(where + e.what());
        }
        dst.pieces.push_back({name, std::move(l)});
      } else {
        dst.dust.push_back({name, std::move(pts)});
      }
    } else if (t[0] == "marked") {
      if (t.size() != 2 + m.dim) throw std::runtime_error(where + "marked takes a label and coordinates");
      Point p(m.dim);
      for (std::size_t k = 0; k < m.dim; ++k) p[k] = detail::to_double(t[2 + k], line_no);
      if (detail::has_prefix(t[1], kBasePrefix))
        base.marked.insert_or_assign(t[1].substr(std::string(kBasePrefix).size()), p);
      else
        m.marked.insert_or_assign(t[1], p);
    } else {
      throw std::runtime_error(where + "unknown keyword '" + t[0] + "'");
    }
  }
  if (!have_dim) throw std::runtime_error("model: missing 'dim' line");
  if (m.pieces.empty() && m.dust.empty() && m.marked.empty()) throw std::runtime_error("model: no geometry");
  if (!m.generator.empty() && m.generator[0] == "needle") {
    if (m.generator.size() != 2) throw std::runtime_error("model: generator needle takes the sharpness");
    const double s = detail::to_double(m.generator[1], 0);
    if (base.pieces.empty()) throw std::runtime_error("model: needle file without base entries");
    try {
      detail::check_needle_base(base);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("model: ") + e.what());
    }
    m.refiner = [base, s](double d) { return needle_image_cloud(base, s, d); };
    out.sharpness = s;
  }
  return out;
}

inline ContinuumModel parse_model(const std::string& text) { return parse_model_file(text).model; }

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// Writes to a sibling temporary file, then renames it over the target.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Profile CSV

inline std::string profile_csv(const ChainMetricProfile& p) {
  std::string s = "epsilon,pitch,value\n";
  for (const auto& e : p.entries)
    s += detail::fmt17(e.epsilon) + "," + detail::fmt17(e.pitch) + "," +
         (e.value ? detail::fmt17(*e.value) : std::string()) + "\n";
  return s;
}

inline std::string verdict_line(const ProfileVerdict& v) {
  std::string s = std::string("verdict=") + to_string(v.kind);
  switch (v.kind) {
    case VerdictKind::diverges: s += " slope=" + detail::fmt17(v.slope); break;
    case VerdictKind::converges: s += " limit=" + detail::fmt17(v.limit); break;
    case VerdictKind::inconclusive: s += " note=\"" + v.note + "\""; break;
  }
  return s;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out(1);
    for (char c : l) {
      if (c == ',') out.emplace_back();
      else if (c != '\r') out.back() += c;
    }
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("verdict=", 0) == 0) continue;
    if (t.header.empty()) t.header = split(line);
    else t.rows.push_back(split(line));
  }
  if (t.header.empty()) throw std::runtime_error("csv: empty input");
  for (const auto& r : t.rows)
    if (r.size() != t.header.size()) throw std::runtime_error("csv: ragged row");
  return t;
}

// ---------------------------------------------------------------------------
// SVG

inline constexpr int kSvgSize = 1000;
inline constexpr double kSvgMargin = 40.0;

namespace detail {

struct Frame {
  double x0, y0, scale;
  double px(double x) const { return kSvgMargin + (x - x0) * scale; }
  double py(double y) const { return kSvgSize - kSvgMargin - (y - y0) * scale; }
};

inline Frame fit_frame(double xmin, double xmax, double ymin, double ymax) {
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-300});
  const double scale = (kSvgSize - 2 * kSvgMargin) / span;
  // Center the shorter axis.
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  return {cx - 0.5 * span, cy - 0.5 * span, scale};
}

inline std::string px_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline std::string svg_open() {
  const std::string n = std::to_string(kSvgSize);
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + n + "\" height=\"" + n +
         "\" viewBox=\"0 0 " + n + " " + n + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace detail

/// Planar projection (first two coordinates) of the model: pieces as paths,
/// loose samples as dots, marked points as labelled circles.
inline std::string model_svg(const ContinuumModel& m) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto grow = [&](const Point& p) {
    const double y = p.dim() > 1 ? p[1] : 0.0;
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& [n, l] : m.pieces)
    for (const Point& v : l.vertices) grow(v);
  for (const auto& [n, pts] : m.dust)
    for (const Point& v : pts) grow(v);
  for (const auto& [n, p] : m.marked) grow(p);
  const auto fr = detail::fit_frame(xmin, xmax, ymin, ymax);
  auto X = [&](const Point& p) { return fr.px(p[0]); };
  auto Y = [&](const Point& p) { return fr.py(p.dim() > 1 ? p[1] : 0.0); };

  std::string s = detail::svg_open();
  for (const auto& [name, l] : m.pieces) {
    s += "<path id=\"" + detail::svg_escape(name) + "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.8\" d=\"";
    double lx = 0, ly = 0;
    for (std::size_t i = 0; i < l.vertices.size(); ++i) {
      const double x = X(l.vertices[i]), y = Y(l.vertices[i]);
      const bool last = i + 1 == l.vertices.size();
      if (i > 0 && !last && std::abs(x - lx) < 0.25 && std::abs(y - ly) < 0.25) continue;
      s += (i == 0 ? "M" : " L") + detail::px_text(x) + " " + detail::px_text(y);
      lx = x;
      ly = y;
    }
    s += "\"/>\n";
  }
  for (const auto& [name, pts] : m.dust) {
    s += "<g id=\"" + detail::svg_escape(name) + "\" fill=\"black\">\n";
    for (const Point& p : pts)
      s += "<circle cx=\"" + detail::px_text(X(p)) + "\" cy=\"" + detail::px_text(Y(p)) + "\" r=\"0.6\"/>\n";
    s += "</g>\n";
  }
  for (const auto& [label, p] : m.marked) {
    s += "<circle cx=\"" + detail::px_text(X(p)) + "\" cy=\"" + detail::px_text(Y(p)) +
         "\" r=\"4\" fill=\"red\"/>\n";
    s += "<text x=\"" + detail::px_text(X(p) + 6) + "\" y=\"" + detail::px_text(Y(p) - 6) +
         "\" font-family=\"sans-serif\" font-size=\"14\">" + detail::svg_escape(label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Log-log plot of a profile CSV (value against epsilon).
inline std::string profile_svg(const CsvTable& t) {
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) return i;
    throw std::runtime_error("csv: missing column '" + name + "'");
  };
  const std::size_t ce = col("epsilon"), cv = col("value");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows) {
    if (r[cv].empty()) continue;
    const double e = detail::to_double(r[ce], 0), v = detail::to_double(r[cv], 0);
    if (!(e > 0.0 && v > 0.0)) throw std::runtime_error("csv: log plot needs positive values");
    pts.emplace_back(std::log10(e), std::log10(v));
  }
  if (pts.empty()) throw std::runtime_error("csv: no connected entries to plot");
  double xmin = pts[0].first, xmax = xmin, ymin = pts[0].second, ymax = ymin;
  for (const auto& [x, y] : pts) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const auto fr = detail::fit_frame(xmin, xmax, ymin, ymax);
  std::string s = detail::svg_open();
  s += "<path fill=\"none\" stroke=\"gray\" d=\"M" + detail::px_text(kSvgMargin) + " " +
       detail::px_text(kSvgSize - kSvgMargin) + " L" + detail::px_text(kSvgSize - kSvgMargin) + " " +
       detail::px_text(kSvgSize - kSvgMargin) + " M" + detail::px_text(kSvgMargin) + " " +
       detail::px_text(kSvgSize - kSvgMargin) + " L" + detail::px_text(kSvgMargin) + " " +
       detail::px_text(kSvgMargin) + "\"/>\n";
  s += "<path fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" d=\"";
  for (std::size_t i = 0; i < pts.size(); ++i)
    s += (i ? " L" : "M") + detail::px_text(fr.px(pts[i].first)) + " " + detail::px_text(fr.py(pts[i].second));
  s += "\"/>\n";
  for (const auto& [x, y] : pts)
    s += "<circle cx=\"" + detail::px_text(fr.px(x)) + "\" cy=\"" + detail::px_text(fr.py(y)) +
         "\" r=\"3\" fill=\"black\"/>\n";
  s += "<text x=\"" + detail::px_text(kSvgSize / 2.0) + "\" y=\"" + detail::px_text(kSvgSize - 10.0) +
       "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">log10 epsilon</text>\n";
  s += "<text x=\"12\" y=\"" + detail::px_text(kSvgSize / 2.0) +
       "\" font-family=\"sans-serif\" font-size=\"14\">log10 value</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace ifsc
