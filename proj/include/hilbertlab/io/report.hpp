#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "hilbertlab/errors.hpp"

namespace hilbertlab::io {

using json = nlohmann::ordered_json;

template <typename Derived>
json to_json(const Eigen::MatrixBase<Derived>& m) {
  json out = json::array();
  if (m.cols() == 1) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, 0));
    return out;
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

/// Every number must be finite; a NaN or Inf means a computation failed silently.
inline void require_finite(const json& j, const std::string& path = "$") {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    fail(ErrorKind::NoConvergence, "non-finite value at " + path);
  if (j.is_object())
    for (auto it = j.begin(); it != j.end(); ++it) require_finite(it.value(), path + "." + it.key());
  if (j.is_array())
    for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], path + "[" + std::to_string(i) + "]");
}

/// Complete-or-absent: write to a sibling temporary, then rename over the target.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  }
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  Csv& row(const std::vector<double>& values) {
    std::vector<std::string> s;
    for (double v : values) {
      if (!std::isfinite(v)) fail(ErrorKind::NoConvergence, "non-finite value in table");
      s.push_back(format_number(v));
    }
    return row_strings(s);
  }

  Csv& row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) fail(ErrorKind::InvalidInput, "csv row has the wrong width");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (quote) {
        text_ += '"';
        for (char c : cells[i]) text_ += c == '"' ? std::string("\"\"") : std::string(1, c);
        text_ += '"';
      } else {
        text_ += cells[i];
      }
    }
    text_ += '\n';
    return *this;
  }

  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t cols_;
  std::string text_;
};

struct Polyline {
  std::vector<Eigen::Vector2d> points;
  bool closed = false;
  std::string stroke = "#1f4e9c";
  double width = 1.0;  // in units of 1/500 of the view size
};

struct SvgScene {
  Polyline boundary;                 // the domain boundary, fits the viewBox
  std::vector<Polyline> curves;
  std::vector<Eigen::Vector2d> markers;
  std::string title;
};

/// Standalone SVG 1.1 with a viewBox fitted to the boundary plus a 5% margin.
/// Mathematical orientation: the y axis points up via a group transform.
inline std::string render_svg(const SvgScene& scene) {
  if (scene.boundary.points.size() < 3) fail(ErrorKind::InvalidInput, "boundary polyline too short");
  Eigen::Vector2d lo = scene.boundary.points[0], hi = lo;
  for (const auto& p : scene.boundary.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector2d span = hi - lo;
  const double margin = 0.05 * span.maxCoeff();
  lo.array() -= margin;
  hi.array() += margin;
  const double size = (hi - lo).maxCoeff();
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"500\" height=\""
     << f(500.0 * (hi.y() - lo.y()) / (hi.x() - lo.x())) << "\" viewBox=\"" << f(lo.x()) << ' ' << f(-hi.y()) << ' '
     << f(hi.x() - lo.x()) << ' ' << f(hi.y() - lo.y()) << "\">\n";
  if (!scene.title.empty()) {
    std::string t;
    for (char c : scene.title) t += c == '<' ? "&lt;" : c == '&' ? "&amp;" : std::string(1, c);
    os << "<title>" << t << "</title>\n";
  }
  os << "<g transform=\"scale(1,-1)\" fill=\"none\" stroke-linejoin=\"round\">\n";
  auto line = [&](const Polyline& pl, const char* id) {
    os << '<' << (pl.closed ? "polygon" : "polyline") << " id=\"" << id << "\" stroke=\"" << pl.stroke
       << "\" stroke-width=\"" << f(pl.width * size / 500.0) << "\" points=\"";
    for (std::size_t i = 0; i < pl.points.size(); ++i)
      os << (i ? " " : "") << f(pl.points[i].x()) << ',' << f(pl.points[i].y());
    os << "\"/>\n";
  };
  line(scene.boundary, "boundary");
  for (std::size_t i = 0; i < scene.curves.size(); ++i) line(scene.curves[i], ("curve" + std::to_string(i)).c_str());
  for (const auto& m : scene.markers)
    os << "<circle class=\"marker\" cx=\"" << f(m.x()) << "\" cy=\"" << f(m.y()) << "\" r=\"" << f(0.006 * size)
       << "\" fill=\"#c0392b\" stroke=\"none\"/>\n";
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace hilbertlab::io
