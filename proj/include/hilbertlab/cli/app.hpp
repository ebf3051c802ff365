#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "hilbertlab/barycenter.hpp"
#include "hilbertlab/bound.hpp"
#include "hilbertlab/domain.hpp"
#include "hilbertlab/eccentricity.hpp"
#include "hilbertlab/entropy.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/foliation.hpp"
#include "hilbertlab/group.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "hilbertlab/io/report.hpp"

namespace hilbertlab::cli {

inline constexpr const char* kVersion = "0.1.0";

using io::json;

struct Options {
  // common
  std::string domain = "ellipse";
  int dim = 2;
  std::uint64_t seed = 0;
  std::string out, csv, svg;
  bool profile = false;
  double busemann_tol = 1e-9;
  double barycenter_tol = 1e-9;
  // points and specs
  std::string x, y, v, p, xi, xi_dir, o, a, atoms, weights, points, group;
  std::string target = "ellipse", config, family, ellipsoid = "john";
  // numbers
  double radius = 1.0, alpha = 0.0, rmin = 0.0, rmax = 0.0, h = 1e-4;
  double entropy = -1.0, eccentricity = 0.0, exponent = 0.0, step = 0.5, grid_rmax = 3.0;
  int samples = 256, max_len = 14, shards = 1, refine = 0, directions = 512, grid = 6, leaves = 9, map_atoms = 512;
};

class Profiler {
 public:
  explicit Profiler(bool on) : on_(on) {}
  template <typename F>
  auto time(const std::string& phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(phase, t0);
    } else {
      auto r = f();
      record(phase, t0);
      return r;
    }
  }
  void report(std::ostream& err) const {
    if (!on_) return;
    for (const auto& [k, s] : phases_) err << "profile " << k << ' ' << s << " s\n";
  }

 private:
  void record(const std::string& phase, std::chrono::steady_clock::time_point t0) {
    phases_.emplace_back(phase, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  bool on_;
  std::vector<std::pair<std::string, double>> phases_;
};

/// What a subcommand produced; json fields go next to the header.
struct Output {
  json result = json::object();
  std::optional<std::string> csv;
  std::optional<io::SvgScene> svg;
  int exit_code = 0;
};

namespace detail {

template <int N>
Vec<N> point(const std::string& s, const char* what) {
  if (s.empty()) fail(ErrorKind::InvalidInput, std::string("missing --") + what);
  const auto v = hilbertlab::detail::parse_list(s);
  if (static_cast<int>(v.size()) != N)
    fail(ErrorKind::InvalidInput, std::string("--") + what + " needs " + std::to_string(N) + " coordinates");
  Vec<N> out;
  for (int i = 0; i < N; ++i) out(i) = v[i];
  return out;
}

template <int N>
Vec<N> point_or_zero(const std::string& s, const char* what) {
  return s.empty() ? Vec<N>(Vec<N>::Zero()) : point<N>(s, what);
}

template <int N>
std::vector<Vec<N>> point_list(const std::string& s, const char* what) {
  std::vector<Vec<N>> out;
  for (const auto& part : hilbertlab::detail::split(s, ';'))
    if (!part.empty()) out.push_back(point<N>(part, what));
  if (out.empty()) fail(ErrorKind::InvalidInput, std::string("--") + what + " is empty");
  return out;
}

template <int N>
std::shared_ptr<const Ellipsoid<N>> ellipsoid(const std::string& spec) {
  auto d = std::dynamic_pointer_cast<const Ellipsoid<N>>(parse_domain<N>(spec));
  if (!d) fail(ErrorKind::InvalidInput, "'" + spec + "' is not an ellipsoid");
  return d;
}

template <int N>
Vec<N> boundary_point(const ConvexDomain<N>& omega, const Options& o) {
  if (!o.xi.empty() && !o.xi_dir.empty()) fail(ErrorKind::InvalidInput, "give --xi or --xi-dir, not both");
  if (!o.xi_dir.empty()) {
    const Vec<N> u = point<N>(o.xi_dir, "xi-dir");
    if (!(u.norm() > 0.0)) fail(ErrorKind::InvalidInput, "--xi-dir must be nonzero");
    return radial_boundary_point(omega, u);
  }
  return point<N>(o.xi, "xi");
}

inline io::Polyline boundary_polyline(const ConvexDomain<2>& omega, int samples = 512) {
  io::Polyline pl;
  pl.closed = true;
  pl.stroke = "#000000";
  for (int k = 0; k < samples; ++k) pl.points.push_back(radial_boundary_point(omega, direction<2>(k, samples)));
  return pl;
}

inline json entropy_json(const EntropyEstimate& e) {
  json j;
  j["value"] = e.value;
  j["stderr"] = e.stderr_;
  j["raw_slope"] = e.raw_slope;
  j["method"] = e.method;
  j["radii"] = e.radii;
  j[e.method == "orbit-count" ? "counts" : "volumes"] = e.sizes;
  j["warning"] = e.warning;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

template <int N>
json bound_point_json(const BoundPoint<N>& p) {
  json j;
  j["a"] = io::to_json(p.a);
  j["image"] = io::to_json(p.image);
  j["J"] = io::to_json(p.J);
  j["jac"] = p.jac;
  j["bound"] = p.bound;
  j["margin"] = p.margin;
  j["c_local"] = p.c_local;
  j["homothety_residual"] = p.residual;
  j["homothety"] = p.homothety;
  return j;
}

template <int N>
NaturalMap<N> natural_map(const Options& o, std::shared_ptr<const ConvexDomain<N>> source, double alpha) {
  auto target = ellipsoid<N>(o.target);
  auto m = make_natural_map<N>(source, target, alpha, o.map_atoms);
  m.family.busemann_options.tol = o.busemann_tol;
  m.barycenter_options.tol = o.barycenter_tol;
  return m;
}

// ---- subcommands ----

template <int N>
Output cmd_dist(const Options& o, Profiler&) {
  const auto omega = parse_domain<N>(o.domain);
  Output out;
  out.result["distance"] = hilbert_distance(*omega, point<N>(o.x, "x"), point<N>(o.y, "y"));
  return out;
}

template <int N>
Output cmd_norm(const Options& o, Profiler&) {
  const auto omega = parse_domain<N>(o.domain);
  Output out;
  out.result["norm"] = finsler_norm(*omega, point<N>(o.x, "x"), point<N>(o.v, "v"));
  return out;
}

template <int N>
Output cmd_busemann(const Options& o, Profiler& prof) {
  const auto omega = parse_domain<N>(o.domain);
  BusemannOptions bo;
  bo.tol = o.busemann_tol;
  const Vec<N> xi = boundary_point(*omega, o);
  Output out;
  out.result["xi"] = io::to_json(xi);
  out.result["busemann"] = prof.time("busemann", [&] {
    return busemann(*omega, point_or_zero<N>(o.p, "p"), point<N>(o.x, "x"), xi, bo);
  });
  return out;
}

template <int N>
Output cmd_ball(const Options& o, Profiler& prof) {
  const auto omega = parse_domain<N>(o.domain);
  const Vec<N> c = point_or_zero<N>(o.o, "o");
  require_inside(*omega, c, "o");
  if (!(o.radius >= 0.0)) fail(ErrorKind::InvalidInput, "--radius must be >= 0");
  Output out;
  out.result["radius"] = o.radius;
  out.result["volume"] = o.radius == 0.0 ? 0.0 : prof.time("ball_volume", [&] { return ball_volume(*omega, c, o.radius); });
  if constexpr (N == 2) {
    io::SvgScene scene;
    scene.boundary = boundary_polyline(*omega);
    scene.title = "Hilbert ball of radius " + io::format_number(o.radius);
    if (o.radius == 0.0) {
      scene.markers.push_back(c);
    } else {
      io::Polyline pl;
      pl.closed = true;
      io::Csv table({"x", "y"});
      for (int k = 0; k < o.samples; ++k) {
        const Vec<2> u = direction<2>(k, o.samples);
        const Vec<2> mu = -u;
        const double tp = omega->exit_distance(c, u), tm = omega->exit_distance(c, mu);
        const Vec<2> q = c + hilbertlab::detail::chord_radius(tp, tm, o.radius) * u;
        pl.points.push_back(q);
        table.row({q(0), q(1)});
      }
      scene.curves.push_back(pl);
      out.csv = table.str();
    }
    out.svg = scene;
  }
  return out;
}

inline Output cmd_horosphere(const Options& o, Profiler& prof) {
  const auto omega = parse_domain<2>(o.domain);
  const Vec<2> xi = boundary_point(*omega, o);
  const Vec<2> p = point_or_zero<2>(o.p, "p");
  const auto pts = prof.time("horosphere", [&] { return horosphere_polyline(*omega, xi, p, o.samples); });
  Output out;
  out.result["xi"] = io::to_json(xi);
  json arr = json::array();
  io::Csv table({"x", "y"});
  io::Polyline pl;
  // the fan opens at xi, and so does the drawn curve
  pl.points.push_back(xi);
  for (const auto& q : pts) {
    arr.push_back(io::to_json(q));
    table.row({q(0), q(1)});
    pl.points.push_back(q);
  }
  pl.closed = true;
  out.result["points"] = arr;
  out.csv = table.str();
  io::SvgScene scene;
  scene.boundary = boundary_polyline(*omega);
  scene.curves.push_back(pl);
  scene.markers.push_back(xi);
  scene.title = "horosphere";
  out.svg = scene;
  return out;
}

template <int N>
Output cmd_barycenter(const Options& o, Profiler& prof) {
  const auto E = ellipsoid<N>(o.domain);
  const auto pts = point_list<N>(o.atoms, "atoms");
  std::vector<double> w(pts.size(), 1.0 / pts.size());
  if (!o.weights.empty()) {
    w = hilbertlab::detail::parse_list(o.weights);
    if (w.size() != pts.size()) fail(ErrorKind::InvalidInput, "--weights and --atoms differ in length");
  }
  BoundaryMeasure<N> nu;
  for (std::size_t i = 0; i < pts.size(); ++i) nu.atoms.push_back({pts[i], w[i]});
  BarycenterOptions bo;
  bo.tol = o.barycenter_tol;
  BarycenterResult info;
  const Vec<N> b = prof.time("barycenter", [&] { return barycenter(*E, nu, bo, &info); });
  Output out;
  out.result["barycenter"] = io::to_json(b);
  out.result["iterations"] = info.iterations;
  out.result["gradient_norm"] = info.gradient_norm;
  return out;
}

template <int N>
Output cmd_naturalmap(const Options& o, Profiler& prof) {
  const auto source = parse_domain<N>(o.domain);
  const double alpha = o.alpha > 0.0 ? o.alpha : N - 1.0;
  const auto Phi = natural_map<N>(o, source, alpha);
  Output out;
  out.result["alpha"] = alpha;
  if (!o.a.empty()) {
    const Vec<N> a = point<N>(o.a, "a");
    out.result["a"] = io::to_json(a);
    out.result["image"] = io::to_json(prof.time("natural_map", [&] { return Phi(a); }));
    return out;
  }
  if constexpr (N != 2) {
    fail(ErrorKind::InvalidInput, "grid figures are two-dimensional; give --a");
  } else {
    // images of a Hilbert-polar grid: o.grid circles and 2 o.grid rays, radii up to 2
    const int rings = o.grid, rays = 2 * o.grid, per = 24;
    if (rings < 1 || rings > 40) fail(ErrorKind::InvalidInput, "--grid must be in [1, 40]");
    auto at = [&](double r, double ang) {
      const Vec<2> u(std::cos(ang), std::sin(ang));
      const Vec<2> mu = -u;
      const double tp = source->exit_distance(Vec<2>::Zero(), u), tm = source->exit_distance(Vec<2>::Zero(), mu);
      return Vec<2>(hilbertlab::detail::chord_radius(tp, tm, r) * u);
    };
    std::vector<std::vector<Vec<2>>> lines;
    for (int i = 1; i <= rings; ++i) {
      std::vector<Vec<2>> ring;
      for (int k = 0; k < per * 2; ++k) ring.push_back(at(2.0 * i / rings, std::numbers::pi * k / per));
      lines.push_back(ring);
    }
    for (int k = 0; k < rays; ++k) {
      std::vector<Vec<2>> ray{Vec<2>::Zero()};
      for (int i = 1; i <= per; ++i) ray.push_back(at(2.0 * i / per, 2.0 * std::numbers::pi * k / rays));
      lines.push_back(ray);
    }
    std::vector<Vec<2>> flat;
    for (const auto& l : lines) flat.insert(flat.end(), l.begin(), l.end());
    std::vector<Vec<2>> img(flat.size());
    prof.time("natural_map", [&] { num::parallel_for(flat.size(), [&](std::size_t i) { img[i] = Phi(flat[i]); }); });
    io::SvgScene scene;
    scene.boundary = boundary_polyline(*Phi.target);
    scene.title = "natural map grid";
    io::Csv table({"line", "a_x", "a_y", "phi_x", "phi_y"});
    std::size_t idx = 0;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      io::Polyline pl;
      pl.closed = l < static_cast<std::size_t>(rings);
      for (std::size_t k = 0; k < lines[l].size(); ++k, ++idx) {
        pl.points.push_back(img[idx]);
        table.row({static_cast<double>(l), flat[idx](0), flat[idx](1), img[idx](0), img[idx](1)});
      }
      scene.curves.push_back(pl);
    }
    out.result["grid_points"] = flat.size();
    out.csv = table.str();
    out.svg = scene;
  }
  return out;
}

template <int N>
Output cmd_jacobian(const Options& o, Profiler& prof) {
  const auto source = parse_domain<N>(o.domain);
  const double alpha = o.alpha > 0.0 ? o.alpha : N - 1.0;
  const auto Phi = natural_map<N>(o, source, alpha);
  const Vec<N> a = point<N>(o.a, "a");
  const auto r = prof.time("jacobian", [&] { return jacobian_at(Phi, a, o.h); });
  Output out;
  out.result["alpha"] = alpha;
  out.result["a"] = io::to_json(a);
  out.result["image"] = io::to_json(r.image);
  out.result["J"] = io::to_json(r.J);
  out.result["det"] = r.det;
  out.result["jac"] = r.jac;
  out.result["agreement"] = r.agreement;
  return out;
}

template <int N>
std::pair<double, double> window(const Options& o) {
  if (o.rmin == 0.0 && o.rmax == 0.0) return default_entropy_window<N>();
  return {o.rmin, o.rmax};
}

template <int N>
Output cmd_entropy(const Options& o, Profiler& prof) {
  const auto omega = parse_domain<N>(o.domain);
  const auto [lo, hi] = window<N>(o);
  BallVolumeOptions vo;
  vo.density.seed = o.seed;
  const auto e = prof.time("ball_volumes", [&] { return volume_entropy_estimate(*omega, point_or_zero<N>(o.o, "o"), lo, hi, vo); });
  Output out;
  out.result = entropy_json(e);
  io::Csv table({"radius", "volume"});
  for (std::size_t i = 0; i < e.radii.size(); ++i) table.row({e.radii[i], e.sizes[i]});
  out.csv = table.str();
  return out;
}

inline Output cmd_delta(const Options& o, Profiler& prof) {
  const auto g = parse_group(o.group.empty() ? "triangle:2,3,7" : o.group);
  const Vec<2> base = o.o.empty() ? g.basepoint : point<2>(o.o, "o");
  CriticalExponentOptions co;
  co.orbit.shards = o.shards;
  co.seed = o.seed;
  const auto rep = prof.time("orbit", [&] { return critical_exponent_estimate(g, base, o.max_len, co); });
  Output out;
  out.result = entropy_json(rep.estimate);
  out.result["group"] = g.name;
  out.result["basepoint"] = io::to_json(base);
  out.result["max_word_len"] = o.max_len;
  out.result["certified_radius"] = rep.certified_radius;
  out.result["orbit_size"] = rep.orbit_size;
  out.result["shell_sizes"] = rep.shell_sizes;
  io::Csv table({"word_length", "new_points"});
  for (std::size_t i = 0; i < rep.shell_sizes.size(); ++i)
    table.row({static_cast<double>(i), static_cast<double>(rep.shell_sizes[i])});
  out.csv = table.str();
  return out;
}

template <int N>
EccentricityOptions ecc_options(const Options& o) {
  EccentricityOptions eo;
  eo.directions = o.directions;
  eo.method = parse_ellipsoid_method(o.ellipsoid);
  return eo;
}

template <int N>
EccentricityGrid<N> ecc_grid(const Options& o) {
  EccentricityGrid<N> g;
  g.o = point_or_zero<N>(o.o, "o");
  g.rmax = o.grid_rmax;
  g.step = o.step;
  g.refine = o.refine;
  g.exponent = o.exponent > 0.0 ? o.exponent : N;
  return g;
}

template <int N>
Output cmd_eccentricity(const Options& o, Profiler& prof) {
  const auto omega = parse_domain<N>(o.domain);
  const auto eo = ecc_options<N>(o);
  Output out;
  out.result["method"] = to_string(eo.method);
  if (!o.p.empty()) {
    const Vec<N> p = point<N>(o.p, "p");
    const auto loc = prof.time("eccentricity_local", [&] { return eccentricity_local_report(*omega, p, eo); });
    out.result["p"] = io::to_json(p);
    out.result["c"] = loc.c;
    out.result["john_shape"] = io::to_json(loc.shape);
    out.result["worst"] = io::to_json(loc.worst);
    return out;
  }
  const auto g = ecc_grid<N>(o);
  const auto rep = prof.time("eccentricity_grid", [&] { return eccentricity_global(*omega, g, eo); });
  out.result["value"] = rep.value;
  out.result["sup_c"] = rep.sup_c;
  out.result["exponent"] = rep.exponent;
  out.result["definition"] = "(sup_p c(p))^exponent";
  out.result["argmax"] = io::to_json(rep.points[rep.argmax]);
  out.result["grid"] = {{"points", rep.points.size()}, {"rmax", rep.rmax}, {"step", rep.step},
                        {"refine", rep.refine}, {"realized_spacing", rep.spacing}};
  std::vector<std::string> head{"radius"};
  for (int i = 0; i < N; ++i) head.push_back(std::string(1, "xyz"[i]));
  head.push_back("c");
  io::Csv table(head);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    std::vector<double> row{rep.radii[i]};
    for (int k = 0; k < N; ++k) row.push_back(rep.points[i](k));
    row.push_back(rep.c[i]);
    table.row(row);
  }
  out.csv = table.str();
  return out;
}

template <int N>
Output cmd_bound(const Options& o, Profiler& prof) {
  const auto source = parse_domain<N>(o.domain);
  BoundConfig cfg;
  cfg.local = ecc_options<N>(o);
  if (o.entropy >= 0.0) {
    cfg.entropy = o.entropy;
  } else {
    const auto [lo, hi] = window<N>(o);
    BallVolumeOptions vo;
    vo.density.seed = o.seed;
    cfg.entropy = prof.time("entropy", [&] { return volume_entropy_estimate(*source, Vec<N>::Zero(), lo, hi, vo).value; });
  }
  const auto g = ecc_grid<N>(o);
  cfg.eccentricity_definition = "(sup_p c(p))^" + io::format_number(g.exponent) + ", " + to_string(cfg.local.method);
  if (o.eccentricity > 0.0) {
    cfg.eccentricity = o.eccentricity;
    cfg.eccentricity_definition = "given";
  } else {
    cfg.eccentricity = prof.time("eccentricity", [&] { return eccentricity_global(*source, g, cfg.local).value; });
  }
  cfg.jacobian_step = o.h;
  const double alpha = o.alpha > 0.0 ? o.alpha : cfg.entropy;
  const auto Phi = natural_map<N>(o, source, alpha);
  const auto pts = o.points.empty() ? default_bound_points(*source) : point_list<N>(o.points, "points");
  const auto rep = prof.time("jacobians", [&] { return bound_check(Phi, pts, cfg); });
  Output out;
  out.result["alpha"] = alpha;
  out.result["entropy"] = rep.entropy;
  out.result["h0"] = rep.h0;
  out.result["eccentricity"] = rep.eccentricity;
  out.result["eccentricity_definition"] = rep.eccentricity_definition;
  out.result["bound"] = rep.bound;
  out.result["min_margin"] = rep.min_margin;
  json arr = json::array();
  for (const auto& p : rep.points) arr.push_back(bound_point_json(p));
  out.result["points"] = arr;
  std::vector<std::string> head;
  for (int i = 0; i < N; ++i) head.push_back(std::string("a_") + "xyz"[i]);
  for (const char* s : {"jac", "bound", "margin", "c_local", "homothety"}) head.push_back(s);
  io::Csv table(head);
  for (const auto& p : rep.points) {
    std::vector<double> row;
    for (int i = 0; i < N; ++i) row.push_back(p.a(i));
    row.insert(row.end(), {p.jac, p.bound, p.margin, p.c_local, p.homothety ? 1.0 : 0.0});
    table.row(row);
  }
  out.csv = table.str();
  return out;
}

template <int N>
Output foliate_dim(const FoliationSpec& spec, Profiler& prof) {
  const auto rep = prof.time("leaves", [&] { return foliated_inequality<N>(spec); });
  const auto verdict = rigidity_diagnosis(rep);
  Output out;
  out.result["note"] = rep.note;
  if (!rep.dimension_note.empty()) out.result["dimension_note"] = rep.dimension_note;
  out.result["dimension"] = rep.dimension;
  out.result["topology"] = rep.topology;
  out.result["transverse_mass"] = rep.transverse_mass;
  out.result["eccentricity_definition"] = rep.eccentricity_definition;
  out.result["lhs"] = rep.lhs;
  out.result["rhs"] = rep.rhs;
  out.result["rhs_minus_lhs"] = rep.gap;
  out.result["verdict"] = verdict.verdict;
  out.result["max_margin_leaf"] = verdict.max_margin_leaf;
  out.result["offending_leaves"] = verdict.offending;
  json leaves = json::array();
  io::Csv table({"t", "q", "W", "domain", "h", "h_stderr", "eccentricity", "sup_c", "min_jac_margin", "homothety",
                 "lhs_term", "rhs_term"});
  for (const auto& l : rep.leaves) {
    json j;
    j["t"] = l.t;
    j["q"] = l.q;
    j["W"] = l.W;
    j["domain"] = l.domain;
    j["h"] = l.h.value;
    j["h_stderr"] = l.h.stderr_;
    j["eccentricity"] = l.e;
    j["sup_c"] = l.sup_c;
    j["bound"] = l.bound;
    j["min_jac_margin"] = l.min_margin;
    j["homothety"] = l.homothety;
    json jac = json::array();
    for (const auto& p : l.jac) jac.push_back(bound_point_json(p));
    j["jac"] = jac;
    leaves.push_back(j);
    auto num = [](double v) { return io::format_number(v); };
    table.row_strings({num(l.t), num(l.q), num(l.W), l.domain, num(l.h.value), num(l.h.stderr_), num(l.e),
                       num(l.sup_c), num(l.min_margin), l.homothety ? "true" : "false", num(l.lhs), num(l.rhs)});
  }
  out.result["leaves"] = leaves;
  out.csv = table.str();
  return out;
}

inline Output cmd_foliate(const Options& o, Profiler& prof) {
  FoliationSpec spec;
  if (!o.config.empty()) {
    if (!o.family.empty()) fail(ErrorKind::InvalidInput, "give --config or --family, not both");
    spec = load_foliation(o.config);
  } else if (o.family == "pball-sine") {
    spec = pball_sine_family(o.leaves, o.dim);
  } else if (o.family == "ellipse") {
    spec = constant_ellipse_family(std::vector<double>(o.leaves, 1.0 / o.leaves), {}, o.dim);
  } else {
    fail(ErrorKind::InvalidInput, "foliate needs --config or --family pball-sine|ellipse");
  }
  if (o.config.empty()) {
    spec.seed = o.seed;
    spec.ellipsoid = parse_ellipsoid_method(o.ellipsoid);
    spec.eccentricity_exponent = o.exponent;
    spec.map_atoms = o.map_atoms;
  }
  if (o.leaves < 2 && o.config.empty()) fail(ErrorKind::InvalidInput, "--leaves must be >= 2");
  return spec.dimension == 2 ? foliate_dim<2>(spec, prof) : foliate_dim<3>(spec, prof);
}

template <int N>
Output cmd_audit(const Options& o, Profiler& prof) {
  Output out;
  bool pass = true;
  json conv;
  try {
    const auto omega = parse_domain<N>(o.domain);
    const auto rep = prof.time("convexity_audit", [&] { return convexity_audit(*omega, std::max(100, o.samples), o.seed); });
    conv["pass"] = true;
    conv["samples"] = rep.samples;
    conv["min_margin"] = rep.min_margin;
    conv["min_gradient"] = rep.min_gradient;
    if (rep.min_curvature) conv["min_curvature"] = *rep.min_curvature;
  } catch (const AuditFailed& e) {
    pass = false;
    conv["pass"] = false;
    conv["failure"] = e.report().failure;
    conv["offending"] = e.report().offending;
  }
  out.result["convexity"] = conv;
  if constexpr (N == 2) {
    if (!o.group.empty()) {
      json gj;
      try {
        const auto g = parse_group(o.group);
        const auto rep = prof.time("group_audit", [&] { return group_audit(g, o.seed); });
        gj["pass"] = true;
        gj["max_distance_error"] = rep.max_distance_error;
        gj["max_involution_error"] = rep.max_involution_error;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput && std::string(e.what()).find("not involutions") == std::string::npos) throw;
        pass = false;
        gj["pass"] = false;
        gj["failure"] = e.what();
      }
      out.result["group"] = gj;
    }
  }
  out.result["pass"] = pass;
  out.exit_code = pass ? 0 : 1;
  return out;
}

template <int N>
Output dispatch(const std::string& sub, const Options& o, Profiler& prof) {
  if (sub == "dist") return cmd_dist<N>(o, prof);
  if (sub == "norm") return cmd_norm<N>(o, prof);
  if (sub == "busemann") return cmd_busemann<N>(o, prof);
  if (sub == "ball") return cmd_ball<N>(o, prof);
  if (sub == "barycenter") return cmd_barycenter<N>(o, prof);
  if (sub == "naturalmap") return cmd_naturalmap<N>(o, prof);
  if (sub == "jacobian") return cmd_jacobian<N>(o, prof);
  if (sub == "entropy") return cmd_entropy<N>(o, prof);
  if (sub == "eccentricity") return cmd_eccentricity<N>(o, prof);
  if (sub == "bound") return cmd_bound<N>(o, prof);
  if (sub == "audit") return cmd_audit<N>(o, prof);
  if (sub == "foliate") return cmd_foliate(o, prof);
  if (sub == "horosphere" || sub == "delta") {
    if (N != 2) fail(ErrorKind::InvalidInput, sub + " is two-dimensional");
    return sub == "delta" ? cmd_delta(o, prof) : cmd_horosphere(o, prof);
  }
  fail(ErrorKind::InvalidInput, "unknown subcommand '" + sub + "'");
}

inline void add_common(CLI::App* s, Options& o) {
  s->add_option("--domain", o.domain, "ellipse[:a,..] | pball:p[:a,..] | perturbed:eps,phi[;eps,phi..]");
  s->add_option("--dim", o.dim, "dimension (2 or 3)")->check(CLI::IsMember({2, 3}));
  s->add_option("--seed", o.seed, "64-bit seed");
  s->add_option("--out", o.out, "JSON output path (default: stdout)");
  s->add_option("--csv", o.csv, "CSV table output path");
  s->add_option("--svg", o.svg, "SVG figure output path (n = 2)");
  s->add_flag("--profile", o.profile, "phase timings on stderr");
  s->add_option("--busemann-tol", o.busemann_tol, "Busemann limit tolerance")->check(CLI::PositiveNumber);
  s->add_option("--barycenter-tol", o.barycenter_tol, "barycenter gradient tolerance")->check(CLI::PositiveNumber);
}

/// Option name -> value as given (or its default), for the output header.
inline json describe_options(const CLI::App* s) {
  json cfg = json::object();
  for (const CLI::Option* opt : s->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->get_expected_min() == 0) {
      cfg[name] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      std::string v;
      for (const auto& r : opt->results()) v += (v.empty() ? "" : " ") + r;
      cfg[name] = v;
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

}  // namespace detail

/// Runs one subcommand. Exit 0 on success, 1 on input errors, 2 on numerical failure.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Hilbert geometry laboratory", "hilbertlab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);
  auto sub = [&](const char* name, const char* desc) {
    auto* s = app.add_subcommand(name, desc);
    detail::add_common(s, o);
    return s;
  };
  auto* s = sub("dist", "Hilbert distance d(x, y)");
  s->add_option("--x", o.x)->required();
  s->add_option("--y", o.y)->required();
  s = sub("norm", "Finsler norm F(x, v)");
  s->add_option("--x", o.x)->required();
  s->add_option("--v", o.v)->required();
  s = sub("busemann", "Busemann function beta_p(x, xi)");
  s->add_option("--p", o.p, "reference point (default origin)");
  s->add_option("--x", o.x)->required();
  s->add_option("--xi", o.xi, "boundary point");
  s->add_option("--xi-dir", o.xi_dir, "boundary point as a direction from the origin");
  s = sub("ball", "Hilbert ball volume and figure");
  s->add_option("--o", o.o, "center (default origin)");
  s->add_option("--radius", o.radius);
  s->add_option("--samples", o.samples, "figure samples")->check(CLI::Range(8, 100000));
  s = sub("horosphere", "horosphere through p at xi (n = 2)");
  s->add_option("--xi", o.xi);
  s->add_option("--xi-dir", o.xi_dir);
  s->add_option("--p", o.p);
  s->add_option("--samples", o.samples)->check(CLI::Range(8, 100000));
  s = sub("barycenter", "barycenter of an atomic boundary measure on an ellipsoid");
  s->add_option("--atoms", o.atoms, "x,y;x,y;...")->required();
  s->add_option("--weights", o.weights, "w1,w2,...");
  s = sub("naturalmap", "natural map Phi(a), or a grid figure");
  s->add_option("--target", o.target);
  s->add_option("--alpha", o.alpha, "density exponent (default n-1)");
  s->add_option("--a", o.a);
  s->add_option("--grid", o.grid, "grid rings");
  s->add_option("--atoms-count", o.map_atoms)->check(CLI::Range(8, 1 << 16));
  s = sub("jacobian", "Jacobian of the natural map at a");
  s->add_option("--target", o.target);
  s->add_option("--alpha", o.alpha);
  s->add_option("--a", o.a)->required();
  s->add_option("--fd-step", o.h, "difference step")->check(CLI::PositiveNumber);
  s->add_option("--atoms-count", o.map_atoms)->check(CLI::Range(8, 1 << 16));
  s = sub("entropy", "volume-growth entropy");
  s->add_option("--o", o.o);
  s->add_option("--rmin", o.rmin);
  s->add_option("--rmax", o.rmax);
  s = sub("delta", "critical exponent of a group orbit (n = 2)");
  s->add_option("--group", o.group, "triangle:p,q,r | cyclic:len | matrices:<path> | trivial (default triangle:2,3,7)");
  s->add_option("--max-word-len", o.max_len)->check(CLI::Range(6, 64));
  s->add_option("--shards", o.shards)->check(CLI::Range(1, 1024));
  s->add_option("--o", o.o, "basepoint (default: the group's)");
  s = sub("eccentricity", "local distortion c(p), or the global eccentricity");
  s->add_option("--p", o.p, "local point; omit for the global grid");
  s->add_option("--o", o.o, "grid origin");
  s->add_option("--grid-rmax", o.grid_rmax);
  s->add_option("--step", o.step)->check(CLI::PositiveNumber);
  s->add_option("--refine", o.refine)->check(CLI::Range(0, 6));
  s->add_option("--exponent", o.exponent, "0 means n");
  s->add_option("--ellipsoid", o.ellipsoid)->check(CLI::IsMember({"john", "binet"}));
  s->add_option("--directions", o.directions)->check(CLI::Range(16, 1 << 16));
  s = sub("bound", "Jacobian bound check for the radial natural map");
  s->add_option("--target", o.target);
  s->add_option("--alpha", o.alpha, "default: the entropy");
  s->add_option("--entropy", o.entropy, "default: estimated");
  s->add_option("--eccentricity", o.eccentricity, "default: global grid");
  s->add_option("--points", o.points, "x,y;x,y;... (default: five points)");
  s->add_option("--rmin", o.rmin);
  s->add_option("--rmax", o.rmax);
  s->add_option("--grid-rmax", o.grid_rmax);
  s->add_option("--step", o.step)->check(CLI::PositiveNumber);
  s->add_option("--refine", o.refine)->check(CLI::Range(0, 6));
  s->add_option("--exponent", o.exponent);
  s->add_option("--ellipsoid", o.ellipsoid)->check(CLI::IsMember({"john", "binet"}));
  s->add_option("--fd-step", o.h)->check(CLI::PositiveNumber);
  s->add_option("--atoms-count", o.map_atoms)->check(CLI::Range(8, 1 << 16));
  s = sub("foliate", "foliated entropy inequality");
  s->add_option("--config", o.config, "TOML foliation config");
  s->add_option("--family", o.family, "pball-sine | ellipse");
  s->add_option("--leaves", o.leaves)->check(CLI::Range(2, 1000));
  s->add_option("--exponent", o.exponent);
  s->add_option("--ellipsoid", o.ellipsoid)->check(CLI::IsMember({"john", "binet"}));
  s->add_option("--atoms-count", o.map_atoms)->check(CLI::Range(8, 1 << 16));
  s = sub("audit", "convexity audit (and group isometry audit)");
  s->add_option("--group", o.group);
  s->add_option("--samples", o.samples)->check(CLI::Range(100, 1000000));

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Profiler prof(o.profile);
  try {
    if (!o.svg.empty() && o.dim != 2) fail(ErrorKind::InvalidInput, "SVG figures need --dim 2");
    Output res = o.dim == 2 ? detail::dispatch<2>(name, o, prof) : detail::dispatch<3>(name, o, prof);
    json doc = json::object();
    doc["header"] = {{"program", "hilbertlab"},
                     {"version", kVersion},
                     {"subcommand", name},
                     {"seed", o.seed},
                     {"config", detail::describe_options(chosen)}};
    for (auto it = res.result.begin(); it != res.result.end(); ++it) doc[it.key()] = it.value();
    io::require_finite(doc);
    if (!o.csv.empty() && !res.csv) fail(ErrorKind::InvalidInput, name + " has no table output");
    if (!o.svg.empty() && !res.svg) fail(ErrorKind::InvalidInput, name + " has no figure output");
    const std::string text = doc.dump(2) + "\n";
    // single writer, every artifact complete or absent
    if (!o.csv.empty()) io::atomic_write(o.csv, *res.csv);
    if (!o.svg.empty()) io::atomic_write(o.svg, io::render_svg(*res.svg));
    if (o.out.empty())
      out << text;
    else
      io::atomic_write(o.out, text);
    prof.report(err);
    return res.exit_code;
  } catch (const Error& e) {
    prof.report(err);
    err << "error: " << e.what() << '\n';
    return is_numerical(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace hilbertlab::cli
