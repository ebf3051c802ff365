#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <thread>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hilbertlab/barycenter.hpp"
#include "hilbertlab/domain.hpp"
#include "hilbertlab/entropy.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "hilbertlab/projective.hpp"

namespace hilbertlab {

/// Finitely generated group of projective transformations preserving a domain.
template <int N>
struct ReflectionGroup {
  std::string name;
  std::vector<ProjectiveTransform<N>> generators;
  std::shared_ptr<const ConvexDomain<N>> domain;
  bool reflections = false;     // generators flagged as involutions
  Vec<N> basepoint = Vec<N>::Zero();  // suggested orbit basepoint
};

/// Reflection group of the hyperbolic triangle with angles pi/p, pi/q, pi/r in
/// the Klein disk. Mirror i and mirror j meet at angle pi/m_ij with
/// m_12 = q, m_23 = r, m_31 = p; mirrors 1 and 2 meet at the origin.
inline ReflectionGroup<2> klein_triangle_group(int p, int q, int r) {
  if (p < 2 || q < 2 || r < 2) fail(ErrorKind::InvalidInput, "triangle orders must be >= 2");
  const long long lp = p, lq = q, lr = r;
  if (lq * lr + lp * lr + lp * lq >= lp * lq * lr)
    fail(ErrorKind::BadSignature, "1/p + 1/q + 1/r must be < 1 for a hyperbolic triangle");
  const double pi = std::numbers::pi;
  const Eigen::Vector3d n1(0.0, -1.0, 0.0);
  const Eigen::Vector3d n2(-std::sin(pi / q), std::cos(pi / q), 0.0);
  const double b = std::cos(pi / p);
  const double a = (std::cos(pi / q) * b + std::cos(pi / r)) / std::sin(pi / q);
  const double c = std::sqrt(a * a + b * b - 1.0);
  const Eigen::Vector3d n3(a, b, c);
  const Eigen::Matrix3d J = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  ReflectionGroup<2> g;
  g.name = "triangle:" + std::to_string(p) + "," + std::to_string(q) + "," + std::to_string(r);
  g.domain = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
  g.reflections = true;
  for (const auto& n : {n1, n2, n3}) {
    const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() - 2.0 * n * (J * n).transpose();
    g.generators.emplace_back(R);
  }
  // Incenter: equal Minkowski pairing with the three outward normals.
  Eigen::Matrix3d M;
  M.row(0) = (J * n1).transpose();
  M.row(1) = (J * n2).transpose();
  M.row(2) = (J * n3).transpose();
  const Eigen::Vector3d X = M.partialPivLu().solve(-Eigen::Vector3d::Ones());
  g.basepoint = X.head<2>() / X(2);
  return g;
}

/// Cyclic group generated by a hyperbolic translation of length ell along the x-axis.
inline ReflectionGroup<2> cyclic_translation_group(double ell) {
  if (!(ell > 0.0) || !std::isfinite(ell)) fail(ErrorKind::InvalidInput, "translation length must be positive");
  Eigen::Matrix3d B;
  B << std::cosh(ell), 0.0, std::sinh(ell), 0.0, 1.0, 0.0, std::sinh(ell), 0.0, std::cosh(ell);
  ReflectionGroup<2> g;
  std::ostringstream os;
  os.precision(17);
  os << "cyclic:" << ell;
  g.name = os.str();
  g.domain = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
  g.generators = {ProjectiveTransform<2>(B), ProjectiveTransform<2>(B.inverse())};
  return g;
}

template <int N>
bool is_involution(const ProjectiveTransform<N>& g, double tol = 1e-10) {
  Mat<N + 1> sq = g.matrix() * g.matrix();
  const double s = sq.trace() / (N + 1);
  if (s == 0.0) return false;
  return (sq / s - Mat<N + 1>::Identity()).cwiseAbs().maxCoeff() <= tol;
}

/// One (N+1)^2 matrix per non-empty line; inverses of non-involutions are added.
template <int N>
ReflectionGroup<N> matrices_group(const std::string& path,
                                  std::shared_ptr<const ConvexDomain<N>> domain) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read matrices file '" + path + "'");
  ReflectionGroup<N> g;
  g.name = "matrices:" + path;
  g.domain = std::move(domain);
  g.reflections = true;
  std::string line;
  std::vector<ProjectiveTransform<N>> extra;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) v.push_back(detail::parse_double(tok));
    if (v.empty()) continue;
    if (v.size() != static_cast<std::size_t>((N + 1) * (N + 1)))
      fail(ErrorKind::InvalidInput, "matrix line must hold (n+1)^2 numbers");
    Mat<N + 1> m;
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j) m(i, j) = v[i * (N + 1) + j];
    ProjectiveTransform<N> t(m);
    if (!is_involution(t)) {
      g.reflections = false;
      extra.push_back(t.inverse());
    }
    g.generators.push_back(t);
  }
  for (auto& e : extra) g.generators.push_back(e);
  return g;
}

/// Parses `triangle:p,q,r`, `cyclic:len`, `matrices:<path>`, `trivial`.
inline ReflectionGroup<2> parse_group(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "triangle") {
    const auto v = detail::parse_list(rest);
    if (v.size() != 3) fail(ErrorKind::InvalidInput, "triangle:p,q,r needs three integers");
    for (double x : v)
      if (x != std::floor(x)) fail(ErrorKind::InvalidInput, "triangle orders must be integers");
    return klein_triangle_group(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]));
  }
  if (kind == "cyclic") return cyclic_translation_group(detail::parse_double(rest));
  if (kind == "matrices")
    return matrices_group<2>(rest, std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball()));
  if (kind == "trivial") {
    ReflectionGroup<2> g;
    g.name = "trivial";
    g.domain = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
    return g;
  }
  fail(ErrorKind::InvalidInput, "unknown group '" + spec + "'");
}

struct GroupAuditReport {
  double max_distance_error = 0.0;
  double max_involution_error = 0.0;
  bool pass = false;
};

/// Generators must map sampled points inside and preserve Hilbert distance.
template <int N>
GroupAuditReport group_audit(const ReflectionGroup<N>& g, std::uint64_t seed = 0, int pairs = 100) {
  GroupAuditReport rep;
  const auto& omega = *g.domain;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < g.generators.size(); ++k) {
    const auto& s = g.generators[k];
    if (g.reflections) {
      Mat<N + 1> sq = s.matrix() * s.matrix();
      sq /= sq.trace() / (N + 1);
      rep.max_involution_error =
          std::max(rep.max_involution_error, (sq - Mat<N + 1>::Identity()).cwiseAbs().maxCoeff());
    }
    for (int i = 0; i < pairs; ++i) {
      const Vec<N> x = sample_interior(omega, rng, 0.9), y = sample_interior(omega, rng, 0.9);
      Vec<N> gx, gy;
      try {
        gx = s.apply_affine(x);
        gy = s.apply_affine(y);
      } catch (const Error&) {
        fail(ErrorKind::OrbitEscapesDomain, "generator " + std::to_string(k) + " sends a point to infinity");
      }
      if (!omega.contains(gx) || !omega.contains(gy))
        fail(ErrorKind::OrbitEscapesDomain, "generator " + std::to_string(k) + " does not preserve the domain");
      const double d0 = hilbert_distance(omega, x, y), d1 = hilbert_distance(omega, gx, gy);
      rep.max_distance_error = std::max(rep.max_distance_error, std::abs(d1 - d0));
    }
  }
  if (rep.max_distance_error > 1e-9)
    fail(ErrorKind::OrbitEscapesDomain, "generators are not isometries of the domain");
  if (g.reflections && rep.max_involution_error > 1e-10)
    fail(ErrorKind::InvalidInput, "generators flagged as reflections are not involutions");
  rep.pass = true;
  return rep;
}

/// Orbit of o under words of length <= max_len, deduplicated.
template <int N>
struct Orbit {
  std::vector<Vec<N>> points;
  std::vector<int> word_length;
  std::vector<double> distance;     // d(o, gamma o)
  std::vector<std::size_t> shell_start;  // index of the first point of each word length
};

struct OrbitOptions {
  unsigned shards = 1;
  std::size_t cap = 5'000'000;
  double resolution = 1e-9;
};

namespace detail {

template <int N>
struct CellKey {
  std::array<long long, N> k;
  bool operator==(const CellKey& o) const { return k == o.k; }
};

template <int N>
struct CellHash {
  std::size_t operator()(const CellKey<N>& c) const {
    std::size_t h = 1469598103934665603ull;
    for (long long v : c.k) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace detail

/// Breadth-first orbit enumeration. Each frontier is split into shards that
/// generate candidates independently; candidates are merged in (parent, generator)
/// order, so the orbit does not depend on the shard count.
template <int N>
Orbit<N> orbit_bfs(const ReflectionGroup<N>& g, const Pt<N>& o, int max_len,
                   const OrbitOptions& opt = {}) {
  const auto& omega = *g.domain;
  require_inside(omega, o, "basepoint");
  Orbit<N> orb;
  std::unordered_map<detail::CellKey<N>, std::vector<std::size_t>, detail::CellHash<N>> cells;
  auto key_of = [&](const Pt<N>& x) {
    detail::CellKey<N> c;
    for (int i = 0; i < N; ++i) c.k[i] = std::llround(x(i) / opt.resolution);
    return c;
  };
  auto find = [&](const Pt<N>& x) {
    const auto base = key_of(x);
    const int total = static_cast<int>(std::pow(3, N));
    for (int code = 0; code < total; ++code) {
      auto c = base;
      int t = code;
      for (int i = 0; i < N; ++i) {
        c.k[i] += t % 3 - 1;
        t /= 3;
      }
      auto it = cells.find(c);
      if (it == cells.end()) continue;
      for (std::size_t idx : it->second) {
        const Pt<N>& y = orb.points[idx];
        if ((y - x).cwiseAbs().maxCoeff() <= opt.resolution &&
            hilbert_distance(omega, x, y) <= 1e-6)
          return true;
      }
    }
    return false;
  };
  auto insert = [&](const Pt<N>& x, int len) {
    cells[key_of(x)].push_back(orb.points.size());
    orb.points.push_back(x);
    orb.word_length.push_back(len);
    orb.distance.push_back(hilbert_distance(omega, o, x));
  };
  orb.shell_start.push_back(0);
  insert(o, 0);
  std::size_t begin = 0, end = 1;
  for (int len = 1; len <= max_len && !g.generators.empty(); ++len) {
    orb.shell_start.push_back(orb.points.size());
    const std::size_t frontier = end - begin;
    const unsigned shards = std::max(1u, std::min<unsigned>(opt.shards, static_cast<unsigned>(frontier)));
    std::vector<std::vector<Vec<N>>> cand(shards);
    std::vector<std::exception_ptr> errs(shards);
    auto work = [&](unsigned s) {
      try {
        const std::size_t lo = begin + frontier * s / shards, hi = begin + frontier * (s + 1) / shards;
        for (std::size_t i = lo; i < hi; ++i)
          for (const auto& gen : g.generators) {
            Vec<N> y;
            try {
              y = gen.apply_affine(orb.points[i]);
            } catch (const Error&) {
              fail(ErrorKind::OrbitEscapesDomain, "orbit point sent to infinity");
            }
            if (!omega.contains(y)) fail(ErrorKind::OrbitEscapesDomain, "orbit point left the domain");
            cand[s].push_back(y);
          }
      } catch (...) {
        errs[s] = std::current_exception();
      }
    };
    if (shards == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned s = 0; s < shards; ++s) pool.emplace_back(work, s);
      for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    for (const auto& shard : cand)
      for (const auto& y : shard) {
        if (find(y)) continue;
        if (orb.points.size() >= opt.cap)
          fail(ErrorKind::MemoryBudgetExceeded, "orbit exceeds " + std::to_string(opt.cap) + " points");
        insert(y, len);
      }
    begin = end;
    end = orb.points.size();
    if (begin == end) break;
  }
  return orb;
}

struct CriticalExponentOptions {
  OrbitOptions orbit{};
  int radii = 40;
  std::uint64_t seed = 0;
};

struct CriticalExponentReport {
  EntropyEstimate estimate;
  double certified_radius = 0.0;
  std::size_t orbit_size = 0;
  std::vector<std::size_t> shell_sizes;
};

namespace detail {

/// Largest radius below which every orbit point has word length <= len.
template <int N>
double certified_radius(const Orbit<N>& orb, int len, double max_step) {
  double dmin = INFINITY;
  bool any = false;
  for (std::size_t i = 0; i < orb.points.size(); ++i)
    if (orb.word_length[i] == len) {
      dmin = std::min(dmin, orb.distance[i]);
      any = true;
    }
  return any ? dmin - max_step : INFINITY;
}

template <int N>
double count_fit(const Orbit<N>& orb, double Rc, int radii, std::vector<double>* R_out,
                 std::vector<double>* N_out) {
  std::vector<double> d = orb.distance;
  std::sort(d.begin(), d.end());
  std::vector<double> R, C;
  for (int j = 1; j <= radii; ++j) {
    const double r = Rc * j / radii;
    R.push_back(r);
    C.push_back(static_cast<double>(std::upper_bound(d.begin(), d.end(), r) - d.begin()));
  }
  if (R_out) *R_out = R;
  if (N_out) *N_out = C;
  return growth::fit_counts(N, R, C).h;
}

}  // namespace detail

/// Orbit-growth exponent, fitted to the constant-curvature growth law on the
/// certified-complete range (0, R_c].
template <int N>
CriticalExponentReport critical_exponent_estimate(const ReflectionGroup<N>& g, const Pt<N>& o,
                                                  int max_len,
                                                  const CriticalExponentOptions& opt = {}) {
  if (max_len < 6) fail(ErrorKind::InvalidInput, "maxLen must be >= 6");
  CriticalExponentReport rep;
  rep.estimate.method = "orbit-count";
  if (g.generators.empty()) {
    rep.estimate.note = "trivial group";
    rep.orbit_size = 1;
    rep.shell_sizes = {1};
    return rep;
  }
  group_audit(g, opt.seed);
  const Orbit<N> orb = orbit_bfs(g, o, max_len, opt.orbit);
  rep.orbit_size = orb.points.size();
  for (std::size_t s = 0; s < orb.shell_start.size(); ++s) {
    const std::size_t e = s + 1 < orb.shell_start.size() ? orb.shell_start[s + 1] : orb.points.size();
    rep.shell_sizes.push_back(e - orb.shell_start[s]);
  }
  double max_step = 0.0;
  for (const auto& gen : g.generators) max_step = std::max(max_step, hilbert_distance(*g.domain, o, gen.apply_affine(o)));
  const int top = static_cast<int>(orb.shell_start.size()) - 1;
  const double Rc = detail::certified_radius(orb, top, max_step);
  if (!std::isfinite(Rc)) {
    // Finite orbit: growth rate zero.
    rep.certified_radius = *std::max_element(orb.distance.begin(), orb.distance.end());
    rep.estimate.note = "finite orbit";
    return rep;
  }
  if (!(Rc > 0.0)) throw NoConvergence("entropy_rigidity", "critical_exponent_estimate", max_len);
  rep.certified_radius = Rc;
  rep.estimate.value = detail::count_fit(orb, Rc, opt.radii, &rep.estimate.radii, &rep.estimate.sizes);
  // Spread of refits on the certified radii of the previous five word lengths.
  std::vector<double> fits{rep.estimate.value};
  for (int k = 1; k <= 5; ++k) {
    const double r = detail::certified_radius(orb, top - k, max_step);
    if (std::isfinite(r) && r > 0.5) fits.push_back(detail::count_fit(orb, r, opt.radii, nullptr, nullptr));
  }
  if (fits.size() > 1) {
    double mean = 0.0;
    for (double f : fits) mean += f;
    mean /= fits.size();
    double var = 0.0;
    for (double f : fits) var += (f - mean) * (f - mean);
    rep.estimate.stderr_ = std::sqrt(var / (fits.size() - 1));
  }
  std::vector<double> xs, ys;
  for (std::size_t j = rep.estimate.radii.size() / 2; j < rep.estimate.radii.size(); ++j) {
    xs.push_back(rep.estimate.radii[j]);
    ys.push_back(std::log(rep.estimate.sizes[j]));
  }
  rep.estimate.raw_slope = growth::plain_slope(xs, ys);
  rep.estimate.warning = rep.estimate.value > (N - 1) + 0.1;
  return rep;
}

template <int N>
struct PattersonMeasure {
  BoundaryMeasure<N> measure;   // normalized
  double unnormalized_mass = 0.0;
  double partial_sum = 0.0;     // includes the identity term
};

/// Atoms at the radial boundary projections of gamma o (seen from o), weights exp(-s d(o, gamma o)).
template <int N>
PattersonMeasure<N> patterson_orbit_measure(const ReflectionGroup<N>& g, const Pt<N>& o, double s,
                                            int max_len, const OrbitOptions& opt = {}) {
  if (!(s > 0.0)) fail(ErrorKind::InvalidInput, "exponent s must be positive");
  if (g.generators.empty()) fail(ErrorKind::DegenerateMeasure, "trivial group has no boundary atoms");
  group_audit(g);
  const Orbit<N> orb = orbit_bfs(g, o, max_len, opt);
  PattersonMeasure<N> out;
  out.partial_sum = 1.0;
  for (std::size_t i = 1; i < orb.points.size(); ++i) {
    const Vec<N> dir = orb.points[i] - o;
    const double n = dir.norm();
    if (n == 0.0) continue;
    const Vec<N> u = dir / n;
    const double w = std::exp(-s * orb.distance[i]);
    out.measure.atoms.push_back({Vec<N>(o + g.domain->exit_distance(o, u) * u), w});
    out.unnormalized_mass += w;
  }
  if (out.measure.atoms.empty()) fail(ErrorKind::DegenerateMeasure, "orbit has no points besides o");
  out.partial_sum += out.unnormalized_mass;
  for (auto& a : out.measure.atoms) a.w /= out.unnormalized_mass;
  return out;
}

}  // namespace hilbertlab
