#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hilbertlab/domain.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "hilbertlab/numerics.hpp"

namespace hilbertlab {

enum class EllipsoidMethod { John, Binet };

inline std::string to_string(EllipsoidMethod m) { return m == EllipsoidMethod::John ? "john" : "binet"; }

inline EllipsoidMethod parse_ellipsoid_method(const std::string& s) {
  if (s == "john") return EllipsoidMethod::John;
  if (s == "binet") return EllipsoidMethod::Binet;
  fail(ErrorKind::InvalidInput, "unknown ellipsoid method '" + s + "' (john|binet)");
}

struct EccentricityOptions {
  int directions = 512;  // boundary samples of B_F(p)
  EllipsoidMethod method = EllipsoidMethod::John;
};

template <int N>
struct LocalEccentricity {
  double c = 1.0;
  Mat<N> shape;   // E = {v : v^T shape^{-1} v <= 1}, inscribed in B_F(p)
  Vec<N> worst;   // boundary vector of B_F(p) realizing c
};

namespace detail {

/// Support data of a centered convex body in a fixed frame: normals theta_j and h(theta_j).
template <int N>
struct SupportSample {
  std::vector<Vec<N>> points;   // boundary points
  std::vector<Vec<N>> normals;  // unit outer normals
  std::vector<double> support;  // h(normal) = point . normal
};

/// Boundary point y of L^{-1} B_F(p) in direction e, with its outer normal.
/// grad F(v) = 1/2 [g+ / (t+ g+.v) + g- / (t- g-.v)], g+- the boundary gradients of the exits.
template <int N>
void finsler_boundary_point(const ConvexDomain<N>& omega, const Pt<N>& p, const Mat<N>& L,
                            const Pt<N>& e, Vec<N>& y, Vec<N>& normal, double& h) {
  const Vec<N> v = L * e;
  const Vec<N> mv = -v;
  const double tp = omega.exit_distance(p, v), tm = omega.exit_distance(p, mv);
  const double F = 0.5 * (1.0 / tp + 1.0 / tm);
  const Vec<N> gp = omega.gradient(Vec<N>(p + tp * v));
  const Vec<N> gm = omega.gradient(Vec<N>(p - tm * v));
  const Vec<N> dF = 0.5 * (gp / (tp * gp.dot(v)) + gm / (tm * gm.dot(v)));
  const Vec<N> dy = L.transpose() * dF;
  y = e / F;
  const double nrm = dy.norm();
  normal = dy / nrm;
  h = 1.0 / nrm;  // Euler: dy . y = F_L(y) = 1
}

template <int N>
SupportSample<N> finsler_support(const ConvexDomain<N>& omega, const Pt<N>& p, const Mat<N>& L, int count) {
  SupportSample<N> s;
  auto push = [&](const Vec<N>& e) {
    Vec<N> y, nrm;
    double h;
    finsler_boundary_point(omega, p, L, e, y, nrm, h);
    s.points.push_back(y);
    s.normals.push_back(nrm);
    s.support.push_back(h);
  };
  if constexpr (N == 2) {
    // the body is symmetric, half a turn carries all constraints
    const int half = count / 2;
    for (int j = 0; j < half; ++j) {
      const double a = std::numbers::pi * j / half;
      push(Vec<2>(std::cos(a), std::sin(a)));
    }
  } else {
    for (const auto& e : num::fibonacci_sphere(count)) push(e);
  }
  return s;
}

template <int N>
constexpr int sym_params() { return N * (N + 1) / 2; }

template <int N>
Mat<N> sym_from(const Eigen::Matrix<double, sym_params<N>(), 1>& m) {
  Mat<N> M;
  int c = 0;
  for (int r = 0; r < N; ++r)
    for (int s = r; s < N; ++s) {
      M(r, s) = m(c);
      M(s, r) = m(c);
      ++c;
    }
  return M;
}

template <int N>
Eigen::Matrix<double, sym_params<N>(), 1> sym_row(const Vec<N>& t) {
  Eigen::Matrix<double, sym_params<N>(), 1> a;
  int c = 0;
  for (int r = 0; r < N; ++r)
    for (int s = r; s < N; ++s) a(c++) = (r == s ? 1.0 : 2.0) * t(r) * t(s);
  return a;
}

/// Maximum-volume centered ellipsoid {v : v^T M^{-1} v <= 1} under theta_j^T M theta_j <= h_j^2.
/// The constraints are linear in M, so this is log det maximization; solved by a barrier path.
template <int N>
Mat<N> john_shape(const SupportSample<N>& s) {
  constexpr int P = sym_params<N>();
  using PV = Eigen::Matrix<double, P, 1>;
  using PM = Eigen::Matrix<double, P, P>;
  const std::size_t m = s.normals.size();
  std::vector<PV> rows(m);
  std::vector<double> h2(m);
  double hmin = INFINITY;
  for (std::size_t j = 0; j < m; ++j) {
    rows[j] = sym_row<N>(s.normals[j]);
    h2[j] = s.support[j] * s.support[j];
    hmin = std::min(hmin, s.support[j]);
  }
  PV x = PV::Zero();
  for (int r = 0, c = 0; r < N; ++r)
    for (int q = r; q < N; ++q, ++c)
      if (q == r) x(c) = 0.5 * hmin * hmin;

  auto slacks = [&](const PV& v, std::vector<double>& sl) {
    sl.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      sl[j] = h2[j] - rows[j].dot(v);
      if (!(sl[j] > 0.0)) return false;
    }
    return true;
  };
  const double t_final = 1e13 * static_cast<double>(m);
  int newton_total = 0;
  for (double t = 1.0;; t = std::min(t * 8.0, t_final)) {
    for (int it = 0; it < 100; ++it) {
      std::vector<double> sl;
      slacks(x, sl);
      const Mat<N> Mi = sym_from<N>(x).inverse();
      std::array<Mat<N>, P> basis;
      for (int a = 0; a < P; ++a) basis[a] = sym_from<N>(PV::Unit(a));
      PV g = PV::Zero();
      PM H = PM::Zero();
      for (int a = 0; a < P; ++a) {
        const Mat<N> A = Mi * basis[a];
        g(a) = -t * A.trace();
        for (int b = 0; b <= a; ++b) {
          H(a, b) = t * (A * Mi * basis[b]).trace();
          H(b, a) = H(a, b);
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        g += rows[j] / sl[j];
        H += rows[j] * rows[j].transpose() / (sl[j] * sl[j]);
      }
      const PV dx = -H.ldlt().solve(g);
      const double dec = -g.dot(dx);
      if (!(dec >= 0.0) || !dx.allFinite()) break;
      // the decrement is affine invariant; 1e-10 sits well inside the quadratic regime
      if (dec < 1e-10) break;
      // exact line search on the sign of the directional derivative; function values
      // drown in rounding once t is large, and damped steps crawl when m is large
      const Mat<N> D = sym_from<N>(dx);
      std::vector<double> rd(m);
      double hi = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        rd[j] = rows[j].dot(dx);
        if (rd[j] > 0.0) hi = std::min(hi, 0.99 * sl[j] / rd[j]);
      }
      auto slope = [&](double a) -> double {
        const Mat<N> X = sym_from<N>(PV(x + a * dx));
        Eigen::LLT<Mat<N>> llt(X);
        if (llt.info() != Eigen::Success) return INFINITY;
        double d = -t * llt.solve(D).trace();
        for (std::size_t j = 0; j < m; ++j) d += rd[j] / (sl[j] - a * rd[j]);
        return d;
      };
      while (!std::isfinite(slope(hi)) && hi > 1e-12) hi *= 0.5;
      double step = hi;
      if (slope(hi) > 0.0) {
        double lo = 0.0;
        for (int b = 0; b < 60; ++b) {
          const double mid = 0.5 * (lo + hi);
          (slope(mid) > 0.0 ? hi : lo) = mid;
        }
        step = lo;
      }
      if (!(step > 0.0)) break;
      x += step * dx;
      if (++newton_total > 5000) throw NoConvergence("entropy_rigidity", "john_ellipsoid", 5000);
    }
    if (t >= t_final) break;
  }
  return sym_from<N>(x);
}

/// Inertia (Binet) ellipsoid of the body, scaled down until inscribed.
template <int N>
Mat<N> binet_shape(const SupportSample<N>& s) {
  Mat<N> M = Mat<N>::Zero();
  for (const auto& y : s.points) {
    const double r = y.norm();
    M += std::pow(r, N + 2) * (y / r) * (y / r).transpose();
  }
  double scale = INFINITY;
  for (std::size_t j = 0; j < s.normals.size(); ++j)
    scale = std::min(scale, s.support[j] * s.support[j] / s.normals[j].dot(M * s.normals[j]));
  return scale * M;
}

}  // namespace detail

/// c(p): smallest lambda with E inside B_F(p) inside lambda E, E the John (or Binet)
/// ellipsoid of the Finsler unit ball. Affine invariant, so the work happens in a frame
/// where B_F(p) is nearly round.
template <int N>
LocalEccentricity<N> eccentricity_local_report(const ConvexDomain<N>& omega, const Pt<N>& p,
                                               const EccentricityOptions& opt = {}) {
  require_inside(omega, p);
  if (opt.directions < 16) fail(ErrorKind::InvalidInput, "need at least 16 directions");
  const Mat<N> L = detail::round_frame(omega, p);
  const auto s = detail::finsler_support(omega, p, L, opt.directions);
  auto fit = [&](const detail::SupportSample<N>& ss) {
    return opt.method == EllipsoidMethod::John ? detail::john_shape(ss) : detail::binet_shape(ss);
  };
  Mat<N> M = fit(s);
  if constexpr (N == 2) {
    // contacts fall between samples: locate each one and fit again with it added
    const int half = opt.directions / 2;
    const double step = std::numbers::pi / half;
    auto add = [](detail::SupportSample<2>& ss, const ConvexDomain<2>& om, const Vec<2>& q, const Mat<2>& F,
                  double a) {
      Vec<2> y, nrm;
      double h;
      detail::finsler_boundary_point(om, q, F, Vec<2>(std::cos(a), std::sin(a)), y, nrm, h);
      ss.points.push_back(y);
      ss.normals.push_back(nrm);
      ss.support.push_back(h);
      return h;
    };
    auto fine = s;
    // Binet's inertia sums over the samples, so only the John fit is refined
    // c is only as good as the square root of the contact error, so iterate until contacts are exact
    for (int round = 0; round < 12 && opt.method == EllipsoidMethod::John; ++round) {
      auto ratio = [&](double a) {
        detail::SupportSample<2> one;
        const double h = add(one, omega, p, L, a);
        return one.normals[0].dot(M * one.normals[0]) / (h * h);
      };
      std::vector<double> r(half);
      for (int j = 0; j < half; ++j) r[j] = s.normals[j].dot(M * s.normals[j]) / (s.support[j] * s.support[j]);
      // at most three contacts per half turn matter in the plane
      std::vector<int> peaks;
      for (int j = 0; j < half; ++j)
        if (r[j] > 1.0 - 1e-2 && r[j] >= r[(j + half - 1) % half] && r[j] > r[(j + 1) % half]) peaks.push_back(j);
      std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return r[a] > r[b]; });
      if (peaks.size() > 3) peaks.resize(3);
      if (peaks.empty()) break;
      double over = 0.0;
      for (int j : peaks) {
        const auto [a, val] = num::brent_max(ratio, step * (j - 1), step * (j + 1), 1e-12, 80);
        over = std::max(over, val - 1.0);
        add(fine, omega, p, L, a);
      }
      if (over <= 1e-12) break;
      M = fit(fine);
    }
  }
  const Mat<N> Mi = M.inverse();
  LocalEccentricity<N> out;
  std::size_t best = 0;
  double c2 = -1.0;
  for (std::size_t j = 0; j < s.points.size(); ++j) {
    const double q = s.points[j].dot(Mi * s.points[j]);
    if (q > c2) {
      c2 = q;
      best = j;
    }
  }
  Vec<N> worst = s.points[best];
  if constexpr (N == 2) {
    // polish the few largest local maxima; the sampled ranking can be off by O(step^2)
    const int half = opt.directions / 2;
    const double step = std::numbers::pi / half;
    std::vector<double> qs(half);
    for (int j = 0; j < half; ++j) qs[j] = s.points[j].dot(Mi * s.points[j]);
    std::vector<int> peaks;
    for (int j = 0; j < half; ++j)
      if (qs[j] >= qs[(j + half - 1) % half] && qs[j] > qs[(j + 1) % half]) peaks.push_back(j);
    std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return qs[a] > qs[b]; });
    if (peaks.size() > 4) peaks.resize(4);
    auto q = [&](double a) {
      Vec<2> y, nrm;
      double h;
      detail::finsler_boundary_point(omega, p, L, Vec<2>(std::cos(a), std::sin(a)), y, nrm, h);
      return y.dot(Mi * y);
    };
    for (int j : peaks) {
      const auto [a, val] = num::brent_max(q, step * (j - 1), step * (j + 1), 1e-12, 80);
      if (val > c2) {
        c2 = val;
        Vec<2> nrm;
        double h;
        detail::finsler_boundary_point(omega, p, L, Vec<2>(std::cos(a), std::sin(a)), worst, nrm, h);
      }
    }
  }
  if (!std::isfinite(c2) || !(c2 > 0.0)) throw NoConvergence("entropy_rigidity", "eccentricity_local", 0);
  out.c = std::sqrt(c2);
  out.shape = L * M * L.transpose();
  out.worst = L * worst;
  return out;
}

template <int N>
double eccentricity_local(const ConvexDomain<N>& omega, const Pt<N>& p, const EccentricityOptions& opt = {}) {
  return eccentricity_local_report(omega, p, opt).c;
}

template <int N>
struct EccentricityGrid {
  Vec<N> o = Vec<N>::Zero();
  double rmax = 3.0;
  double step = 0.5;     // Hilbert radial step and neighbour spacing
  int refine = 0;        // each level halves the radial step and doubles angular counts
  double exponent = N;
};

template <int N>
struct EccentricityReport {
  std::vector<Vec<N>> points;
  std::vector<double> radii;  // Hilbert distance of each point from o
  std::vector<double> c;
  double sup_c = 1.0;
  double value = 1.0;   // sup_c^exponent
  double exponent = N;
  std::string method;
  double rmax = 0.0, step = 0.0, spacing = 0.0;  // realized maximal neighbour spacing
  int refine = 0;
  std::size_t argmax = 0;
};

namespace detail {

inline int fib_neighbour_offsets(std::vector<int>& out, int m) {
  out.clear();
  for (int a = 1, b = 2; a < m; std::swap(a, b), b += a) out.push_back(a);
  return static_cast<int>(out.size());
}

/// Points at Hilbert radius r from o along a set of directions; counts double until
/// neighbouring points are within spacing of each other.
template <int N>
std::vector<Vec<N>> hilbert_shell(const ConvexDomain<N>& omega, const Pt<N>& o, double r, double spacing,
                                  int refine, double& realized) {
  auto at = [&](const Vec<N>& u) {
    const Vec<N> mu = -u;
    const double tp = omega.exit_distance(o, u), tm = omega.exit_distance(o, mu);
    const double e = std::expm1(2.0 * r);
    return Vec<N>(o + tp * tm * e / (tp + (e + 1.0) * tm) * u);
  };
  realized = 0.0;
  if constexpr (N == 2) {
    for (int count = 8;; count *= 2) {
      if (count > (1 << 20)) throw NoConvergence("entropy_rigidity", "eccentricity_grid", 20);
      std::vector<Vec<2>> pts(count);
      for (int k = 0; k < count; ++k) pts[k] = at(direction<2>(k, count));
      double worst = 0.0;
      for (int k = 0; k < count; ++k) worst = std::max(worst, hilbert_distance(omega, pts[k], pts[(k + 1) % count]));
      if (worst <= spacing) {
        const int fine = count << refine;
        std::vector<Vec<2>> out(fine);
        for (int k = 0; k < fine; ++k) out[k] = at(direction<2>(k, fine));
        realized = worst;
        return out;
      }
    }
  } else {
    std::vector<int> offs;
    for (int count = 8;; count *= 2) {
      if (count > (1 << 20)) throw NoConvergence("entropy_rigidity", "eccentricity_grid", 20);
      std::vector<Vec<3>> pts(count);
      for (int k = 0; k < count; ++k) pts[k] = at(direction<3>(k, count));
      fib_neighbour_offsets(offs, count);
      double worst = 0.0;
      for (int k = 0; k < count; ++k) {
        double nn = INFINITY;
        for (int d : offs)
          for (int kk : {k - d, k + d})
            if (kk >= 0 && kk < count) nn = std::min(nn, hilbert_distance(omega, pts[k], pts[kk]));
        worst = std::max(worst, nn);
      }
      if (worst <= spacing) {
        realized = worst;
        if (refine == 0) return pts;
        // Fibonacci sets do not nest; keep the coarse set so refinement only adds points.
        const int fine = count << refine;
        for (int k = 0; k < fine; ++k) pts.push_back(at(direction<3>(k, fine)));
        return pts;
      }
    }
  }
}

}  // namespace detail

/// e = (max_p c(p))^exponent over a Hilbert-polar grid about o.
template <int N>
EccentricityReport<N> eccentricity_global(const ConvexDomain<N>& omega, const EccentricityGrid<N>& grid = {},
                                          const EccentricityOptions& opt = {}) {
  require_inside(omega, grid.o, "grid origin");
  if (!(grid.rmax >= 0.0) || !(grid.step > 0.0) || grid.refine < 0 || grid.refine > 6)
    fail(ErrorKind::InvalidInput, "bad eccentricity grid");
  EccentricityReport<N> rep;
  rep.method = to_string(opt.method);
  rep.exponent = grid.exponent;
  rep.rmax = grid.rmax;
  rep.step = grid.step;
  rep.refine = grid.refine;
  rep.points.push_back(grid.o);
  rep.radii.push_back(0.0);
  const double dr = grid.step / static_cast<double>(1 << grid.refine);
  const int shells = static_cast<int>(std::floor(grid.rmax / dr + 1e-9));
  for (int k = 1; k <= shells; ++k) {
    const double r = k * dr;
    double realized = 0.0;
    for (const auto& x : detail::hilbert_shell(omega, grid.o, r, grid.step, grid.refine, realized)) {
      rep.points.push_back(x);
      rep.radii.push_back(r);
    }
    rep.spacing = std::max(rep.spacing, realized);
  }
  rep.c.assign(rep.points.size(), 0.0);
  num::parallel_for(rep.points.size(), [&](std::size_t i) { rep.c[i] = eccentricity_local(omega, rep.points[i], opt); });
  rep.sup_c = rep.c[0];
  for (std::size_t i = 1; i < rep.c.size(); ++i)
    if (rep.c[i] > rep.sup_c) {
      rep.sup_c = rep.c[i];
      rep.argmax = i;
    }
  rep.value = std::pow(rep.sup_c, rep.exponent);
  return rep;
}

}  // namespace hilbertlab
