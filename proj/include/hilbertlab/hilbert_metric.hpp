#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "hilbertlab/domain.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/numerics.hpp"

namespace hilbertlab {

template <int N>
void require_inside(const ConvexDomain<N>& omega, const Pt<N>& x, const char* what = "point") {
  if (!x.allFinite() || !omega.contains(x))
    fail(ErrorKind::PointOutside, std::string(what) + " is not inside the domain");
}

/// Boundary hits p- and p+ of the line through p with direction v.
template <int N>
std::pair<Vec<N>, Vec<N>> ray_boundary(const ConvexDomain<N>& omega, const Pt<N>& p,
                                       const Pt<N>& v) {
  require_inside(omega, p);
  if (!v.allFinite() || v.isZero(0.0)) fail(ErrorKind::InvalidInput, "zero direction");
  const Vec<N> w = -v;
  const double tp = omega.exit_distance(p, v);
  const double tm = omega.exit_distance(p, w);
  return {p + tm * w, p + tp * v};
}

/// Hilbert distance, as 1/2 [log1p(s/alpha) + log1p(s/beta)] with alpha, beta
/// the boundary gaps behind x and beyond y. Exactly symmetric in x, y.
template <int N>
double hilbert_distance(const ConvexDomain<N>& omega, const Pt<N>& x, const Pt<N>& y) {
  require_inside(omega, x, "x");
  require_inside(omega, y, "y");
  const Vec<N> diff = y - x;
  const double s = diff.norm();
  if (s == 0.0) return 0.0;
  const Vec<N> u = diff / s;
  const Vec<N> mu = -u;
  const double alpha = omega.exit_distance(x, mu);
  const double beta = omega.exit_distance(y, u);
  return 0.5 * (std::log1p(s / alpha) + std::log1p(s / beta));
}

/// F(p, v) = |v|/2 (1/|p - p+| + 1/|p - p-|).
template <int N>
double finsler_norm(const ConvexDomain<N>& omega, const Pt<N>& p, const Pt<N>& v) {
  require_inside(omega, p);
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  const Vec<N> u = v / nv;
  const Vec<N> mu = -u;
  return 0.5 * nv * (1.0 / omega.exit_distance(p, u) + 1.0 / omega.exit_distance(p, mu));
}

/// Length of the piecewise-linear path through the samples.
template <int N>
double curve_length(const ConvexDomain<N>& omega, const std::vector<Vec<N>>& path,
                    double rtol = 1e-13) {
  for (const auto& q : path) require_inside(omega, q, "path sample");
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec<N> a = path[i - 1], d = path[i] - path[i - 1];
    if (d.isZero(0.0)) continue;
    total += num::adaptive_gauss([&](double t) { return finsler_norm(omega, Vec<N>(a + t * d), d); },
                                 0.0, 1.0, rtol);
  }
  return total;
}

struct BusemannOptions {
  double tol = 1e-9;
  int max_steps = 60;
};

/// Busemann function beta_p(x, xi) = lim d(x, c) - d(p, c), c -> xi along [p, xi).
/// Samples c with d(p, c) = k; gaps near xi are measured through the
/// cancellation-free level increment at xi.
template <int N>
double busemann(const ConvexDomain<N>& omega, const Pt<N>& p, const Pt<N>& x,
                const Pt<N>& xi, const BusemannOptions& opt = {}) {
  require_inside(omega, p, "p");
  require_inside(omega, x, "x");
  if (!xi.allFinite() || std::abs(omega.level(xi)) > 1e-12)
    fail(ErrorKind::InvalidInput, "xi is not a boundary point");
  const Vec<N> grad = omega.gradient(xi);
  if (!(grad.norm() > 1e-10)) fail(ErrorKind::InvalidInput, "xi is not a smooth boundary point");
  if (x == p) return 0.0;

  const Vec<N> to_xi = xi - p;
  const double L = to_xi.norm();
  const Vec<N> u = to_xi / L;
  const Vec<N> mu = -u;
  const double alpha_p = omega.exit_distance(p, mu);
  const Vec<N> xi_x = xi - x;

  // Far gap tau beyond c along w: level_increment(xi, tau w - eps u) = 0.
  auto front_gap = [&](double eps, const Pt<N>& w) {
    auto g = [&](double tau) { return omega.level_increment(xi, Vec<N>(tau * w - eps * u)); };
    auto dg = [&](double tau) { return omega.gradient(Vec<N>(xi + (tau * w - eps * u))).dot(w); };
    double lo = 0.0, hi = eps;
    double fhi = g(hi);
    for (int k = 0; fhi <= 0.0; ++k) {
      if (k > 2000) throw NoConvergence("hilbert_metric", "busemann.front_gap", 2000);
      lo = hi;
      hi *= 2.0;
      fhi = g(hi);
    }
    double t = hi, ft = fhi;
    for (int it = 0; it < 200; ++it) {
      const double slope = dg(t);
      double next = slope > 0.0 ? t - ft / slope : 0.5 * (lo + t);
      if (!(next > lo) || !(next < t)) next = 0.5 * (lo + t);
      const double fn = g(next);
      if (fn > 0.0) {
        const double step = t - next;
        t = next;
        ft = fn;
        if (step <= 1e-15 * t) return t;
      } else {
        lo = next;
        if (fn == 0.0 || t - next <= 1e-15 * t) return next;
      }
    }
    throw NoConvergence("hilbert_metric", "busemann.front_gap", 200);
  };

  auto difference = [&](double eps) {
    const double dpc = 0.5 * (std::log1p((L - eps) / alpha_p) + std::log(L / eps));
    const Vec<N> cx = xi_x - eps * u;
    const double s = cx.norm();
    if (s <= 1e-300) return -dpc;
    const Vec<N> w = cx / s;
    const Vec<N> mw = -w;
    const double tau = front_gap(eps, w);
    const double alpha_x = omega.exit_distance(x, mw);
    return 0.5 * (std::log1p(s / alpha_x) + std::log((s + tau) / L) + std::log(eps / tau)) -
           0.5 * std::log1p((L - eps) / alpha_p);
  };

  double prev = 0.0, prev_eps = 0.0;
  for (int k = 1; k <= opt.max_steps; ++k) {
    const double eps = L * (L + alpha_p) / (alpha_p * std::exp(2.0 * k) + L);
    const double cur = difference(eps);
    if (k >= 3 && std::abs(cur - prev) < opt.tol) {
      const double r = eps / prev_eps;
      return cur + (cur - prev) * r / (1.0 - r);
    }
    prev = cur;
    prev_eps = eps;
  }
  throw NoConvergence("hilbert_metric", "busemann", opt.max_steps);
}

/// Points of the horosphere {y : beta_p(y, xi) = 0} along a fan of chords from xi.
/// Along each chord beta is affine with slope 1 in the signed Hilbert coordinate.
inline std::vector<Vec<2>> horosphere_polyline(const ConvexDomain<2>& omega, const Vec<2>& xi,
                                               const Vec<2>& p, int samples,
                                               const BusemannOptions& opt = {}) {
  if (samples < 2) fail(ErrorKind::InvalidInput, "horosphere needs at least 2 samples");
  require_inside(omega, p, "p");
  const Vec<2> grad = omega.gradient(xi);
  if (!(grad.norm() > 1e-10)) fail(ErrorKind::InvalidInput, "xi is not a smooth boundary point");
  const Vec<2> n_in = -grad.normalized();
  const Vec<2> t_dir(-n_in(1), n_in(0));
  std::vector<Vec<2>> out(samples);
  num::parallel_for(samples, [&](std::size_t j) {
    const double th = -0.5 * std::numbers::pi + std::numbers::pi * (j + 0.5) / samples;
    const Vec<2> e = std::cos(th) * n_in + std::sin(th) * t_dir;
    const double ell = omega.exit_distance(xi, e);
    auto at = [&](double r) { return Vec<2>(xi + (ell / (1.0 + std::exp(-2.0 * r))) * e); };
    double r = 0.0;
    for (int it = 0; it < 30; ++it) {
      const Vec<2> y = at(r);
      const double b = busemann(omega, p, y, xi, opt);
      if (std::abs(b) <= 1e-9) {
        out[j] = y;
        return;
      }
      r -= b;
    }
    throw NoConvergence("hilbert_metric", "horosphere_polyline", 30);
  }, 1);
  return out;
}

struct DensityOptions {
  int directions = 256;       // trapezoid points over the full circle (n = 2)
  int sphere_points = 1 << 16;  // low-discrepancy points on S^2 (n = 3)
  std::uint64_t seed = 0;
  bool use_exact = true;      // closed-form density when the domain has one
};

namespace detail {

/// Preconditioner L with L^{-1} B_F(p) close to round; returns (L, det L).
template <int N>
Mat<N> round_frame(const ConvexDomain<N>& omega, const Pt<N>& p) {
  Mat<N> L = Mat<N>::Identity();
  constexpr int params = N * (N + 1) / 2;
  const int m = (N == 2) ? 12 : 24;
  for (int iter = 0; iter < 4; ++iter) {
    Eigen::Matrix<double, Eigen::Dynamic, params> A(m, params);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
      Vec<N> e;
      if constexpr (N == 2) {
        const double a = std::numbers::pi * i / m;
        e << std::cos(a), std::sin(a);
      } else {
        e = direction<N>(i, 2 * m);
        if (e(2) < 0) e = -e;
      }
      const double f = finsler_norm(omega, p, Vec<N>(L * e));
      int c = 0;
      for (int r = 0; r < N; ++r)
        for (int s = r; s < N; ++s) A(i, c++) = (r == s ? 1.0 : 2.0) * e(r) * e(s);
      rhs(i) = f * f;
    }
    const Eigen::Matrix<double, params, 1> q = A.colPivHouseholderQr().solve(rhs);
    Mat<N> Q;
    int c = 0;
    for (int r = 0; r < N; ++r)
      for (int s = r; s < N; ++s) {
        Q(r, s) = q(c);
        Q(s, r) = q(c);
        ++c;
      }
    Eigen::SelfAdjointEigenSolver<Mat<N>> es(Q);
    if (!(es.eigenvalues().minCoeff() > 0.0)) break;
    const Mat<N> inv_root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                            es.eigenvectors().transpose();
    L = L * inv_root;
    const double spread = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    if (spread < 1.0 + 1e-3) break;
  }
  return L;
}

}  // namespace detail

/// Lebesgue measure of the Finsler unit ball {v : F(p, v) < 1}.
template <int N>
double finsler_ball_volume(const ConvexDomain<N>& omega, const Pt<N>& p,
                           const DensityOptions& opt = {}) {
  const Mat<N> L = detail::round_frame(omega, p);
  const double detL = std::abs(L.determinant());
  if constexpr (N == 2) {
    const int half = opt.directions / 2;
    double s = 0.0;
    for (int j = 0; j < half; ++j) {
      const double a = std::numbers::pi * j / half;
      const Vec<2> e(std::cos(a), std::sin(a));
      const double rho = 1.0 / finsler_norm(omega, p, Vec<2>(L * e));
      s += rho * rho;
    }
    return detL * s * std::numbers::pi / half;
  } else {
    std::mt19937_64 rng(opt.seed);
    const Mat<3> rot = Eigen::Quaterniond(Eigen::Vector4d(random_unit<4>(rng))).toRotationMatrix();
    const int m = opt.sphere_points;
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      const Vec<3> e = rot * direction<3>(j, m);
      const double rho = 1.0 / finsler_norm(omega, p, Vec<3>(L * e));
      s += rho * rho * rho;
    }
    return detL * (4.0 * std::numbers::pi / 3.0) * s / m;
  }
}

/// Busemann-Hausdorff density omega_n / Leb(B_F(p)) of the Hilbert volume.
template <int N>
double volume_density(const ConvexDomain<N>& omega, const Pt<N>& p,
                      const DensityOptions& opt = {}) {
  require_inside(omega, p);
  if (opt.use_exact)
    if (auto d = omega.exact_volume_density(p)) return *d;
  const double unit = (N == 2) ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
  return unit / finsler_ball_volume(omega, p, opt);
}

}  // namespace hilbertlab
