#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include "hilbertlab/domain.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "hilbertlab/numerics.hpp"

namespace hilbertlab {

template <int N>
struct Atom {
  Vec<N> xi;
  double w = 0.0;
};

/// Finite atomic measure on a domain boundary.
template <int N>
struct BoundaryMeasure {
  std::vector<Atom<N>> atoms;

  double total() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.w;
    return s;
  }
  double max_fraction() const {
    const double t = total();
    double m = 0.0;
    for (const auto& a : atoms) m = std::max(m, a.w);
    return m / t;
  }
};

/// n = 2: count atoms at equal angles on the radial boundary, each of weight 1/count.
template <int N>
BoundaryMeasure<N> uniform_reference(const ConvexDomain<N>& omega, int count) {
  if (count < 3) fail(ErrorKind::InvalidInput, "reference measure needs at least 3 atoms");
  BoundaryMeasure<N> m;
  m.atoms.resize(count);
  for (int i = 0; i < count; ++i)
    m.atoms[i] = {radial_boundary_point(omega, direction<N>(i, count)), 1.0 / count};
  return m;
}

/// Family a -> mu_a with d mu_a / d mu_o (xi) = exp(-alpha beta_o(a, xi)).
template <int N>
struct BusemannDensityFamily {
  std::shared_ptr<const ConvexDomain<N>> omega;
  Vec<N> o = Vec<N>::Zero();
  BoundaryMeasure<N> reference;
  double alpha = N - 1.0;
  BusemannOptions busemann_options{};
};

template <int N>
BoundaryMeasure<N> density_measure(const BusemannDensityFamily<N>& fam, const Pt<N>& a) {
  if (!(fam.alpha > 0.0)) fail(ErrorKind::InvalidInput, "density exponent must be positive");
  require_inside(*fam.omega, a, "a");
  BoundaryMeasure<N> out = fam.reference;
  for (auto& atom : out.atoms)
    atom.w *= std::exp(-fam.alpha * busemann(*fam.omega, fam.o, a, atom.xi, fam.busemann_options));
  return out;
}

struct BarycenterOptions {
  double tol = 1e-9;
  int max_iter = 200;
};

struct BarycenterResult {
  int iterations = 0;
  double gradient_norm = 0.0;
  int gradient_steps = 0;  // iterations that fell back to gradient descent
};

namespace detail {

/// B(y) = sum w log(1 - y.eta) - 1/2 log(1 - |y|^2) on the unit ball, weights summing to 1.
template <int N>
struct BallObjective {
  const std::vector<Vec<N>>& eta;
  const std::vector<double>& w;

  double value(const Pt<N>& y) const {
    const double m = 1.0 - y.squaredNorm();
    if (!(m > 0.0)) return INFINITY;
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const double t = 1.0 - y.dot(eta[i]);
      if (!(t > 0.0)) return INFINITY;
      s += w[i] * std::log(t);
    }
    return s - 0.5 * std::log(m);
  }

  void derivatives(const Pt<N>& y, Vec<N>& g, Mat<N>& H) const {
    const double m = 1.0 - y.squaredNorm();
    g = y / m;
    H = Mat<N>::Identity() / m + (2.0 / (m * m)) * y * y.transpose();
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const double t = 1.0 - y.dot(eta[i]);
      g -= (w[i] / t) * eta[i];
      H -= (w[i] / (t * t)) * eta[i] * eta[i].transpose();
    }
  }
};

}  // namespace detail

/// Riemannian Hessian of B in Klein coordinates: H - (P g^T + g P^T), P = y / (1 - |y|^2).
template <int N>
Mat<N> klein_riemannian_hessian(const Vec<N>& y, const Vec<N>& g, const Mat<N>& H) {
  const Vec<N> P = y / (1.0 - y.squaredNorm());
  return H - (P * g.transpose() + g * P.transpose());
}

/// argmin of x -> integral of beta_o(x, xi) d nu(xi) on an ellipsoid.
template <int N>
Vec<N> barycenter(const Ellipsoid<N>& E, const BoundaryMeasure<N>& nu,
                  const BarycenterOptions& opt = {}, BarycenterResult* info = nullptr) {
  if (nu.atoms.empty()) fail(ErrorKind::DegenerateMeasure, "empty measure");
  double W = 0.0, wmax = 0.0;
  for (const auto& a : nu.atoms) {
    if (!(a.w >= 0.0) || !std::isfinite(a.w)) fail(ErrorKind::InvalidInput, "atom weights must be finite and >= 0");
    if (std::abs(E.level(a.xi)) > 1e-9) fail(ErrorKind::InvalidInput, "atom not on the ellipsoid boundary");
    W += a.w;
    wmax = std::max(wmax, a.w);
  }
  if (!(W > 0.0)) fail(ErrorKind::DegenerateMeasure, "measure has zero mass");
  if (wmax / W >= 0.5) fail(ErrorKind::AtomTooHeavy, "an atom carries at least half the mass");

  std::vector<Vec<N>> eta;
  std::vector<double> w;
  eta.reserve(nu.atoms.size());
  w.reserve(nu.atoms.size());
  for (const auto& a : nu.atoms) {
    if (a.w == 0.0) continue;
    eta.push_back(E.to_ball(a.xi).normalized());
    w.push_back(a.w / W);
  }
  const detail::BallObjective<N> B{eta, w};
  const Mat<N> Rt = E.ball_map().transpose();

  Vec<N> y = Vec<N>::Zero();
  Vec<N> g;
  Mat<N> H;
  BarycenterResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    B.derivatives(y, g, H);
    const double gnorm = (Rt * g).norm();
    res.iterations = it;
    res.gradient_norm = gnorm;
    if (gnorm <= opt.tol) {
      if (info) *info = res;
      return E.from_ball(y);
    }
    const Mat<N> HR = klein_riemannian_hessian(y, g, H);
    Eigen::SelfAdjointEigenSolver<Mat<N>> es(HR);
    const auto ev = es.eigenvalues();
    Vec<N> dir;
    const bool newton = ev.minCoeff() > 0.0 && ev.maxCoeff() / ev.minCoeff() <= 1e8;
    if (newton) {
      dir = -HR.ldlt().solve(g);
    } else {
      // Riemannian gradient direction.
      const double m = 1.0 - y.squaredNorm();
      const Mat<N> Ginv = m * (Mat<N>::Identity() - y * y.transpose());
      dir = -Ginv * g;
      ++res.gradient_steps;
    }
    const double f0 = B.value(y), slope = g.dot(dir);
    double step = 1.0;
    // Keep the trial point inside the ball.
    const double dn = dir.norm();
    const double room = 1.0 - y.norm();
    if (step * dn >= room) step = 0.5 * room / dn;
    bool accepted = false;
    if (newton && step == 1.0 && -slope < 1e-8) {
      // quadratic regime: decreases in B are below rounding, judge the step by the gradient
      Vec<N> gt;
      Mat<N> Ht;
      const Vec<N> trial = y + dir;
      B.derivatives(trial, gt, Ht);
      if ((Rt * gt).norm() < gnorm) {
        y = trial;
        continue;
      }
    }
    for (int ls = 0; ls < 60; ++ls) {
      const Vec<N> trial = y + step * dir;
      const double ft = B.value(trial);
      if (ft < f0 && ft <= f0 + 1e-4 * step * slope) {
        y = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease available at double precision; accept if stationary enough.
      if (gnorm <= 100.0 * opt.tol) {
        if (info) *info = res;
        return E.from_ball(y);
      }
      throw NoConvergence("barycenter_naturalmap", "barycenter.line_search", 60);
    }
  }
  throw NoConvergence("barycenter_naturalmap", "barycenter", opt.max_iter);
}

/// Gradient of x -> integral beta_o(x, xi) d nu on the ellipsoid, chart coordinates.
template <int N>
Vec<N> barycenter_gradient(const Ellipsoid<N>& E, const BoundaryMeasure<N>& nu, const Pt<N>& x) {
  std::vector<Vec<N>> eta;
  std::vector<double> w;
  const double W = nu.total();
  for (const auto& a : nu.atoms) {
    eta.push_back(E.to_ball(a.xi).normalized());
    w.push_back(a.w / W);
  }
  const detail::BallObjective<N> B{eta, w};
  Vec<N> g;
  Mat<N> H;
  B.derivatives(E.to_ball(x), g, H);
  return E.ball_map().transpose() * g;
}

/// Boundary map phi: boundary of the source -> boundary of the target.
template <int N>
struct BoundaryMap {
  std::function<Vec<N>(const Vec<N>&)> map;
  Vec<N> operator()(const Pt<N>& xi) const { return map(xi); }
};

/// phi(xi) = the point where the ray from the origin through xi leaves the target.
template <int N>
BoundaryMap<N> radial_boundary_map(std::shared_ptr<const ConvexDomain<N>> source,
                                   std::shared_ptr<const Ellipsoid<N>> target) {
  (void)source;
  if (!target->contains(Vec<N>::Zero())) fail(ErrorKind::InvalidInput, "target must contain the origin");
  return {[target](const Pt<N>& xi) {
    if (xi.isZero(0.0)) fail(ErrorKind::InvalidInput, "boundary point at the origin");
    return radial_boundary_point(*target, xi);
  }};
}

/// Phi(a) = barycenter of phi_* mu_a.
template <int N>
struct NaturalMap {
  std::shared_ptr<const ConvexDomain<N>> source;
  std::shared_ptr<const Ellipsoid<N>> target;
  BoundaryMap<N> phi;
  BusemannDensityFamily<N> family;
  BarycenterOptions barycenter_options{};

  /// Pushes the boundary atoms once; the map then only reweights them.
  std::vector<Vec<N>> pushed_atoms() const {
    std::vector<Vec<N>> out;
    out.reserve(family.reference.atoms.size());
    for (const auto& a : family.reference.atoms) out.push_back(phi(a.xi));
    return out;
  }

  Vec<N> operator()(const Pt<N>& a) const {
    BoundaryMeasure<N> mu = density_measure(family, a);
    for (auto& atom : mu.atoms) atom.xi = phi(atom.xi);
    return barycenter(*target, mu, barycenter_options);
  }
};

template <int N>
NaturalMap<N> make_natural_map(std::shared_ptr<const ConvexDomain<N>> source,
                               std::shared_ptr<const Ellipsoid<N>> target, double alpha,
                               int atoms = 512) {
  NaturalMap<N> m;
  m.source = source;
  m.target = target;
  m.phi = radial_boundary_map<N>(source, target);
  m.family.omega = source;
  m.family.o = Vec<N>::Zero();
  m.family.reference = uniform_reference(*source, atoms);
  m.family.alpha = alpha;
  return m;
}

template <int N>
struct JacobianResult {
  Mat<N> J;
  double jac = 0.0;        // |det J| vol_E(Phi(a)) / vol_Omega(a)
  double det = 0.0;
  Vec<N> image;
  double agreement = 0.0;  // relative gap between the h and h/2 difference quotients
};

/// Central differences at h and h/2 with a Richardson combination.
template <int N>
JacobianResult<N> jacobian_at(const NaturalMap<N>& Phi, const Pt<N>& a, double h = 1e-4,
                              const DensityOptions& dopt = {}) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "step must be positive");
  for (int k = 0; k < N; ++k)
    for (double sgn : {-1.0, 1.0})
      require_inside(*Phi.source, Vec<N>(a + sgn * h * Vec<N>::Unit(k)), "a +/- h e_k");
  std::vector<Vec<N>> pts;
  for (double step : {h, 0.5 * h})
    for (int k = 0; k < N; ++k)
      for (double sgn : {1.0, -1.0}) pts.push_back(a + sgn * step * Vec<N>::Unit(k));
  pts.push_back(a);
  std::vector<Vec<N>> img(pts.size());
  num::parallel_for(pts.size(), [&](std::size_t i) { img[i] = Phi(pts[i]); });
  Mat<N> Jh, Jh2;
  for (int k = 0; k < N; ++k) {
    Jh.col(k) = (img[2 * k] - img[2 * k + 1]) / (2.0 * h);
    Jh2.col(k) = (img[2 * N + 2 * k] - img[2 * N + 2 * k + 1]) / h;
  }
  JacobianResult<N> r;
  r.J = (4.0 * Jh2 - Jh) / 3.0;
  r.agreement = (Jh - Jh2).cwiseAbs().maxCoeff() / std::max(1.0, r.J.cwiseAbs().maxCoeff());
  if (!(r.agreement <= 1e-4)) throw NoConvergence("barycenter_naturalmap", "jacobian_at", 2);
  r.image = img.back();
  r.det = r.J.determinant();
  r.jac = std::abs(r.det) * volume_density(*Phi.target, r.image, dopt) /
          volume_density(*Phi.source, a, dopt);
  return r;
}

}  // namespace hilbertlab
