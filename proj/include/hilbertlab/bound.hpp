#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "hilbertlab/barycenter.hpp"
#include "hilbertlab/eccentricity.hpp"
#include "hilbertlab/numerics.hpp"
#include "hilbertlab/projective.hpp"

namespace hilbertlab {

/// Riemannian metric of the Klein model of E at x (curvature -1).
template <int N>
Mat<N> klein_metric(const Ellipsoid<N>& E, const Pt<N>& x) {
  const Vec<N> y = E.to_ball(x);
  const double m = 1.0 - y.squaredNorm();
  if (!(m > 0.0)) fail(ErrorKind::PointOutside, "point outside the target ellipsoid");
  const Mat<N> G = Mat<N>::Identity() / m + y * y.transpose() / (m * m);
  return E.ball_map().transpose() * G * E.ball_map();
}

struct BoundConfig {
  double entropy = 0.0;         // h(F_Omega), typically an estimate
  double eccentricity = 1.0;    // implemented e(F_Omega)
  std::string eccentricity_definition = "(sup_p c(p))^n, john";
  double jacobian_step = 1e-4;
  double homothety_tol = 1e-3;
  EccentricityOptions local{};
};

template <int N>
struct BoundPoint {
  Vec<N> a;
  Vec<N> image;
  Mat<N> J;
  double jac = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  double c_local = 1.0;
  double residual = 0.0;  // homothety residual of the metric-normalized J
  bool homothety = false;
};

template <int N>
struct BoundReport {
  std::vector<BoundPoint<N>> points;
  double entropy = 0.0;
  double h0 = N - 1;
  double eccentricity = 1.0;
  std::string eccentricity_definition;
  double bound = 0.0;     // (h / h0)^n e, the same at every point
  double min_margin = 0.0;
  std::size_t worst = 0;
};

/// Homothety between (T_a Omega, F) and (T_Phi(a) E, g0): the Finsler ball at a must be an
/// ellipsoid (c = 1) and J must carry it onto a round g0-ball.
template <int N>
void homothety_verdict(const NaturalMap<N>& Phi, BoundPoint<N>& pt, const BoundConfig& cfg) {
  const auto loc = eccentricity_local_report(*Phi.source, pt.a, cfg.local);
  pt.c_local = loc.c;
  const Mat<N> g_half = num::spd_sqrt(klein_metric(*Phi.target, pt.image)).first;
  const Mat<N> e_half = num::spd_sqrt(loc.shape).first;
  const auto v = is_projective_homothety(g_half * pt.J * e_half, cfg.homothety_tol);
  pt.residual = v.residual;
  pt.homothety = v.homothety && loc.c - 1.0 <= cfg.homothety_tol;
}

/// Jac_a Phi <= (h / (n-1))^n e at each point; margin = bound - jac.
template <int N>
BoundReport<N> bound_check(const NaturalMap<N>& Phi, const std::vector<Vec<N>>& points, const BoundConfig& cfg) {
  if (points.empty()) fail(ErrorKind::InvalidInput, "bound_check needs at least one point");
  if (!(cfg.entropy >= 0.0) || !(cfg.eccentricity >= 1.0 - 1e-9))
    fail(ErrorKind::InvalidInput, "entropy must be >= 0 and eccentricity >= 1");
  BoundReport<N> rep;
  rep.entropy = cfg.entropy;
  rep.eccentricity = cfg.eccentricity;
  rep.eccentricity_definition = cfg.eccentricity_definition;
  rep.bound = std::pow(cfg.entropy / rep.h0, N) * cfg.eccentricity;
  for (const auto& a : points) {
    BoundPoint<N> pt;
    pt.a = a;
    const auto jr = jacobian_at(Phi, a, cfg.jacobian_step);
    pt.J = jr.J;
    pt.image = jr.image;
    pt.jac = jr.jac;
    pt.bound = rep.bound;
    pt.margin = pt.bound - pt.jac;
    homothety_verdict(Phi, pt, cfg);
    rep.points.push_back(pt);
  }
  rep.min_margin = rep.points[0].margin;
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (rep.points[i].margin < rep.min_margin) {
      rep.min_margin = rep.points[i].margin;
      rep.worst = i;
    }
  return rep;
}

/// Five interior sample points: the basepoint and four points at Hilbert distance r along
/// the axis and diagonal directions.
template <int N>
std::vector<Vec<N>> default_bound_points(const ConvexDomain<N>& omega, double r = 0.6) {
  std::vector<Vec<N>> pts{Vec<N>::Zero()};
  std::vector<Vec<N>> dirs;
  if constexpr (N == 2) {
    dirs = {Vec<2>(1, 0), Vec<2>(0.6, 0.8), Vec<2>(-0.8, 0.3), Vec<2>(0.1, -1)};
  } else {
    dirs = {Vec<3>(1, 0, 0), Vec<3>(0.6, 0.8, 0), Vec<3>(-0.5, 0.3, 0.6), Vec<3>(0.1, -0.4, -1)};
  }
  for (auto u : dirs) {
    u.normalize();
    const Vec<N> mu = -u;
    const double tp = omega.exit_distance(Vec<N>::Zero(), u), tm = omega.exit_distance(Vec<N>::Zero(), mu);
    const double e = std::expm1(2.0 * r);
    pts.push_back(tp * tm * e / (tp + (e + 1.0) * tm) * u);
  }
  return pts;
}

}  // namespace hilbertlab
