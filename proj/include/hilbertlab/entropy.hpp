#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hilbertlab/domain.hpp"
#include "hilbertlab/errors.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "hilbertlab/numerics.hpp"

namespace hilbertlab {

struct EntropyEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  double raw_slope = 0.0;         // plain least-squares slope of log V (or log N) against R
  std::string method;             // "ball-growth" or "orbit-count"
  std::vector<double> radii;
  std::vector<double> sizes;      // volumes or counts at the radii
  bool warning = false;           // value exceeds (n - 1) + 0.1
  std::string note;
};

struct BallVolumeOptions {
  int directions = 512;
  int radial_nodes = 64;      // on the first segment
  int segment_nodes = 10;     // on each later segment of a profile
  DensityOptions density{};
};

namespace detail {

/// Euclidean radius at Hilbert radius r along a chord with exits tp (forward), tm (backward).
inline double chord_radius(double tp, double tm, double r) {
  const double e = std::expm1(2.0 * r);
  return tp * tm * e / (tp + (e + 1.0) * tm);
}
inline double chord_radius_derivative(double tp, double tm, double r) {
  const double e = std::exp(2.0 * r);
  const double d = tp + e * tm;
  return 2.0 * e * tp * tm * (tp + tm) / (d * d);
}

}  // namespace detail

/// Hilbert volumes of B(o, R_i) for increasing radii, by polar integration in the
/// Hilbert radial variable with composite Gauss-Legendre segments.
template <int N>
std::vector<double> ball_volume_profile(const ConvexDomain<N>& omega, const Pt<N>& o,
                                        const std::vector<double>& radii,
                                        const BallVolumeOptions& opt = {}) {
  require_inside(omega, o, "o");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > (i ? radii[i - 1] : 0.0))) fail(ErrorKind::InvalidInput, "radii must be positive and increasing");
  const int m = opt.directions;
  std::vector<std::vector<double>> per_dir(m, std::vector<double>(radii.size(), 0.0));
  num::parallel_for(m, [&](std::size_t j) {
    const Vec<N> u = direction<N>(static_cast<int>(j), m);
    const Vec<N> mu = -u;
    const double tp = omega.exit_distance(o, u), tm = omega.exit_distance(o, mu);
    double acc = 0.0, lo = 0.0;
    for (std::size_t s = 0; s < radii.size(); ++s) {
      const double hi = radii[s];
      const int nodes = s == 0 ? opt.radial_nodes : opt.segment_nodes;
      const auto& rule = num::gauss_legendre(nodes);
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      double seg = 0.0;
      for (int k = 0; k < nodes; ++k) {
        const double r = mid + half * rule.nodes[k];
        const double rho = detail::chord_radius(tp, tm, r);
        const double jac = std::pow(rho, N - 1) * detail::chord_radius_derivative(tp, tm, r);
        seg += rule.weights[k] * jac * volume_density(omega, Vec<N>(o + rho * u), opt.density);
      }
      acc += seg * half;
      per_dir[j][s] = acc;
      lo = hi;
    }
  });
  const double sphere = (N == 2) ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  std::vector<double> out(radii.size(), 0.0);
  for (std::size_t s = 0; s < radii.size(); ++s) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += per_dir[j][s];
    out[s] = sphere * sum / m;
  }
  return out;
}

template <int N>
double ball_volume(const ConvexDomain<N>& omega, const Pt<N>& o, double R,
                   const BallVolumeOptions& opt = {}) {
  if (!(R > 0.0)) fail(ErrorKind::InvalidInput, "radius must be positive");
  return ball_volume_profile(omega, o, {R}, opt)[0];
}

namespace growth {

/// log of G_n(h R) / h^n, where G_2(x) = cosh x - 1 and G_3(x) = sinh x - x are the
/// constant-curvature ball-growth shapes (up to normalization). Smooth as h -> 0.
inline double log_shape(int n, double h, double R) {
  const double x = h * R;
  if (n == 2) {
    // cosh x - 1 = 2 sinh^2(x/2)
    double ls;
    if (x < 1e-4) {
      ls = std::log(0.5 * R) + std::log1p(x * x / 24.0);
      return std::log(2.0) + 2.0 * ls;
    }
    const double y = 0.5 * x;
    const double log_sinh = y < 20.0 ? std::log(std::sinh(y)) : y + std::log1p(-std::exp(-2.0 * y)) - std::log(2.0);
    return std::log(2.0) + 2.0 * log_sinh - 2.0 * std::log(h);
  }
  // sinh x - x = x^3/6 (1 + x^2/20 + x^4/840 + ...)
  if (x < 1e-2) {
    return 3.0 * std::log(R) - std::log(6.0) + std::log1p(x * x / 20.0 + x * x * x * x / 840.0);
  }
  double lg;
  if (x < 30.0)
    lg = std::log(std::sinh(x) - x);
  else
    lg = x - std::log(2.0) + std::log1p(-2.0 * x * std::exp(-x) - std::exp(-2.0 * x));
  return lg - 3.0 * std::log(h);
}

inline double log_shape_dim(int n, double h, double R) {
  return n == 2 ? log_shape(2, h, R) : log_shape(3, h, R);
}

struct Fit {
  double h = 0.0;
  double stderr_ = 0.0;
  double log_amplitude = 0.0;
};

/// Least squares of log V against log A + log_shape(h R) over h in [0, n].
inline Fit fit_log_volumes(int n, const std::vector<double>& R, const std::vector<double>& V) {
  const std::size_t m = R.size();
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = std::log(V[i]);
  auto rss = [&](double h) {
    double mean = 0.0;
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) {
      r[i] = y[i] - log_shape_dim(n, h, R[i]);
      mean += r[i];
    }
    mean /= m;
    double s = 0.0;
    for (double v : r) s += (v - mean) * (v - mean);
    return s;
  };
  Fit f;
  f.h = num::grid_golden_min(rss, 0.0, n, 200, 1e-14).first;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += y[i] - log_shape_dim(n, f.h, R[i]);
  f.log_amplitude = mean / m;
  // Regression standard error from the linearized model in (log A, h).
  const double dh = 1e-6;
  Eigen::MatrixXd Jm(m, 2);
  double s2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double hp = f.h + dh, hm = std::max(0.0, f.h - dh);
    Jm(i, 0) = 1.0;
    Jm(i, 1) = (log_shape_dim(n, hp, R[i]) - log_shape_dim(n, hm, R[i])) / (hp - hm);
    const double res = y[i] - f.log_amplitude - log_shape_dim(n, f.h, R[i]);
    s2 += res * res;
  }
  if (m > 2) {
    s2 /= static_cast<double>(m - 2);
    const Eigen::Matrix2d cov = s2 * (Jm.transpose() * Jm).inverse();
    f.stderr_ = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  return f;
}

/// Poisson-weighted least squares of counts against A * exp(log_shape(h R)).
inline Fit fit_counts(int n, const std::vector<double>& R, const std::vector<double>& Ncount) {
  const std::size_t m = R.size();
  auto objective = [&](double h) {
    // Best amplitude for fixed h in closed form, weights 1/N.
    double num = 0.0, den = 0.0;
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = std::exp(log_shape_dim(n, h, R[i]) - log_shape_dim(n, h, R.back()));
      num += g[i];               // sum w N g with w = 1/N
      den += g[i] * g[i] / Ncount[i];
    }
    const double A = num / den;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = Ncount[i] - A * g[i];
      s += r * r / Ncount[i];
    }
    return s;
  };
  Fit f;
  f.h = num::grid_golden_min(objective, 0.0, n, 200, 1e-14).first;
  return f;
}

inline double plain_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace growth

/// Volume-growth entropy from 8 ball volumes on [Rmin, Rmax], fitted to the
/// constant-curvature growth law V(R) = A (int_0^R sinh^(n-1)(h r/(n-1)) dr).
template <int N>
EntropyEstimate volume_entropy_estimate(const ConvexDomain<N>& omega, const Pt<N>& o,
                                        double Rmin, double Rmax,
                                        const BallVolumeOptions& opt = {}) {
  if (!(Rmin >= 1.0) || !(Rmax > Rmin)) fail(ErrorKind::InvalidInput, "need Rmax > Rmin >= 1");
  EntropyEstimate e;
  e.method = "ball-growth";
  for (int i = 0; i < 8; ++i) e.radii.push_back(Rmin + (Rmax - Rmin) * i / 7.0);
  e.sizes = ball_volume_profile(omega, o, e.radii, opt);
  for (double v : e.sizes)
    if (!(v > 0.0) || !std::isfinite(v)) throw NoConvergence("entropy_rigidity", "ball_volume", 0);
  const auto fit = growth::fit_log_volumes(N, e.radii, e.sizes);
  e.value = fit.h;
  e.stderr_ = fit.stderr_;
  std::vector<double> logs;
  for (double v : e.sizes) logs.push_back(std::log(v));
  e.raw_slope = growth::plain_slope(e.radii, logs);
  e.warning = e.value > (N - 1) + 0.1;
  return e;
}

template <int N>
std::pair<double, double> default_entropy_window() {
  return N == 2 ? std::make_pair(4.0, 8.0) : std::make_pair(3.0, 6.0);
}

}  // namespace hilbertlab
