#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

#include "hilbertlab/errors.hpp"

namespace hilbertlab::num {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule by Newton iteration on P_n; results are cached per n.
inline const GaussRule& gauss_legendre(int n) {
  static thread_local std::map<int, GaussRule> cache;
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return cache.emplace(n, std::move(rule)).first->second;
}

inline double gauss(const std::function<double(double)>& f, double a, double b, int n) {
  const auto& r = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
  return s * half;
}

/// Adaptive bisection with a 32-point rule; stops at relative tolerance rtol.
inline double adaptive_gauss(const std::function<double(double)>& f, double a, double b,
                             double rtol, int max_depth = 30) {
  std::function<double(double, double, double, int)> rec = [&](double lo, double hi,
                                                                double whole, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double left = gauss(f, lo, mid, 32), right = gauss(f, mid, hi, 32);
    const double both = left + right;
    if (std::abs(both - whole) <= rtol * std::abs(both) || depth >= max_depth) return both;
    return rec(lo, mid, left, depth + 1) + rec(mid, hi, right, depth + 1);
  };
  return rec(a, b, gauss(f, a, b, 32), 0);
}

/// Neumaier-compensated sum of values sorted by (|v|, v); independent of input order.
inline double ordered_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end(), [](double a, double b) {
    const double aa = std::abs(a), ab = std::abs(b);
    return aa < ab || (aa == ab && a < b);
  });
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

/// Golden-section minimization on [a, b].
inline std::pair<double, double> golden_min(const std::function<double(double)>& f, double a,
                                            double b, double xtol = 1e-12, int budget = 300) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < budget && (b - a) > xtol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

/// Grid scan followed by golden section around the best grid cell.
inline std::pair<double, double> grid_golden_min(const std::function<double(double)>& f,
                                                 double a, double b, int grid,
                                                 double xtol = 1e-12) {
  int best = 0;
  double fbest = f(a);
  for (int i = 1; i <= grid; ++i) {
    const double v = f(a + (b - a) * i / grid);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  const double lo = a + (b - a) * std::max(0, best - 1) / grid;
  const double hi = a + (b - a) * std::min(grid, best + 1) / grid;
  auto res = golden_min(f, lo, hi, xtol);
  if (fbest <= res.second) return {a + (b - a) * best / grid, fbest};
  return res;
}

/// Brent's method for a local maximum of f on [a, b].
inline std::pair<double, double> brent_max(const std::function<double(double)>& f, double a,
                                           double b, double xtol = 1e-13, int budget = 100) {
  const double cg = 0.3819660112501051;
  double x = a + cg * (b - a), w = x, v = x;
  double fx = -f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < budget; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = xtol * std::abs(x) + 1e-300, tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m >= x) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= m) ? a - x : b - x;
      d = cg * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = -f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, -fx};
}

/// Fibonacci lattice on S^2 with count points.
inline std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
  std::vector<Eigen::Vector3d> pts(count);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    pts[i] = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

/// Symmetric positive-definite square root and inverse square root.
template <typename M>
std::pair<M, M> spd_sqrt(const M& a) {
  Eigen::SelfAdjointEigenSolver<M> es(a);
  auto ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) fail(ErrorKind::DegenerateConfiguration, "matrix not positive definite");
  auto s = ev.array().sqrt().matrix();
  M root = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
  M inv = es.eigenvectors() * s.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return {root, inv};
}

/// Runs body(i) for i in [0, count) across threads; each index writes its own slot.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hilbertlab::num
