#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hilbertlab/errors.hpp"
#include "hilbertlab/numerics.hpp"
#include "hilbertlab/projective.hpp"

namespace hilbertlab {

/// Strictly convex bounded domain {f < 0} in the standard chart, star-shaped
/// about the origin.
template <int N>
class ConvexDomain {
 public:
  static constexpr int dim = N;
  using Point = Vec<N>;

  virtual ~ConvexDomain() = default;

  virtual double level(const Point& x) const = 0;
  virtual Point gradient(const Point& x) const = 0;

  /// f(base + delta) - f(base); overridden where a cancellation-free form exists.
  virtual double level_increment(const Point& base, const Point& delta) const {
    return level(base + delta) - level(base);
  }

  /// Radius of a Euclidean ball about the origin strictly containing the closure.
  virtual double bounding_radius() const = 0;

  /// Closed-form Busemann-Hausdorff density when one is known.
  virtual std::optional<double> exact_volume_density(const Point&) const { return std::nullopt; }

  /// Minimum sampled boundary curvature, for domains that can report it.
  virtual std::optional<double> min_boundary_curvature(int) const { return std::nullopt; }

  /// Spec string in the CLI mini-language.
  virtual std::string describe() const = 0;

  bool contains(const Point& x) const { return level(x) < 0.0; }

  /// Largest t with f(p + t v) = 0, for f(p) <= 0 and v != 0.
  virtual double exit_distance(const Point& p, const Point& v) const {
    const double vv = v.squaredNorm();
    const double pv = p.dot(v);
    const double r = bounding_radius() * (1.0 + 1e-9) + 1e-300;
    double hi = (-pv + std::sqrt(std::max(0.0, pv * pv + vv * (r * r - p.squaredNorm())))) / vv;
    auto g = [&](double t) { return level(p + t * v); };
    double fhi = g(hi);
    for (int k = 0; fhi <= 0.0; ++k) {
      if (k > 200) throw NoConvergence("convex_domain", "ray_boundary", 200);
      hi = 2.0 * hi + 1e-300;
      fhi = g(hi);
    }
    return newton_from_right(g, [&](double t) { return gradient(p + t * v).dot(v); }, 0.0, hi,
                             fhi, std::abs(pv) / vv + std::sqrt(p.squaredNorm() / vv));
  }

 protected:
  /// Newton from a point right of the root of a convex increasing-through-zero
  /// function; monotone for convex g, bisection fallback otherwise.
  template <typename G, typename D>
  static double newton_from_right(G&& g, D&& dg, double lo, double hi, double fhi, double scale) {
    double t = hi, ft = fhi;
    for (int it = 0; it < 200; ++it) {
      const double slope = dg(t);
      double next = (slope > 0.0) ? t - ft / slope : 0.5 * (lo + t);
      if (!(next > lo) || !(next < t)) next = 0.5 * (lo + t);
      const double fn = g(next);
      if (fn > 0.0) {
        const double step = t - next;
        t = next;
        ft = fn;
        if (step <= 1e-15 * (t + scale)) return t;
      } else {
        // Crossed or hit the root: the root lies in [next, t].
        lo = next;
        if (fn == 0.0 || t - next <= 1e-15 * (t + scale)) return next;
      }
      if (t - lo <= 1e-300) return t;
    }
    throw NoConvergence("convex_domain", "ray_boundary", 200);
  }
};

/// (x - c)^T Q (x - c) < 1.
template <int N>
class Ellipsoid : public ConvexDomain<N> {
 public:
  using Point = Vec<N>;

  Ellipsoid(const Mat<N>& Q, const Point& c) : Q_(Q), c_(c) {
    if (!Q.allFinite() || !c.allFinite()) fail(ErrorKind::InvalidInput, "non-finite ellipsoid");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * Q.cwiseAbs().maxCoeff())
      fail(ErrorKind::InvalidInput, "ellipsoid matrix not symmetric");
    Q_ = 0.5 * (Q + Q.transpose());
    Eigen::LLT<Mat<N>> llt(Q_);
    Eigen::SelfAdjointEigenSolver<Mat<N>> es(Q_);
    if (llt.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
      fail(ErrorKind::InvalidInput, "ellipsoid matrix not positive definite");
    R_ = llt.matrixU();
    Rinv_ = R_.inverse();
    sqrt_det_ = R_.diagonal().prod();
    radius_ = c_.norm() + 1.0 / std::sqrt(es.eigenvalues().minCoeff());
  }

  /// Axis-aligned, centered at the origin.
  static Ellipsoid axes(const Point& semi_axes) {
    if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite())
      fail(ErrorKind::InvalidInput, "semi-axes must be positive");
    Ellipsoid e(semi_axes.array().square().inverse().matrix().asDiagonal(), Point::Zero());
    e.axes_ = semi_axes;
    return e;
  }

  static Ellipsoid unit_ball() { return Ellipsoid(Mat<N>::Identity(), Point::Zero()); }

  const Mat<N>& Q() const noexcept { return Q_; }
  const Point& center() const noexcept { return c_; }

  /// Maps the ellipsoid onto the unit ball: y = R (x - c), Q = R^T R.
  Point to_ball(const Point& x) const { return R_ * (x - c_); }
  Point from_ball(const Point& y) const { return c_ + Rinv_ * y; }
  const Mat<N>& ball_map() const noexcept { return R_; }

  double level(const Point& x) const override {
    const Point d = x - c_;
    return d.dot(Q_ * d) - 1.0;
  }
  Point gradient(const Point& x) const override { return 2.0 * Q_ * (x - c_); }
  double level_increment(const Point& base, const Point& delta) const override {
    return 2.0 * delta.dot(Q_ * (base - c_)) + delta.dot(Q_ * delta);
  }
  double bounding_radius() const override { return radius_; }

  double exit_distance(const Point& p, const Point& v) const override {
    const Point d = p - c_;
    const Point qv = Q_ * v;
    const double a = v.dot(qv), b = d.dot(qv), c0 = d.dot(Q_ * d) - 1.0;
    const double disc = std::sqrt(std::max(0.0, b * b - a * c0));
    if (b <= 0.0) return (disc - b) / a;
    return -c0 / (b + disc);
  }

  std::optional<double> exact_volume_density(const Point& x) const override {
    const double m = -level(x);
    if (!(m > 0.0)) fail(ErrorKind::PointOutside, "point outside ellipsoid");
    return sqrt_det_ * std::pow(m, -0.5 * (N + 1));
  }

  std::optional<double> min_boundary_curvature(int) const override {
    Eigen::SelfAdjointEigenSolver<Mat<N>> es(Q_);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    return lmin / std::sqrt(lmax);
  }

  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    const bool unit = c_.isZero(0.0) && Q_.isIdentity(0.0);
    if (axes_ || unit) {
      os << "ellipse";
      const Point a = axes_ ? *axes_ : Point(Point::Ones());
      if (!(a.array() == 1.0).all()) {
        os << ':';
        for (int i = 0; i < N; ++i) os << (i ? "," : "") << a(i);
      }
      return os.str();
    }
    os << "ellipsoid(Q=[";
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) os << ((i || j) ? "," : "") << Q_(i, j);
    os << "],c=[";
    for (int i = 0; i < N; ++i) os << (i ? "," : "") << c_(i);
    os << "])";
    return os.str();
  }

 private:
  Mat<N> Q_;
  Point c_;
  Mat<N> R_, Rinv_;
  double sqrt_det_ = 1.0;
  double radius_ = 1.0;
  std::optional<Point> axes_;
};

/// sum |x_i / a_i|^p < 1, p >= 2.
template <int N>
class PBall : public ConvexDomain<N> {
 public:
  using Point = Vec<N>;

  explicit PBall(double p, Point semi_axes = Point::Ones()) : p_(p), a_(semi_axes) {
    if (!std::isfinite(p) || p < 2.0) fail(ErrorKind::InvalidInput, "pball exponent must be finite and >= 2");
    if (!(a_.minCoeff() > 0.0) || !a_.allFinite()) fail(ErrorKind::InvalidInput, "pball semi-axes must be positive");
    radius_ = a_.norm();
  }

  double exponent() const noexcept { return p_; }
  const Point& semi_axes() const noexcept { return a_; }

  double level(const Point& x) const override {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += std::pow(std::abs(x(i) / a_(i)), p_);
    return s - 1.0;
  }

  Point gradient(const Point& x) const override {
    Point g;
    for (int i = 0; i < N; ++i) {
      const double u = x(i) / a_(i);
      g(i) = p_ * std::copysign(std::pow(std::abs(u), p_ - 1.0), u) / a_(i);
    }
    return g;
  }

  double level_increment(const Point& base, const Point& delta) const override {
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double b = base(i) / a_(i), d = delta(i) / a_(i);
      if (b != 0.0 && std::abs(d) < 0.5 * std::abs(b))
        s += std::pow(std::abs(b), p_) * std::expm1(p_ * std::log1p(d / b));
      else
        s += std::pow(std::abs(b + d), p_) - std::pow(std::abs(b), p_);
    }
    return s;
  }

  double bounding_radius() const override { return radius_; }

  /// Newton on the gauge g = (1 + f)^(1/p), which is convex and 1-homogeneous.
  double exit_distance(const Point& p, const Point& v) const override {
    const double gv = gauge(v), gm = gauge(-p);
    const double scale = p.norm() / v.norm();
    double lo = 0.0, t = (1.0 + gm) / gv * (1.0 + 1e-12);
    double gt = 0.0, slope = 0.0;
    auto eval = [&](double tt) {
      double s = 0.0, ds = 0.0;
      for (int i = 0; i < N; ++i) {
        const double u = (p(i) + tt * v(i)) / a_(i);
        const double au = std::abs(u);
        if (au == 0.0) continue;
        const double pw = std::pow(au, p_ - 1.0);
        s += pw * au;
        ds += std::copysign(pw, u) * v(i) / a_(i);
      }
      const double g = std::pow(s, 1.0 / p_);
      gt = g - 1.0;
      slope = s > 0.0 ? ds * g / s : gv;
    };
    eval(t);
    for (int k = 0; gt <= 0.0; ++k) {
      if (k > 200) throw NoConvergence("convex_domain", "ray_boundary", 200);
      lo = t;
      t *= 2.0;
      eval(t);
    }
    for (int it = 0; it < 200; ++it) {
      double next = slope > 0.0 ? t - gt / slope : 0.5 * (lo + t);
      if (!(next > lo) || !(next < t)) next = 0.5 * (lo + t);
      const double prev_t = t, prev_g = gt, prev_slope = slope;
      eval(next);
      if (gt > 0.0) {
        t = next;
        if (prev_t - next <= 1e-15 * (next + scale)) return next;
      } else {
        lo = next;
        if (gt == 0.0 || prev_t - next <= 1e-15 * (prev_t + scale)) return next;
        t = prev_t;
        gt = prev_g;
        slope = prev_slope;
      }
    }
    throw NoConvergence("convex_domain", "ray_boundary", 200);
  }

  std::optional<double> exact_volume_density(const Point& x) const override {
    if (p_ != 2.0) return std::nullopt;
    const double m = -level(x);
    if (!(m > 0.0)) fail(ErrorKind::PointOutside, "point outside domain");
    return std::pow(m, -0.5 * (N + 1)) / a_.prod();
  }

  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "pball:" << p_;
    if (!(a_.array() == 1.0).all()) {
      os << ':';
      for (int i = 0; i < N; ++i) os << (i ? "," : "") << a_(i);
    }
    return os.str();
  }

 private:
  double gauge(const Point& x) const {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += std::pow(std::abs(x(i) / a_(i)), p_);
    return std::pow(s, 1.0 / p_);
  }

  double p_;
  Point a_;
  double radius_;
};

/// Star domain of radial profile r(theta) = 1 + sum eps_k cos(k theta + phi_k).
class PerturbedEllipse : public ConvexDomain<2> {
 public:
  using Point = Vec<2>;
  struct Mode {
    int k;
    double eps;
    double phi;
  };

  explicit PerturbedEllipse(std::vector<Mode> modes) : modes_(std::move(modes)) {
    double total = 0.0;
    for (const auto& m : modes_) {
      if (m.k < 1 || !std::isfinite(m.eps) || !std::isfinite(m.phi))
        fail(ErrorKind::InvalidInput, "bad perturbation mode");
      total += std::abs(m.eps);
    }
    if (total >= 1.0) fail(ErrorKind::InvalidInput, "radial profile must stay positive");
    radius_ = 1.0 + total;
  }

  const std::vector<Mode>& modes() const noexcept { return modes_; }

  double r(double theta) const {
    double s = 1.0;
    for (const auto& m : modes_) s += m.eps * std::cos(m.k * theta + m.phi);
    return s;
  }
  double dr(double theta) const {
    double s = 0.0;
    for (const auto& m : modes_) s -= m.eps * m.k * std::sin(m.k * theta + m.phi);
    return s;
  }
  double ddr(double theta) const {
    double s = 0.0;
    for (const auto& m : modes_) s -= m.eps * m.k * m.k * std::cos(m.k * theta + m.phi);
    return s;
  }

  /// Signed curvature of the boundary curve at angle theta.
  double curvature(double theta) const {
    const double a = r(theta), b = dr(theta), c = ddr(theta);
    return (a * a + 2.0 * b * b - a * c) / std::pow(a * a + b * b, 1.5);
  }

  double level(const Point& x) const override {
    const double rho = x.norm();
    if (rho == 0.0) return -1.0;
    return rho / r(std::atan2(x(1), x(0))) - 1.0;
  }

  Point gradient(const Point& x) const override {
    const double rho = x.norm();
    if (rho == 0.0) return Point::Zero();
    const double th = std::atan2(x(1), x(0));
    const double rr = r(th), rp = dr(th);
    const Point er = x / rho, et(-er(1), er(0));
    return er / rr - (rp / (rr * rr)) * et;
  }

  double level_increment(const Point& b, const Point& d) const override {
    const Point y = b + d;
    const double nb = b.norm(), ny = y.norm();
    if (nb == 0.0 || ny == 0.0) return level(y) - level(b);
    const double tb = std::atan2(b(1), b(0));
    const double dth = std::atan2(b(0) * d(1) - b(1) * d(0), b.squaredNorm() + b.dot(d));
    const double ty = tb + dth;
    double dr_ = 0.0;
    for (const auto& m : modes_)
      dr_ -= 2.0 * m.eps * std::sin(m.k * (tb + 0.5 * dth) + m.phi) * std::sin(0.5 * m.k * dth);
    const double rb = r(tb), ry = r(ty);
    const double dn = (2.0 * b.dot(d) + d.squaredNorm()) / (ny + nb);
    return (dn * rb - nb * dr_) / (ry * rb);
  }

  double bounding_radius() const override { return radius_; }

  std::optional<double> exact_volume_density(const Point& x) const override {
    if (!modes_.empty()) return std::nullopt;
    const double m = 1.0 - x.squaredNorm();
    if (!(m > 0.0)) fail(ErrorKind::PointOutside, "point outside domain");
    return std::pow(m, -1.5);
  }

  std::optional<double> min_boundary_curvature(int samples) const override {
    double m = INFINITY;
    for (int i = 0; i < samples; ++i) m = std::min(m, curvature(2.0 * std::numbers::pi * i / samples));
    return m;
  }

  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "perturbed:";
    for (std::size_t i = 0; i < modes_.size(); ++i)
      os << (i ? ";" : "") << modes_[i].eps << ',' << modes_[i].phi;
    return os.str();
  }

 private:
  std::vector<Mode> modes_;
  double radius_;
};

/// Unit vector for direction index i of count (equal angles in 2D, Fibonacci in 3D).
template <int N>
Vec<N> direction(int i, int count) {
  Vec<N> u;
  if constexpr (N == 2) {
    const double a = 2.0 * std::numbers::pi * i / count;
    u << std::cos(a), std::sin(a);
  } else {
    static_assert(N == 3, "only dimensions 2 and 3 are supported");
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    u << r * std::cos(golden_angle * i), r * std::sin(golden_angle * i), z;
  }
  return u;
}

template <int N>
Vec<N> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (;;) {
    Vec<N> u;
    for (int i = 0; i < N; ++i) u(i) = nd(rng);
    const double n = u.norm();
    if (n > 1e-8) return u / n;
  }
}

/// Image g(Omega) of a domain under a projective transform whose image stays
/// bounded in the standard chart. Exits are pulled back to the base domain.
template <int N>
class TransformedDomain : public ConvexDomain<N> {
 public:
  using Point = Vec<N>;

  TransformedDomain(std::shared_ptr<const ConvexDomain<N>> base, const ProjectiveTransform<N>& g)
      : base_(std::move(base)), g_(g), ginv_(g.inverse()) {
    radius_ = 0.0;
    const int m = 720;
    for (int i = 0; i < m; ++i) {
      const Point u = direction<N>(i, m);
      const Point q = u * base_->exit_distance(Point::Zero(), u);
      radius_ = std::max(radius_, g_.apply_affine(q).norm());
    }
    radius_ *= 1.5;
  }

  const ProjectiveTransform<N>& transform() const noexcept { return g_; }
  Point pull(const Point& y) const { return ginv_.apply_affine(y); }
  Point push(const Point& x) const { return g_.apply_affine(x); }

  double level(const Point& y) const override { return base_->level(pull(y)); }

  Point gradient(const Point& y) const override {
    const auto& A = ginv_.matrix();
    const Vec<N + 1> X = A.template leftCols<N>() * y + A.col(N);
    const Point x = X.template head<N>() / X(N);
    const Mat<N> J = (A.template topLeftCorner<N, N>() - x * A.template bottomLeftCorner<1, N>()) / X(N);
    return J.transpose() * base_->gradient(x);
  }

  double bounding_radius() const override { return radius_; }

  double exit_distance(const Point& y, const Point& v) const override {
    const auto& A = ginv_.matrix();
    const Vec<N + 1> X0 = A.template leftCols<N>() * y + A.col(N);
    const Vec<N + 1> V = A.template leftCols<N>() * v;
    const Point x0 = X0.template head<N>() / X0(N);
    const Point w = (V.template head<N>() * X0(N) - X0.template head<N>() * V(N)) / (X0(N) * X0(N));
    // x(t) = x0 + s(t) w with s = t X0n / (X0n + t Vn).
    const double s = base_->exit_distance(x0, w);
    const double denom = X0(N) - s * V(N);
    if (!(denom * X0(N) > 0.0)) fail(ErrorKind::PointAtInfinity, "transformed domain meets infinity");
    return s * X0(N) / denom;
  }

  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "transformed(" << base_->describe() << ",[";
    const auto& M = g_.matrix();
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j) os << ((i || j) ? "," : "") << M(i, j);
    os << "])";
    return os.str();
  }

 private:
  std::shared_ptr<const ConvexDomain<N>> base_;
  ProjectiveTransform<N> g_, ginv_;
  double radius_;
};

/// Boundary point hit by the ray from the origin in direction u.
template <int N>
Vec<N> radial_boundary_point(const ConvexDomain<N>& omega, const Pt<N>& u) {
  const Vec<N> e = u.normalized();
  return omega.exit_distance(Vec<N>::Zero(), e) * e;
}

/// Random interior point at a fraction in [0, max_fraction] of the radial exit.
template <int N>
Vec<N> sample_interior(const ConvexDomain<N>& omega, std::mt19937_64& rng, double max_fraction) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const Vec<N> u = random_unit<N>(rng);
  const double frac = max_fraction * std::pow(ud(rng), 1.0 / N);
  return frac * radial_boundary_point(omega, u);
}

struct AuditReport {
  int samples = 0;
  double min_margin = 0.0;
  double min_gradient = 0.0;
  std::optional<double> min_curvature;
  bool pass = false;
  std::string failure;                   // empty when pass
  std::vector<std::vector<double>> offending;  // chord endpoints or boundary point
};

class AuditFailed : public Error {
 public:
  explicit AuditFailed(AuditReport report)
      : Error(ErrorKind::AuditFailed, report.failure), report_(std::move(report)) {}
  const AuditReport& report() const noexcept { return report_; }

 private:
  AuditReport report_;
};

/// Numerical witness of strict convexity and C^1 boundary: boundary chords have
/// midpoints strictly inside, boundary gradients are nonzero. Throws AuditFailed.
template <int N>
AuditReport convexity_audit(const ConvexDomain<N>& omega, int samples, std::uint64_t seed) {
  if (samples < 100) fail(ErrorKind::InvalidInput, "convexity audit needs at least 100 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  AuditReport rep;
  rep.samples = samples;
  rep.min_margin = INFINITY;
  rep.min_gradient = INFINITY;
  auto as_vec = [](const Pt<N>& x) { return std::vector<double>(x.data(), x.data() + N); };
  std::vector<std::vector<double>> worst_chord, worst_grad;
  for (int i = 0; i < samples; ++i) {
    const Vec<N> u = random_unit<N>(rng);
    Vec<N> w;
    if (i % 2 == 0) {
      w = random_unit<N>(rng);
    } else {
      // Short chords probe local convexity.
      const double angle = 0.005 + 0.3 * ud(rng);
      Vec<N> t = random_unit<N>(rng);
      t -= t.dot(u) * u;
      if (t.norm() < 1e-8) t = Vec<N>::Unit(0) - u(0) * u;
      t.normalize();
      w = std::cos(angle) * u + std::sin(angle) * t;
    }
    if ((u - w).norm() < 1e-6) continue;
    const Vec<N> a = radial_boundary_point(omega, u), b = radial_boundary_point(omega, w);
    const Vec<N> mid = 0.5 * (a + b);
    const double margin = -omega.level(mid);
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      worst_chord = {as_vec(a), as_vec(b)};
    }
    const double gn = omega.gradient(a).norm();
    if (gn < rep.min_gradient) {
      rep.min_gradient = gn;
      worst_grad = {as_vec(a)};
    }
  }
  rep.min_curvature = omega.min_boundary_curvature(std::max(samples, 1024));
  rep.pass = true;
  if (!(rep.min_margin > 0.0)) {
    rep.pass = false;
    rep.failure = "chord midpoint not strictly inside";
    rep.offending = worst_chord;
  } else if (!(rep.min_gradient > 1e-10)) {
    rep.pass = false;
    rep.failure = "boundary gradient vanishes";
    rep.offending = worst_grad;
  } else if (rep.min_curvature && !(*rep.min_curvature > 0.0)) {
    rep.pass = false;
    rep.failure = "boundary curvature changes sign";
  }
  if (!rep.pass) throw AuditFailed(rep);
  return rep;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidInput, "not a number: '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size() || !std::isfinite(v)) fail(ErrorKind::InvalidInput, "not a number: '" + s + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part));
  return out;
}

}  // namespace detail

/// Parses `ellipse[:a1,...]`, `pball:p[:a1,...]`, `perturbed:eps,phi[;eps,phi...]`.
template <int N>
std::shared_ptr<const ConvexDomain<N>> parse_domain(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto axes = [&](const std::string& s) {
    Vec<N> a = Vec<N>::Ones();
    if (s.empty()) return a;
    const auto vals = detail::parse_list(s);
    if (vals.size() == 1) return Vec<N>(Vec<N>::Constant(vals[0]));
    if (vals.size() != N) fail(ErrorKind::InvalidInput, "expected " + std::to_string(N) + " semi-axes");
    for (int i = 0; i < N; ++i) a(i) = vals[i];
    return a;
  };
  if (kind == "ellipse" || kind == "ellipsoid" || kind == "ball") {
    return std::make_shared<Ellipsoid<N>>(Ellipsoid<N>::axes(axes(rest)));
  }
  if (kind == "pball") {
    if (rest.empty()) fail(ErrorKind::InvalidInput, "pball needs an exponent: pball:p[:a1,...]");
    const auto c2 = rest.find(':');
    const double p = detail::parse_double(rest.substr(0, c2));
    return std::make_shared<PBall<N>>(p, axes(c2 == std::string::npos ? "" : rest.substr(c2 + 1)));
  }
  if (kind == "perturbed") {
    if constexpr (N != 2) {
      fail(ErrorKind::InvalidInput, "perturbed domains are two-dimensional");
    } else {
      std::vector<PerturbedEllipse::Mode> modes;
      int k = 3;
      if (!rest.empty()) {
        for (const auto& part : detail::split(rest, ';')) {
          const auto v = detail::parse_list(part);
          if (v.size() != 2) fail(ErrorKind::InvalidInput, "perturbed mode needs eps,phi");
          modes.push_back({k++, v[0], v[1]});
        }
      }
      return std::make_shared<PerturbedEllipse>(std::move(modes));
    }
  }
  fail(ErrorKind::InvalidInput, "unknown domain '" + spec + "'");
}

}  // namespace hilbertlab
