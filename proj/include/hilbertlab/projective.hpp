#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <type_traits>

#include "hilbertlab/errors.hpp"

namespace hilbertlab {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;
/// Same type as Vec<N>, but leaves N to be deduced from the other arguments.
template <int N>
using Pt = std::type_identity_t<Vec<N>>;

/// A point of RP^N, stored in canonical homogeneous form.
template <int N>
class ProjectivePoint {
 public:
  using Coords = Vec<N + 1>;

  explicit ProjectivePoint(const Coords& coords) : coords_(canonical(coords)) {}

  /// Embeds an affine point of the standard chart.
  static ProjectivePoint from_affine(const Vec<N>& x) {
    Coords c;
    c.template head<N>() = x;
    c(N) = 1.0;
    return ProjectivePoint(c);
  }

  const Coords& coords() const noexcept { return coords_; }
  bool at_infinity() const noexcept { return coords_(N) != 1.0; }

  /// Last coordinate 1 when the point is in the standard chart, otherwise
  /// unit norm with first nonzero coordinate positive. Canonical input is
  /// returned untouched, so canonical(canonical(x)) == canonical(x) bitwise.
  static Coords canonical(const Coords& c) {
    if (!c.allFinite()) fail(ErrorKind::InvalidInput, "non-finite homogeneous coordinates");
    const double norm = c.norm();
    if (norm == 0.0) fail(ErrorKind::InvalidInput, "zero homogeneous vector");
    if (c(N) == 1.0) return c;
    if (std::abs(c(N)) > 1e-12 * norm) {
      Coords out = c / c(N);
      out(N) = 1.0;
      return out;
    }
    if (is_unit_form(c)) return c;
    Coords out = c / norm;
    out(N) = 0.0;
    for (int i = 0; i < N; ++i) {
      if (out(i) != 0.0) {
        if (out(i) < 0.0) out = -out;
        break;
      }
    }
    out(N) = 0.0;
    return out;
  }

  bool operator==(const ProjectivePoint& o) const { return coords_ == o.coords_; }

 private:
  static bool is_unit_form(const Coords& c) {
    if (c(N) != 0.0 || std::abs(c.squaredNorm() - 1.0) > 1e-14) return false;
    for (int i = 0; i < N; ++i)
      if (c(i) != 0.0) return c(i) > 0.0;
    return false;
  }

  Coords coords_;
};

/// Element of PGL(N+1), stored with |det| = 1.
template <int N>
class ProjectiveTransform {
 public:
  using Matrix = Mat<N + 1>;

  ProjectiveTransform() : m_(Matrix::Identity()) {}

  explicit ProjectiveTransform(const Matrix& m) : m_(normalize(m)) {}

  static ProjectiveTransform identity() { return ProjectiveTransform(); }

  const Matrix& matrix() const noexcept { return m_; }

  ProjectiveTransform inverse() const { return ProjectiveTransform(m_.inverse()); }

  ProjectiveTransform operator*(const ProjectiveTransform& o) const {
    return ProjectiveTransform(m_ * o.m_);
  }

  ProjectivePoint<N> apply(const ProjectivePoint<N>& x) const {
    return ProjectivePoint<N>(m_ * x.coords());
  }

  /// Affine action in the standard chart; the image must stay finite.
  Vec<N> apply_affine(const Vec<N>& x) const {
    Vec<N + 1> h = m_.template leftCols<N>() * x + m_.col(N);
    const double scale = h.norm();
    if (std::abs(h(N)) <= 1e-12 * scale)
      fail(ErrorKind::PointAtInfinity, "image lies on the hyperplane at infinity");
    return h.template head<N>() / h(N);
  }

 private:
  static Matrix normalize(const Matrix& m) {
    if (!m.allFinite()) fail(ErrorKind::InvalidInput, "non-finite transform");
    const double maxabs = m.cwiseAbs().maxCoeff();
    if (maxabs == 0.0) fail(ErrorKind::SingularTransform, "zero matrix");
    Matrix s = m / maxabs;
    const double det = s.determinant();
    if (std::abs(det) < 1e-12) fail(ErrorKind::SingularTransform, "determinant below 1e-12");
    return s / std::pow(std::abs(det), 1.0 / (N + 1));
  }

  Matrix m_;
};

template <int N>
ProjectivePoint<N> apply(const ProjectiveTransform<N>& g, const ProjectivePoint<N>& x) {
  return g.apply(x);
}

/// Affine chart given by the covector of its hyperplane at infinity.
template <int N>
class AffineChart {
 public:
  using Covector = Vec<N + 1>;

  AffineChart() : AffineChart(standard_covector()) {}

  explicit AffineChart(const Covector& h) : h_(h) {
    if (!h.allFinite() || h.norm() == 0.0) fail(ErrorKind::InvalidInput, "zero chart covector");
    // Rows 0..N-1 span the annihilator complement; the last row is h itself.
    basis_.setZero();
    if (h.template head<N>().isZero(0.0)) {
      basis_.setIdentity();
      basis_.row(N) = h.transpose();
    } else {
      Eigen::HouseholderQR<Vec<N + 1>> qr(h);
      Mat<N + 1> q = qr.householderQ();
      for (int i = 0; i < N; ++i) basis_.row(i) = q.col(i + 1).transpose();
      basis_.row(N) = h.transpose();
    }
    inverse_ = basis_.inverse();
  }

  static Covector standard_covector() {
    Covector h = Covector::Zero();
    h(N) = 1.0;
    return h;
  }

  const Covector& hyperplane() const noexcept { return h_; }

  Vec<N> to_chart(const ProjectivePoint<N>& x) const {
    const auto& c = x.coords();
    const double pairing = h_.dot(c);
    if (std::abs(pairing) <= 1e-12 * h_.norm() * c.norm())
      fail(ErrorKind::PointAtInfinity, "point lies on the chart's hyperplane at infinity");
    Vec<N + 1> y = basis_ * c;
    return y.template head<N>() / pairing;
  }

  ProjectivePoint<N> from_chart(const Vec<N>& y) const {
    Vec<N + 1> z;
    z.template head<N>() = y;
    z(N) = 1.0;
    return ProjectivePoint<N>(inverse_ * z);
  }

 private:
  Covector h_;
  Mat<N + 1> basis_;
  Mat<N + 1> inverse_;
};

template <int N>
Vec<N> to_chart(const ProjectivePoint<N>& x, const AffineChart<N>& chart = AffineChart<N>()) {
  return chart.to_chart(x);
}

/// Cross-ratio [a:x:y:b] of four collinear points, computed without a chart.
template <int N>
double cross_ratio(const ProjectivePoint<N>& a, const ProjectivePoint<N>& x,
                   const ProjectivePoint<N>& y, const ProjectivePoint<N>& b) {
  using H = Vec<N + 1>;
  const H va = a.coords().normalized();
  const H vx = x.coords().normalized();
  const H vy = y.coords().normalized();
  const H vb = b.coords().normalized();

  // Orthonormal frame of the plane through a and x (or a and b if x = a).
  const H e1 = va;
  H e2 = vx - vx.dot(e1) * e1;
  if (e2.norm() <= 1e-12) {
    e2 = vb - vb.dot(e1) * e1;
    if (e2.norm() <= 1e-12) fail(ErrorKind::DegenerateConfiguration, "a coincides with x and b");
  }
  e2.normalize();
  for (const H* v : {&vx, &vy, &vb}) {
    const H r = *v - v->dot(e1) * e1 - v->dot(e2) * e2;
    if (r.norm() > 1e-9) fail(ErrorKind::NonCollinear, "points do not lie on one projective line");
  }
  auto plane = [&](const H& v) { return Eigen::Vector2d(v.dot(e1), v.dot(e2)); };
  auto det = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return u(0) * v(1) - u(1) * v(0);
  };
  const Eigen::Vector2d pa = plane(va), px = plane(vx), py = plane(vy), pb = plane(vb);
  constexpr double eps = 1e-12;
  if (std::abs(det(px, py)) <= eps) {
    if (std::abs(det(px, pa)) <= eps || std::abs(det(py, pb)) <= eps)
      fail(ErrorKind::DegenerateConfiguration, "a = x or b = y");
    return 1.0;
  }
  const double ya = det(py, pa), xb = det(px, pb), yb = det(py, pb), xa = det(px, pa);
  if (std::abs(yb) <= eps || std::abs(xa) <= eps)
    fail(ErrorKind::DegenerateConfiguration, "vanishing cross-ratio denominator");
  if (std::abs(ya) <= eps || std::abs(xb) <= eps)
    fail(ErrorKind::DegenerateConfiguration, "vanishing cross-ratio numerator");
  return std::abs(ya * xb) / std::abs(yb * xa);
}

struct HomothetyVerdict {
  bool homothety = false;
  double lambda = 0.0;
  double residual = 0.0;  // max |J^T J - lambda^2 I| / lambda^2
};

/// J is a homothety when J^T J is within tol * lambda^2 of lambda^2 I,
/// lambda = |det J|^(1/n).
template <typename Derived>
HomothetyVerdict is_projective_homothety(const Eigen::MatrixBase<Derived>& J, double tol) {
  HomothetyVerdict out;
  const auto n = J.rows();
  if (J.cols() != n || !J.allFinite()) return out;
  const double det = std::abs(J.determinant());
  if (!(det > 0.0)) return out;
  out.lambda = std::pow(det, 1.0 / static_cast<double>(n));
  const double l2 = out.lambda * out.lambda;
  auto jtj = (J.transpose() * J).eval();
  jtj.diagonal().array() -= l2;
  out.residual = jtj.cwiseAbs().maxCoeff() / l2;
  out.homothety = out.residual <= tol;
  return out;
}

}  // namespace hilbertlab
