#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "common.hpp"
#include "hilbertlab/barycenter.hpp"
#include "oracles.hpp"

using namespace hilbertlab;

namespace {

constexpr double kPi = std::numbers::pi;

BoundaryMeasure<2> circle_atoms(const std::vector<double>& angles, const std::vector<double>& w) {
  BoundaryMeasure<2> nu;
  for (std::size_t i = 0; i < angles.size(); ++i)
    nu.atoms.push_back({Vec<2>(std::cos(angles[i]), std::sin(angles[i])), w[i]});
  return nu;
}

/// sum w beta_0(x, xi) in the disk, from the closed form
double klein_objective(const BoundaryMeasure<2>& nu, const Vec<2>& x) {
  if (x.squaredNorm() >= 1.0) return INFINITY;
  double s = 0.0;
  for (const auto& a : nu.atoms) s += a.w * oracle::klein_busemann(Vec<2>(Vec<2>::Zero()), x, a.xi);
  return s;
}

/// Compass search: no derivatives, no Newton.
Vec<2> compass_minimum(const BoundaryMeasure<2>& nu) {
  Vec<2> x = Vec<2>::Zero();
  double fx = klein_objective(nu, x);
  const Vec<2> dirs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0.7071, 0.7071}, {-0.7071, -0.7071},
                         {0.7071, -0.7071}, {-0.7071, 0.7071}};
  for (double step = 0.25; step > 1e-11;) {
    bool moved = false;
    for (const auto& d : dirs) {
      const Vec<2> y = x + step * d;
      const double fy = klein_objective(nu, y);
      if (fy < fx) {
        x = y;
        fx = fy;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return x;
}

}  // namespace

TEST(Barycenter, SymmetricMeasuresGiveTheCenter) {
  const auto disk = Ellipsoid<2>::unit_ball();
  for (int k : {3, 4, 7, 64}) {
    std::vector<double> ang, w(k, 1.0);
    for (int i = 0; i < k; ++i) ang.push_back(0.3 + 2.0 * kPi * i / k);
    BarycenterResult info;
    const Vec<2> b = barycenter(disk, circle_atoms(ang, w), {}, &info);
    EXPECT_LT(b.norm(), 1e-10) << k;
    EXPECT_LE(info.gradient_norm, 1e-9);
  }
  // centrally symmetric measure on an ellipse
  const auto E = Ellipsoid<2>::axes(Vec<2>(2.0, 0.5));
  EXPECT_LT(barycenter(E, uniform_reference(E, 90)).norm(), 1e-10);
  // octahedron in the 3-ball
  BoundaryMeasure<3> oct;
  for (int k = 0; k < 3; ++k)
    for (double s : {-1.0, 1.0}) oct.atoms.push_back({s * Vec<3>::Unit(k), 1.0});
  EXPECT_LT(barycenter(Ellipsoid<3>::unit_ball(), oct).norm(), 1e-10);
}

TEST(Barycenter, MatchesBruteForceMinimizer) {
  const auto nu = circle_atoms({0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0}, {0.4, 0.3, 0.3});
  const Vec<2> b = barycenter(Ellipsoid<2>::unit_ball(), nu);
  const Vec<2> ref = compass_minimum(nu);
  EXPECT_NEAR((b - ref).norm(), 0.0, 1e-7);
  EXPECT_GT(b(0), 0.0);
  EXPECT_NEAR(b(1), 0.0, 1e-12);
  std::mt19937_64 rng(40);
  for (int t = 0; t < 10; ++t) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi), wd(0.5, 1.5);
    std::vector<double> ang, w;
    for (int i = 0; i < 6; ++i) {
      ang.push_back(u(rng));
      w.push_back(wd(rng));
    }
    const auto mu = circle_atoms(ang, w);
    if (mu.max_fraction() >= 0.45) continue;
    EXPECT_NEAR((barycenter(Ellipsoid<2>::unit_ball(), mu) - compass_minimum(mu)).norm(), 0.0, 1e-6);
  }
}

TEST(Barycenter, RotationEquivariance) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi), wd(0.5, 1.5);
  const auto disk = Ellipsoid<2>::unit_ball();
  for (int t = 0; t < 20; ++t) {
    std::vector<double> ang, w;
    for (int i = 0; i < 8; ++i) {
      ang.push_back(u(rng));
      w.push_back(wd(rng));
    }
    const double th = u(rng);
    std::vector<double> rot = ang;
    for (double& a : rot) a += th;
    const Vec<2> b = barycenter(disk, circle_atoms(ang, w));
    const Vec<2> br = barycenter(disk, circle_atoms(rot, w));
    const Vec<2> want = Eigen::Rotation2Dd(th) * b;
    EXPECT_NEAR((br - want).norm(), 0.0, 1e-9);
  }
}

TEST(Barycenter, AffineEquivariance) {
  // Busemann functions are invariant under the affine map disk -> ellipse
  const auto disk = Ellipsoid<2>::unit_ball();
  Mat<2> Q;
  Q << 1.0, 0.3, 0.3, 2.0;
  const Ellipsoid<2> E(Q, Vec<2>(0.2, -0.1));
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi), wd(0.5, 1.5);
  std::vector<double> ang, w;
  for (int i = 0; i < 7; ++i) {
    ang.push_back(u(rng));
    w.push_back(wd(rng));
  }
  auto nu = circle_atoms(ang, w);
  const Vec<2> b = barycenter(disk, nu);
  for (auto& a : nu.atoms) a.xi = E.from_ball(a.xi);
  EXPECT_NEAR((barycenter(E, nu) - E.from_ball(b)).norm(), 0.0, 1e-9);
}

TEST(Barycenter, GradientVanishesAtTheMinimum) {
  const auto nu = circle_atoms({0.1, 1.9, 3.0, 4.4}, {1.0, 0.7, 1.2, 0.9});
  const auto disk = Ellipsoid<2>::unit_ball();
  const Vec<2> b = barycenter(disk, nu);
  EXPECT_LT(barycenter_gradient(disk, nu, b).norm(), 1e-8);
  EXPECT_GT(barycenter_gradient(disk, nu, Vec<2>(0.3, 0.3)).norm(), 1e-3);
}

TEST(Barycenter, RiemannianHessianAlongGeodesics) {
  std::mt19937_64 rng(43);
  const auto nu = circle_atoms({0.4, 2.0, 3.5, 5.0}, {0.3, 0.2, 0.25, 0.25});
  for (int t = 0; t < 30; ++t) {
    const Vec<2> y = oracle::ball_point<2>(rng, 0.8);
    const Vec<2> u = oracle::sphere_point<2>(rng);
    // closed-form derivatives of the objective
    const double m = 1.0 - y.squaredNorm();
    Vec<2> g = y / m;
    Mat<2> H = Mat<2>::Identity() / m + (2.0 / (m * m)) * y * y.transpose();
    for (const auto& a : nu.atoms) {
      const double s = 1.0 - y.dot(a.xi);
      g -= (a.w / s) * a.xi;
      H -= (a.w / (s * s)) * a.xi * a.xi.transpose();
    }
    const Mat<2> Hr = klein_riemannian_hessian<2>(y, g, H);
    // unit-speed geodesic y + rho(s) u with boundary gaps tp, tm
    const double b = y.dot(u), c = y.squaredNorm() - 1.0;
    const double tp = -b + std::sqrt(b * b - c), tm = b + std::sqrt(b * b - c);
    auto rho = [&](double s) { return tp * tm * std::expm1(2.0 * s) / (tp + std::exp(2.0 * s) * tm); };
    auto f = [&](double s) { return klein_objective(nu, Vec<2>(y + rho(s) * u)); };
    const double h = 1e-4;
    const double second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    const Vec<2> v = (2.0 * tp * tm / (tp + tm)) * u;
    EXPECT_NEAR(v.dot(Hr * v), second, 1e-5 * (1.0 + std::abs(second)));
  }
}

TEST(Barycenter, Errors) {
  const auto disk = Ellipsoid<2>::unit_ball();
  EXPECT_EQ(kind_of([&] { barycenter(disk, BoundaryMeasure<2>{}); }), ErrorKind::DegenerateMeasure);
  EXPECT_EQ(kind_of([&] { barycenter(disk, circle_atoms({0.0, 1.0}, {0.0, 0.0})); }), ErrorKind::DegenerateMeasure);
  EXPECT_EQ(kind_of([&] { barycenter(disk, circle_atoms({0.0, 1.0, 2.0}, {1.0, 0.5, 0.5})); }),
            ErrorKind::AtomTooHeavy);
  EXPECT_EQ(kind_of([&] { barycenter(disk, circle_atoms({0.0, 1.0, 2.0}, {1.0, -0.5, 0.5})); }),
            ErrorKind::InvalidInput);
  BoundaryMeasure<2> inside = circle_atoms({0.0, 2.0, 4.0}, {1.0, 1.0, 1.0});
  inside.atoms[0].xi *= 0.5;
  EXPECT_EQ(kind_of([&] { barycenter(disk, inside); }), ErrorKind::InvalidInput);
  // an atom just under half the mass is still admissible
  EXPECT_NO_THROW(barycenter(disk, circle_atoms({0.0, 2.0, 4.0}, {0.99, 0.5, 0.51})));
  BarycenterOptions tight;
  tight.max_iter = 1;
  EXPECT_EQ(kind_of([&] { barycenter(disk, circle_atoms({0.0, 0.5, 4.0}, {0.45, 0.3, 0.25}), tight); }),
            ErrorKind::NoConvergence);
}

TEST(NaturalMap, IdentityOnTheDisk) {
  auto disk = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
  const auto Phi = make_natural_map<2>(disk, disk, 1.0, 256);
  EXPECT_LT(Phi(Vec<2>::Zero()).norm(), 1e-12);
  for (const Vec<2>& a : {Vec<2>(0.3, 0.1), Vec<2>(-0.5, 0.4), Vec<2>(0.0, -0.7)})
    EXPECT_NEAR((Phi(a) - a).norm(), 0.0, 1e-8);
  const auto r = jacobian_at(Phi, Vec<2>(0.2, -0.3));
  EXPECT_NEAR(r.jac, 1.0, 1e-6);
  EXPECT_NEAR((r.J - Mat<2>::Identity()).norm(), 0.0, 1e-6);
  EXPECT_LT(r.agreement, 1e-4);
}

TEST(NaturalMap, DensityFamilyIsCovariant) {
  // d mu_a / d mu_o = exp(-alpha beta_o(a, .)); at a = o nothing changes
  auto disk = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
  BusemannDensityFamily<2> fam;
  fam.omega = disk;
  fam.reference = uniform_reference(*disk, 32);
  fam.alpha = 1.0;
  const auto mu0 = density_measure(fam, Vec<2>::Zero());
  for (std::size_t i = 0; i < mu0.atoms.size(); ++i) EXPECT_DOUBLE_EQ(mu0.atoms[i].w, 1.0 / 32);
  const Vec<2> a(0.4, 0.2);
  const auto mu = density_measure(fam, a);
  for (const auto& atom : mu.atoms)
    EXPECT_NEAR(atom.w, std::exp(-oracle::klein_busemann(Vec<2>(Vec<2>::Zero()), a, atom.xi)) / 32, 1e-9);
  fam.alpha = 0.0;
  EXPECT_EQ(kind_of([&] { density_measure(fam, a); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { uniform_reference(*disk, 2); }), ErrorKind::InvalidInput);
}

TEST(NaturalMap, JacobianErrors) {
  auto disk = std::make_shared<Ellipsoid<2>>(Ellipsoid<2>::unit_ball());
  const auto Phi = make_natural_map<2>(disk, disk, 1.0, 64);
  EXPECT_EQ(kind_of([&] { jacobian_at(Phi, Vec<2>::Zero(), 0.0); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { jacobian_at(Phi, Vec<2>(1.0 - 1e-5, 0.0)); }), ErrorKind::PointOutside);
}
