#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "common.hpp"
#include "hilbertlab/hilbert_metric.hpp"
#include "oracles.hpp"

using namespace hilbertlab;

namespace {

const Ellipsoid<2> kDisk = Ellipsoid<2>::unit_ball();
const Ellipsoid<3> kBall = Ellipsoid<3>::unit_ball();

template <int N>
std::vector<std::shared_ptr<const ConvexDomain<N>>> domains() {
  std::vector<std::shared_ptr<const ConvexDomain<N>>> out;
  out.push_back(parse_domain<N>("ellipse"));
  out.push_back(parse_domain<N>(N == 2 ? "ellipse:2,0.7" : "ellipse:2,0.7,1.2"));
  out.push_back(parse_domain<N>("pball:4"));
  out.push_back(parse_domain<N>("pball:3"));
  if constexpr (N == 2) out.push_back(parse_domain<2>("perturbed:0.05,0.2"));
  return out;
}

}  // namespace

TEST(KleinOracle, Distance) {
  std::mt19937_64 rng(20);
  for (int i = 0; i < 500; ++i) {
    const Vec<2> x = oracle::ball_point<2>(rng, 0.99), y = oracle::ball_point<2>(rng, 0.99);
    const double want = oracle::klein_distance(x, y);
    EXPECT_NEAR(hilbert_distance(kDisk, x, y), want, 1e-10 * (1.0 + want));
  }
  for (int i = 0; i < 300; ++i) {
    const Vec<3> x = oracle::ball_point<3>(rng, 0.99), y = oracle::ball_point<3>(rng, 0.99);
    const double want = oracle::klein_distance(x, y);
    EXPECT_NEAR(hilbert_distance(kBall, x, y), want, 1e-10 * (1.0 + want));
  }
}

TEST(KleinOracle, FinslerNormIsRiemannian) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const Vec<2> x = oracle::ball_point<2>(rng, 0.99);
    const Vec<2> v = oracle::ball_point<2>(rng, 3.0);
    EXPECT_NEAR(finsler_norm(kDisk, x, v), oracle::klein_norm(x, v), 1e-10 * oracle::klein_norm(x, v));
  }
}

TEST(KleinOracle, Busemann) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const Vec<2> p = oracle::ball_point<2>(rng, 0.8), x = oracle::ball_point<2>(rng, 0.8);
    const Vec<2> xi = oracle::sphere_point<2>(rng);
    EXPECT_NEAR(busemann(kDisk, p, x, xi), oracle::klein_busemann(p, x, xi), 1e-7);
  }
  for (int i = 0; i < 30; ++i) {
    const Vec<3> p = oracle::ball_point<3>(rng, 0.8), x = oracle::ball_point<3>(rng, 0.8);
    const Vec<3> xi = oracle::sphere_point<3>(rng);
    EXPECT_NEAR(busemann(kBall, p, x, xi), oracle::klein_busemann(p, x, xi), 1e-7);
  }
}

TEST(KleinOracle, DensityThroughTheGenericRoute) {
  std::mt19937_64 rng(23);
  DensityOptions generic;
  generic.use_exact = false;
  for (int i = 0; i < 30; ++i) {
    const Vec<2> x = oracle::ball_point<2>(rng, 0.95);
    const double want = oracle::klein_density(x);
    EXPECT_NEAR(volume_density(kDisk, x, generic), want, 1e-9 * want);
    EXPECT_NEAR(volume_density(kDisk, x), want, 1e-12 * want);
  }
  generic.sphere_points = 1 << 14;
  for (int i = 0; i < 5; ++i) {
    const Vec<3> x = oracle::ball_point<3>(rng, 0.9);
    const double want = oracle::klein_density(x);
    EXPECT_NEAR(volume_density(kBall, x, generic), want, 1e-3 * want);
  }
}

TEST(Metric, Axioms2D) {
  std::mt19937_64 rng(24);
  for (const auto& omega : domains<2>()) {
    for (int i = 0; i < 300; ++i) {
      const Vec<2> x = sample_interior(*omega, rng, 0.97), y = sample_interior(*omega, rng, 0.97),
                   z = sample_interior(*omega, rng, 0.97);
      const double dxy = hilbert_distance(*omega, x, y);
      EXPECT_EQ(dxy, hilbert_distance(*omega, y, x)) << omega->describe();
      EXPECT_EQ(hilbert_distance(*omega, x, x), 0.0);
      EXPECT_GT(dxy, 0.0);
      EXPECT_LE(hilbert_distance(*omega, x, z), dxy + hilbert_distance(*omega, y, z) + 1e-12);
    }
  }
}

TEST(Metric, Axioms3D) {
  std::mt19937_64 rng(25);
  for (const auto& omega : domains<3>()) {
    for (int i = 0; i < 100; ++i) {
      const Vec<3> x = sample_interior(*omega, rng, 0.97), y = sample_interior(*omega, rng, 0.97),
                   z = sample_interior(*omega, rng, 0.97);
      const double dxy = hilbert_distance(*omega, x, y);
      EXPECT_EQ(dxy, hilbert_distance(*omega, y, x));
      EXPECT_LE(hilbert_distance(*omega, x, z), dxy + hilbert_distance(*omega, y, z) + 1e-12);
    }
  }
}

TEST(Metric, CollinearPointsAreAdditive) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& omega : domains<2>()) {
    for (int i = 0; i < 100; ++i) {
      const Vec<2> x = sample_interior(*omega, rng, 0.9), z = sample_interior(*omega, rng, 0.9);
      const Vec<2> y = x + u(rng) * (z - x);
      const double lhs = hilbert_distance(*omega, x, z);
      EXPECT_NEAR(lhs, hilbert_distance(*omega, x, y) + hilbert_distance(*omega, y, z), 1e-11 * (1.0 + lhs));
    }
  }
}

TEST(Metric, ProjectiveInvariance) {
  Mat<3> m;
  m << 1.1, 0.3, 0.05, -0.2, 0.8, 0.1, 0.4, -0.3, 1.6;
  const ProjectiveTransform<2> g(m);
  std::mt19937_64 rng(27);
  for (const auto& base : domains<2>()) {
    const TransformedDomain<2> image(base, g);
    for (int i = 0; i < 100; ++i) {
      const Vec<2> x = sample_interior(*base, rng, 0.95), y = sample_interior(*base, rng, 0.95);
      const double d = hilbert_distance(*base, x, y);
      EXPECT_NEAR(hilbert_distance(image, image.push(x), image.push(y)), d, 1e-9 * (1.0 + d));
    }
  }
}

TEST(Metric, PBallAxisDistance) {
  // along an axis the p-ball has the same chord as the disk
  for (double p : {2.0, 3.0, 4.0, 7.5}) {
    const PBall<2> omega(p);
    for (double t : {0.0, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9}) {
      EXPECT_NEAR(hilbert_distance(omega, Vec<2>::Zero(), Vec<2>(t, 0.0)), 0.5 * std::log((1.0 + t) / (1.0 - t)),
                  // the boundary gap 1 - t is only known to ~1e-16 absolute
                  1e-12 * (1.0 + std::abs(std::log1p(-t))) + 1e-16 / (1.0 - t));
    }
  }
}

TEST(Metric, FinslerNormAtCenterIsGauge) {
  std::mt19937_64 rng(28);
  for (double p : {3.0, 4.0, 6.0}) {
    const PBall<2> omega(p);
    for (int i = 0; i < 100; ++i) {
      const Vec<2> v = oracle::ball_point<2>(rng, 2.0);
      const double gauge = std::pow(std::pow(std::abs(v(0)), p) + std::pow(std::abs(v(1)), p), 1.0 / p);
      EXPECT_NEAR(finsler_norm(omega, Vec<2>::Zero(), v), gauge, 1e-13);
    }
  }
}

TEST(Metric, FinslerNormIsTheInfinitesimalDistance) {
  std::mt19937_64 rng(29);
  for (const auto& omega : domains<2>()) {
    for (int i = 0; i < 50; ++i) {
      const Vec<2> x = sample_interior(*omega, rng, 0.9);
      const Vec<2> v = oracle::sphere_point<2>(rng);
      const double h = 1e-6;
      const double ratio = hilbert_distance(*omega, x, Vec<2>(x + h * v)) / h;
      EXPECT_NEAR(ratio, finsler_norm(*omega, x, v), 1e-5 * ratio);
      EXPECT_NEAR(finsler_norm(*omega, x, Vec<2>(2.5 * v)), 2.5 * finsler_norm(*omega, x, v), 1e-13);
    }
  }
}

TEST(Metric, StraightSegmentsAreGeodesics) {
  std::mt19937_64 rng(30);
  for (const auto& omega : domains<2>()) {
    for (int i = 0; i < 10; ++i) {
      const Vec<2> x = sample_interior(*omega, rng, 0.9), y = sample_interior(*omega, rng, 0.9);
      const double d = hilbert_distance(*omega, x, y);
      EXPECT_NEAR(curve_length(*omega, std::vector<Vec<2>>{x, y}), d, 1e-9 * (1.0 + d));
      // a detour is longer
      const Vec<2> mid = 0.5 * (x + y) + 0.1 * Vec<2>(-(y - x)(1), (y - x)(0));
      if (omega->contains(mid)) EXPECT_GT(curve_length(*omega, std::vector<Vec<2>>{x, mid, y}), d);
    }
  }
}

TEST(Busemann, CocycleAndLipschitz) {
  std::mt19937_64 rng(31);
  for (const auto& omega : domains<2>()) {
    for (int i = 0; i < 20; ++i) {
      const Vec<2> xi = radial_boundary_point(*omega, oracle::sphere_point<2>(rng));
      const Vec<2> p = sample_interior(*omega, rng, 0.8), x = sample_interior(*omega, rng, 0.8),
                   y = sample_interior(*omega, rng, 0.8);
      const double bpx = busemann(*omega, p, x, xi), bxy = busemann(*omega, x, y, xi),
                   bpy = busemann(*omega, p, y, xi);
      EXPECT_NEAR(bpx + bxy, bpy, 1e-7) << omega->describe();
      EXPECT_LE(std::abs(bpx), hilbert_distance(*omega, p, x) + 1e-8);
      EXPECT_EQ(busemann(*omega, p, p, xi), 0.0);
    }
  }
}

TEST(Busemann, SlopeOneTowardTheBoundaryPoint) {
  std::mt19937_64 rng(32);
  for (const auto& omega : domains<2>()) {
    const Vec<2> xi = radial_boundary_point(*omega, Vec<2>(0.6, 0.8));
    const Vec<2> p = Vec<2>::Zero();
    const Vec<2> q = 0.5 * xi;
    // q lies on [p, xi): beta_p(q) = -d(p, q)
    EXPECT_NEAR(busemann(*omega, p, q, xi), -hilbert_distance(*omega, p, q), 1e-8) << omega->describe();
  }
}

TEST(Busemann, Errors) {
  EXPECT_EQ(kind_of([] { busemann(kDisk, Vec<2>::Zero(), Vec<2>(0.1, 0.0), Vec<2>(0.5, 0.0)); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { busemann(kDisk, Vec<2>(1.5, 0.0), Vec<2>(0.1, 0.0), Vec<2>(1.0, 0.0)); }),
            ErrorKind::PointOutside);
}

TEST(Horosphere, DiskHorocycleIsTheTangentEllipse) {
  // beta_0(x, (1, 0)) = 0  <=>  (x - 1/2)^2 / (1/4) + y^2 / (1/2) = 1
  const auto pts = horosphere_polyline(kDisk, Vec<2>(1.0, 0.0), Vec<2>::Zero(), 64);
  ASSERT_EQ(pts.size(), 64u);
  for (const auto& q : pts) {
    EXPECT_NEAR(std::pow(q(0) - 0.5, 2) / 0.25 + q(1) * q(1) / 0.5, 1.0, 1e-8);
    EXPECT_TRUE(kDisk.contains(q));
  }
}

TEST(Horosphere, PassesThroughBasePoint) {
  const auto omega = parse_domain<2>("pball:4");
  const Vec<2> xi(1.0, 0.0);
  const auto pts = horosphere_polyline(*omega, xi, Vec<2>::Zero(), 33);
  double best = INFINITY;
  for (const auto& q : pts) {
    best = std::min(best, q.norm());
    EXPECT_NEAR(busemann(*omega, Vec<2>::Zero(), q, xi), 0.0, 1e-8);
  }
  // the middle chord is the axis through the base point
  EXPECT_LT(best, 1e-8);
}

TEST(Errors, OutsideAndZeroDirection) {
  EXPECT_EQ(kind_of([] { hilbert_distance(kDisk, Vec<2>(1.0, 0.0), Vec<2>::Zero()); }), ErrorKind::PointOutside);
  EXPECT_EQ(kind_of([] { hilbert_distance(kDisk, Vec<2>(NAN, 0.0), Vec<2>::Zero()); }), ErrorKind::PointOutside);
  EXPECT_EQ(kind_of([] { finsler_norm(kDisk, Vec<2>(0.0, 2.0), Vec<2>(1.0, 0.0)); }), ErrorKind::PointOutside);
  EXPECT_EQ(finsler_norm(kDisk, Vec<2>::Zero(), Vec<2>::Zero()), 0.0);
  EXPECT_EQ(kind_of([] { ray_boundary(kDisk, Vec<2>::Zero(), Vec<2>::Zero()); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { horosphere_polyline(kDisk, Vec<2>(1.0, 0.0), Vec<2>::Zero(), 1); }),
            ErrorKind::InvalidInput);
}
