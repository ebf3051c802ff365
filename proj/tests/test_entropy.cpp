#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "hilbertlab/entropy.hpp"

using namespace hilbertlab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(BallVolume, HyperbolicDisk) {
  const auto disk = Ellipsoid<2>::unit_ball();
  for (double R : {0.5, 1.0, 2.0, 4.0}) {
    const double want = 2.0 * kPi * (std::cosh(R) - 1.0);
    EXPECT_NEAR(ball_volume(disk, Vec<2>::Zero(), R), want, 1e-9 * want) << R;
  }
  // off-centre balls have the same volume
  const double want = 2.0 * kPi * (std::cosh(2.0) - 1.0);
  EXPECT_NEAR(ball_volume(disk, Vec<2>(0.5, -0.3), 2.0), want, 1e-8 * want);
}

TEST(BallVolume, HyperbolicBall) {
  const auto ball = Ellipsoid<3>::unit_ball();
  BallVolumeOptions opt;
  opt.directions = 2048;
  const double R = 1.5, want = kPi * (std::sinh(2.0 * R) - 2.0 * R);
  EXPECT_NEAR(ball_volume(ball, Vec<3>::Zero(), R, opt), want, 1e-3 * want);
}

TEST(BallVolume, SmallBallsAreEuclidean) {
  // Busemann-Hausdorff normalization: vol B(p, R) / (omega_n R^n) -> 1
  for (const char* spec : {"pball:4", "perturbed:0.05,0", "ellipse:2,1"}) {
    const auto omega = parse_domain<2>(spec);
    const double R = 1e-3;
    EXPECT_NEAR(ball_volume(*omega, Vec<2>(0.1, 0.05), R) / (kPi * R * R), 1.0, 1e-5) << spec;
  }
}

TEST(BallVolume, ProfileIsIncreasing) {
  for (const char* spec : {"pball:4", "perturbed:0.05,0"}) {
    const auto omega = parse_domain<2>(spec);
    const auto v = ball_volume_profile(*omega, Vec<2>::Zero(), {0.5, 1.0, 2.0, 3.0, 5.0});
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]) << spec;
    EXPECT_NEAR(v[2], ball_volume(*omega, Vec<2>::Zero(), 2.0), 1e-9 * v[2]);
  }
}

TEST(BallVolume, Errors) {
  const auto disk = Ellipsoid<2>::unit_ball();
  EXPECT_EQ(kind_of([&] { ball_volume(disk, Vec<2>::Zero(), 0.0); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { ball_volume(disk, Vec<2>(2.0, 0.0), 1.0); }), ErrorKind::PointOutside);
}

TEST(Entropy, DiskAndBall) {
  const auto [a, b] = default_entropy_window<2>();
  const auto e2 = volume_entropy_estimate(Ellipsoid<2>::unit_ball(), Vec<2>::Zero(), a, b);
  EXPECT_NEAR(e2.value, 1.0, 1e-3);
  EXPECT_FALSE(e2.warning);
  EXPECT_EQ(e2.method, "ball-growth");
  EXPECT_EQ(e2.radii.size(), 8u);
  BallVolumeOptions opt;
  opt.directions = 1024;
  const auto [c, d] = default_entropy_window<3>();
  const auto e3 = volume_entropy_estimate(Ellipsoid<3>::unit_ball(), Vec<3>::Zero(), c, d, opt);
  EXPECT_NEAR(e3.value, 2.0, 0.02);
}

TEST(Entropy, NonRoundDomainStaysBelowTheBall) {
  const auto omega = parse_domain<2>("pball:4");
  const auto e = volume_entropy_estimate(*omega, Vec<2>::Zero(), 4.0, 8.0);
  EXPECT_LT(e.value, 1.0 + 1e-3);
  EXPECT_GT(e.value, 0.9);
}

TEST(Entropy, WindowErrors) {
  const auto disk = Ellipsoid<2>::unit_ball();
  EXPECT_EQ(kind_of([&] { volume_entropy_estimate(disk, Vec<2>::Zero(), 0.5, 4.0); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { volume_entropy_estimate(disk, Vec<2>::Zero(), 4.0, 4.0); }), ErrorKind::InvalidInput);
}

TEST(GrowthFit, RecoversSyntheticVolumes) {
  for (int n : {2, 3}) {
    for (double h : {0.3, 0.7, 1.0, 1.9}) {
      std::vector<double> R, V;
      for (int i = 0; i < 8; ++i) {
        R.push_back(3.0 + 0.5 * i);
        // V = A (int_0^R sinh^(n-1)(h r / (n-1)) dr) with A = 3.7
        const double x = h * R.back() / (n - 1);
        const double shape = n == 2 ? (std::cosh(x) - 1.0) / h : (std::sinh(2.0 * x) - 2.0 * x) / (2.0 * h);
        V.push_back(3.7 * shape);
      }
      EXPECT_NEAR(growth::fit_log_volumes(n, R, V).h, h, 1e-6) << n << ' ' << h;
    }
  }
}

TEST(GrowthFit, RecoversSyntheticCounts) {
  std::vector<double> R, C;
  for (int i = 1; i <= 30; ++i) {
    R.push_back(0.2 * i);
    C.push_back(5.0 * std::exp(growth::log_shape(2, 0.8, R.back())));
  }
  EXPECT_NEAR(growth::fit_counts(2, R, C).h, 0.8, 1e-6);
}

TEST(GrowthFit, LogShapeIsContinuousAcrossBranches) {
  // series branches switch at h R = 1e-4 (n = 2), 1e-2 and 30 (n = 3)
  for (auto [n, x] : {std::pair{2, 1e-4}, std::pair{3, 1e-2}, std::pair{3, 30.0}}) {
    const double R = 2.0, h = x / R;
    const double lo = growth::log_shape(n, h * (1.0 - 1e-9), R), hi = growth::log_shape(n, h * (1.0 + 1e-9), R);
    EXPECT_NEAR(lo, hi, 1e-8 * (1.0 + std::abs(hi))) << n << ' ' << x;
  }
  // h -> 0 limits: R^2 / 2 and R^3 / 6
  EXPECT_NEAR(growth::log_shape(2, 0.0, 2.0), std::log(2.0), 1e-14);
  EXPECT_NEAR(growth::log_shape(3, 0.0, 2.0), std::log(8.0 / 6.0), 1e-14);
}

TEST(ChordRadius, InvertsTheDistance) {
  const double tp = 0.7, tm = 1.9;
  for (double r : {0.0, 0.1, 1.0, 5.0, 15.0}) {
    const double rho = detail::chord_radius(tp, tm, r);
    // tp - rho cancels as r grows; the inverse is good only to eps tp / (tp - rho)
    EXPECT_NEAR(0.5 * std::log((rho + tm) / tm * tp / (tp - rho)), r, 1e-9 * (1.0 + r) + 1e-15 * tp / (tp - rho));
  }
  EXPECT_NEAR(detail::chord_radius_derivative(tp, tm, 0.0), 2.0 * tp * tm / (tp + tm), 1e-15);
}
