#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common.hpp"
#include "hilbertlab/group.hpp"

using namespace hilbertlab;

namespace {

Mat<3> scaled(const ProjectiveTransform<2>& g, int power) {
  Mat<3> m = Mat<3>::Identity();
  for (int i = 0; i < power; ++i) m = m * g.matrix();
  return m;
}

/// max |M / (trace / 3) - I|: zero when M is a multiple of the identity
double identity_gap(const Mat<3>& m) {
  return (m / (m.trace() / 3.0) - Mat<3>::Identity()).cwiseAbs().maxCoeff();
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST(TriangleGroup, CoxeterRelations) {
  const auto g = klein_triangle_group(2, 3, 7);
  ASSERT_EQ(g.generators.size(), 3u);
  const auto& s = g.generators;
  for (const auto& r : s) EXPECT_LT(identity_gap(scaled(r, 2)), 1e-12);
  // m_12 = q = 3, m_23 = r = 7, m_31 = p = 2
  EXPECT_LT(identity_gap(scaled(s[0] * s[1], 3)), 1e-11);
  EXPECT_LT(identity_gap(scaled(s[1] * s[2], 7)), 1e-10);
  EXPECT_LT(identity_gap(scaled(s[2] * s[0], 2)), 1e-11);
  // and no smaller power closes up
  EXPECT_GT(identity_gap(scaled(s[1] * s[2], 6)), 1e-3);
  EXPECT_TRUE(group_audit(g).pass);
  EXPECT_TRUE(g.domain->contains(g.basepoint));
}

TEST(TriangleGroup, BasepointIsEquidistantFromMirrors) {
  const auto g = klein_triangle_group(3, 3, 4);
  double d0 = -1.0;
  for (const auto& s : g.generators) {
    const double d = hilbert_distance(*g.domain, g.basepoint, s.apply_affine(g.basepoint));
    if (d0 < 0.0) d0 = d;
    EXPECT_NEAR(d, d0, 1e-10);
  }
}

TEST(TriangleGroup, SignatureErrors) {
  EXPECT_EQ(kind_of([] { klein_triangle_group(2, 3, 6); }), ErrorKind::BadSignature);
  EXPECT_EQ(kind_of([] { klein_triangle_group(2, 2, 100); }), ErrorKind::BadSignature);
  EXPECT_EQ(kind_of([] { klein_triangle_group(1, 3, 7); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_group("triangle:2,3"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_group("triangle:2,3,7.5"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_group("free"); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_group("cyclic:0"); }), ErrorKind::InvalidInput);
}

TEST(MatricesGroup, ReadsFileAndAddsInverses) {
  const double l = 0.8;
  char buf[256];
  // one row-major 3x3 matrix per line; blank lines are skipped
  std::snprintf(buf, sizeof buf, "%.17g 0 %.17g 0 1 0 %.17g 0 %.17g\n\n", std::cosh(l), std::sinh(l), std::sinh(l),
                std::cosh(l));
  const auto path = temp_file("hilbertlab_translation.txt", buf);
  const auto g = parse_group("matrices:" + path);
  EXPECT_EQ(g.generators.size(), 2u);
  EXPECT_FALSE(g.reflections);
  EXPECT_TRUE(group_audit(g).pass);
  const auto rep = critical_exponent_estimate(g, Vec<2>::Zero(), 8);
  EXPECT_EQ(rep.orbit_size, 17u);
}

TEST(MatricesGroup, AuditRejectsNonIsometries) {
  const auto path = temp_file("hilbertlab_scaling.txt", "2 0 0 0 1 0 0 0 1\n");
  try {
    group_audit(parse_group("matrices:" + path));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OrbitEscapesDomain);
  }
  const auto bad = temp_file("hilbertlab_short.txt", "1 0 0 0 1\n");
  EXPECT_EQ(kind_of([&] { parse_group("matrices:" + bad); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { parse_group("matrices:/nonexistent/file"); }), ErrorKind::InvalidInput);
}

TEST(Orbit, CyclicGroupIsALine) {
  const auto g = cyclic_translation_group(0.5);
  const auto orb = orbit_bfs(g, Vec<2>::Zero(), 10);
  ASSERT_EQ(orb.points.size(), 21u);
  for (std::size_t i = 0; i < orb.points.size(); ++i) {
    EXPECT_NEAR(orb.distance[i], 0.5 * orb.word_length[i], 1e-10);
    EXPECT_NEAR(orb.points[i](1), 0.0, 1e-15);
  }
  const auto rep = critical_exponent_estimate(g, Vec<2>::Zero(), 10);
  EXPECT_NEAR(rep.estimate.value, 0.0, 0.05);
}

TEST(Orbit, TrivialGroup) {
  const auto g = parse_group("trivial");
  const auto rep = critical_exponent_estimate(g, Vec<2>::Zero(), 8);
  EXPECT_EQ(rep.estimate.value, 0.0);
  EXPECT_EQ(rep.orbit_size, 1u);
  EXPECT_EQ(kind_of([&] { patterson_orbit_measure(g, Vec<2>::Zero(), 1.0, 8); }), ErrorKind::DegenerateMeasure);
}

TEST(Orbit, ShardCountDoesNotChangeTheOrbit) {
  const auto g = klein_triangle_group(2, 3, 7);
  OrbitOptions one, four;
  four.shards = 4;
  const auto a = orbit_bfs(g, g.basepoint, 14, one), b = orbit_bfs(g, g.basepoint, 14, four);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i], b.points[i]);
    EXPECT_EQ(a.distance[i], b.distance[i]);
  }
  EXPECT_EQ(a.shell_start, b.shell_start);
}

TEST(Orbit, PointsAreDistinctAndInside) {
  const auto g = klein_triangle_group(2, 3, 7);
  const auto orb = orbit_bfs(g, g.basepoint, 12);
  double dmin = INFINITY;
  for (std::size_t i = 0; i < orb.points.size(); ++i) {
    EXPECT_TRUE(g.domain->contains(orb.points[i]));
    for (std::size_t j = 0; j < i; ++j)
      dmin = std::min(dmin, hilbert_distance(*g.domain, orb.points[i], orb.points[j]));
  }
  EXPECT_GT(dmin, 0.1);
}

TEST(Orbit, MemoryBudget) {
  const auto g = klein_triangle_group(2, 3, 7);
  OrbitOptions opt;
  opt.cap = 100;
  EXPECT_EQ(kind_of([&] { orbit_bfs(g, g.basepoint, 20, opt); }), ErrorKind::MemoryBudgetExceeded);
  EXPECT_EQ(kind_of([&] { orbit_bfs(g, Vec<2>(1.0, 0.0), 3); }), ErrorKind::PointOutside);
}

TEST(CriticalExponent, TriangleGroupIsBelowOne) {
  const auto g = klein_triangle_group(2, 3, 7);
  const auto rep = critical_exponent_estimate(g, g.basepoint, 16);
  // a cocompact lattice of the hyperbolic plane has exponent 1
  EXPECT_GT(rep.estimate.value, 0.85);
  EXPECT_LE(rep.estimate.value, 1.05);
  EXPECT_GT(rep.certified_radius, 1.0);
  EXPECT_EQ(rep.shell_sizes.size(), 17u);
  EXPECT_EQ(kind_of([&] { critical_exponent_estimate(g, g.basepoint, 5); }), ErrorKind::InvalidInput);
}

TEST(Patterson, NormalizedBoundaryMeasure) {
  const auto g = klein_triangle_group(2, 3, 7);
  const auto pm = patterson_orbit_measure(g, g.basepoint, 1.5, 12);
  EXPECT_NEAR(pm.measure.total(), 1.0, 1e-12);
  for (const auto& a : pm.measure.atoms) EXPECT_NEAR(a.xi.norm(), 1.0, 1e-12);
  EXPECT_GT(pm.partial_sum, 1.0);
  // larger s weights distant points less
  const auto pm2 = patterson_orbit_measure(g, g.basepoint, 3.0, 12);
  EXPECT_LT(pm2.unnormalized_mass, pm.unnormalized_mass);
  EXPECT_EQ(kind_of([&] { patterson_orbit_measure(g, g.basepoint, 0.0, 12); }), ErrorKind::InvalidInput);
}
