#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "piso/geometry.hpp"

using namespace piso;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(RadialGrid, SnapsReferenceRadiusToNode) {
  auto g = build_radial_grid(1.0, 4, 2, 0.5);
  EXPECT_EQ(g->star_index(), 2);
  EXPECT_EQ(g->node(2), 0.5);
  EXPECT_EQ(g->star_radius(), 0.5);
  EXPECT_EQ(g->snap_displacement(), 0.0);

  auto off = build_radial_grid(1.0, 10, 2, 0.52);
  EXPECT_EQ(off->star_index(), 5);
  EXPECT_NEAR(off->snap_displacement(), -0.02, 1e-15);
}

TEST(RadialGrid, WeightsIntegrateConstants) {
  auto g2 = build_radial_grid(1.0, 256, 2, 0.5);
  double s = 0;
  for (double w : g2->weights()) s += w;
  EXPECT_NEAR(s, 0.5, 1e-12);

  auto g3 = build_radial_grid(1.0, 256, 3, 0.5);
  s = 0;
  for (double w : g3->weights()) {
    EXPECT_GE(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s, 1.0 / 3.0, 1e-12);
}

TEST(RadialGrid, RejectsBadInput) {
  EXPECT_THROW(build_radial_grid(1.0, 64, 2, 0.0), std::invalid_argument);
  EXPECT_THROW(build_radial_grid(1.0, 64, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(build_radial_grid(1.0, 3, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(build_radial_grid(-1.0, 64, 2, 0.5), std::invalid_argument);
}

TEST(RadialGrid, SurfaceConstant) {
  auto g = build_radial_grid(1.0, 16, 2, 0.5);
  EXPECT_NEAR(g->surface_const(), 2.0 * std::sqrt(pi), 1e-14);
  EXPECT_NEAR(g->sphere_area(), 2.0 * pi, 1e-14);
  auto g3 = build_radial_grid(1.0, 16, 3, 0.5);
  EXPECT_NEAR(g3->sphere_area(), 4.0 * pi, 1e-14);
}

TEST(TimeGrid, Validates) {
  EXPECT_THROW(TimeGrid(0.0, 10), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 10, 0.4), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 10, 1.1), std::invalid_argument);
  TimeGrid t(2.0, 8, 1.0);
  EXPECT_DOUBLE_EQ(t.dt(), 0.25);
  double s = 0;
  for (double w : t.weights()) s += w;
  EXPECT_NEAR(s, 2.0, 1e-15);
}

TEST(DiskIntegral, ConstantsAndPolynomials) {
  auto g = build_radial_grid(1.0, 256, 2, 0.5);
  EXPECT_NEAR(disk_integral(RadialField(g, 1.0)), pi, 1e-10);

  // degree-1 exactness: 2 pi \int_0^1 r * r dr
  auto lin = RadialField::from_function(g, [](double r) { return r; });
  EXPECT_NEAR(disk_integral(lin), 2.0 * pi / 3.0, 1e-12);

  // r^2: oracle 2 pi \int r^3 dr = pi / 2, error O(M^-2)
  auto sq = RadialField::from_function(g, [](double r) { return r * r; });
  EXPECT_NEAR(disk_integral(sq), pi / 2.0, 2.0 * pi / (256.0 * 256.0));
}

TEST(DiskIntegral, IndicatorOfInnerBall) {
  auto g = build_radial_grid(1.0, 256, 2, 0.5);
  auto f = RadialField::from_function(g, [](double r) { return r < 0.5 ? 1.0 : 0.0; });
  EXPECT_NEAR(disk_integral(f), pi / 4.0, 10.0 / 256.0);
}

TEST(DiskIntegral, IntervalLoadIsExactVolume) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  std::vector<double> load(size_t(g->size()), 0.0);
  g->add_interval_load(0.1234, 0.6789, 1.0, load);
  double s = 0;
  for (double v : load) s += v;
  EXPECT_NEAR(g->sphere_area() * s, pi * (0.6789 * 0.6789 - 0.1234 * 0.1234), 1e-14);
}

TEST(BallCumulative, Basics) {
  auto g = build_radial_grid(1.0, 256, 2, 0.5);
  RadialField one(g, 1.0);
  EXPECT_NEAR(ball_cumulative(one, 1.0), disk_integral(one), 1e-14);
  EXPECT_EQ(ball_cumulative(one, 0.0), 0.0);
  auto lin = RadialField::from_function(g, [](double r) { return r; });
  EXPECT_NEAR(ball_cumulative(lin, 0.5), pi / 12.0, 1e-13);
  // mid-cell radius, still exact for the linear interpolant
  EXPECT_NEAR(ball_cumulative(lin, 0.3001), 2.0 * pi * std::pow(0.3001, 3) / 3.0, 1e-13);
  EXPECT_THROW(ball_cumulative(one, 1.5), std::out_of_range);
}

TEST(BallCumulative, NondecreasingForNonnegativeFields) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RadialField f(g);
  for (auto& v : f.values) v = U(rng);
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double c = ball_cumulative(f, i / 1000.0);
    EXPECT_GE(c, prev - 1e-15);
    prev = c;
  }
}

TEST(L1Distance, MetricProperties) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RadialField a(g), b(g), c(g);
    for (int j = 0; j < g->size(); ++j) {
      a[j] = U(rng);
      b[j] = U(rng);
      c[j] = U(rng);
    }
    EXPECT_EQ(l1_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(l1_distance(a, b), l1_distance(b, a));
    EXPECT_LE(l1_distance(a, c), l1_distance(a, b) + l1_distance(b, c) + 1e-12);
  }
  auto other = build_radial_grid(1.0, 32, 2, 0.5);
  EXPECT_THROW(l1_distance(RadialField(g), RadialField(other)), std::invalid_argument);
}

TEST(L1Distance, PolarSampledShiftedDisks) {
  // sampled l1 against the lens-area closed form
  auto g = build_radial_grid(1.0, 512, 2, 0.5);
  const int L = 512;
  const double x0 = 0.05;
  PolarField a(g, L), b(g, L);
  for (int j = 0; j < g->size(); ++j) {
    for (int l = 0; l < L; ++l) {
      const double r = g->node(j), t = PolarField::angle(l, L);
      const double x = r * std::cos(t), y = r * std::sin(t);
      a.at(j, l) = r < 0.5 ? 1.0 : 0.0;
      b.at(j, l) = (x - x0) * (x - x0) + y * y < 0.25 ? 1.0 : 0.0;
    }
  }
  const double exact = disk_symmetric_difference(0.5, 0.5, x0);
  EXPECT_NEAR(l1_distance(a, b), exact, 0.03 * exact);
}

TEST(SymmetricDifference, LensFormula) {
  // tiny shift: |B(0,r) \Delta B(x0,r)| ~ 4 r |x0|
  EXPECT_NEAR(disk_symmetric_difference(0.5, 0.5, 1e-4), 4.0 * 0.5 * 1e-4, 1e-11);
  EXPECT_NEAR(disk_symmetric_difference(0.5, 0.5, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(disk_symmetric_difference(0.5, 0.2, 0.1), pi * (0.25 - 0.04), 1e-14);
  EXPECT_NEAR(disk_symmetric_difference(0.3, 0.2, 1.0), pi * (0.09 + 0.04), 1e-14);
}

TEST(SymmetricDifference, StarSetsMatchLens) {
  const double rs = 0.5, x0 = 0.07;
  auto ball = [&](double) { return rs; };
  auto shifted = [&](double t) {
    const double c = x0 * std::cos(t);
    return c + std::sqrt(rs * rs - x0 * x0 + c * c);
  };
  EXPECT_NEAR(star_symmetric_difference(ball, shifted), disk_symmetric_difference(rs, rs, x0),
              1e-12);
  EXPECT_EQ(star_symmetric_difference(ball, ball), 0.0);
}
