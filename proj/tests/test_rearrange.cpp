#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "piso/controls.hpp"
#include "piso/rearrange.hpp"

using namespace piso;

namespace {

constexpr double pi = std::numbers::pi;

RadialField random_field(GridPtr g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RadialField f(g);
  for (auto& v : f.values) v = U(rng);
  return f;
}

double direct_volume_above(const RadialField& f, double tau) {
  double s = 0;
  for (int j = 0; j < f.size(); ++j)
    if (f[j] > tau) s += f.grid->node_measure(j);
  return s;
}

}  // namespace

TEST(LayerCake, EquimeasurableWithInput) {
  auto g = build_radial_grid(1.0, 128, 2, 0.5);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_field(g, rng);
    auto cake = layer_cake(f);
    EXPECT_NEAR(cake.total_measure(), g->volume(), 1e-12);
    for (double tau : {0.1, 0.25, 0.5, 0.9})
      EXPECT_NEAR(cake.volume_above(tau), direct_volume_above(f, tau), 1e-12);
    double m2 = 0;
    for (int j = 0; j < f.size(); ++j) m2 += g->node_measure(j) * f[j] * f[j];
    EXPECT_NEAR(cake.moment(2.0), m2, 1e-12);
    EXPECT_NEAR(cake.top_mass(g->volume()), disk_integral(f), 1e-12);
  }
}

TEST(LayerCake, TopMassIsConcave) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  std::mt19937_64 rng(3);
  auto cake = layer_cake(random_field(g, rng));
  double prev = 1e300;
  for (int i = 0; i < 100; ++i) {
    const double s0 = g->volume() * i / 100, s1 = g->volume() * (i + 1) / 100;
    const double slope = (cake.top_mass(s1) - cake.top_mass(s0)) / (s1 - s0);
    EXPECT_LE(slope, prev + 1e-12);
    prev = slope;
  }
}

TEST(DecreasingRearrangement, FixesNonincreasingInput) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  auto f = RadialField::from_function(g, [](double r) { return 1.0 - r * r; });
  auto fs = decreasing_rearrangement(f);
  EXPECT_EQ(fs.values, f.values);
}

TEST(DecreasingRearrangement, MonotoneMassPreserving) {
  auto g = build_radial_grid(1.0, 128, 2, 0.5);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_field(g, rng);
    auto fs = decreasing_rearrangement(f);
    EXPECT_NEAR(disk_integral(fs), disk_integral(f), 1e-12);
    for (int j = 0; j + 1 < fs.size(); ++j) EXPECT_GE(fs[j], fs[j + 1] - 1e-12);
    // shell means never exceed the extremes
    EXPECT_LE(fs[0], *std::max_element(f.values.begin(), f.values.end()) + 1e-12);
  }
}

TEST(DecreasingRearrangement, RejectsNegativeValues) {
  auto g = build_radial_grid(1.0, 16, 2, 0.5);
  RadialField f(g, 0.5);
  f[3] = -0.1;
  EXPECT_THROW(decreasing_rearrangement(f), std::invalid_argument);
}

TEST(Schwarz2d, ShiftedDiskBecomesCentredDisk) {
  auto g = build_radial_grid(1.0, 256, 2, 0.5);
  AdmissibleSpec spec{pi * 0.25};
  auto ball = shifted_ball_control(0.2, -0.1, spec, g, 16);
  // polar indicator of the shifted disk, sampled directly
  const int L = 512;
  PolarField f(g, L);
  for (int j = 0; j < g->size(); ++j)
    for (int l = 0; l < L; ++l) {
      const double t = PolarField::angle(l, L);
      const double x = g->node(j) * std::cos(t) - 0.2, y = g->node(j) * std::sin(t) + 0.1;
      f.at(j, l) = x * x + y * y < 0.25 ? 1.0 : 0.0;
    }
  auto fs = schwarz_2d(f);
  EXPECT_NEAR(disk_integral(fs), disk_integral(f), 1e-12);
  auto star = ball_control(g).radial_slice(0);
  EXPECT_LT(l1_distance(fs, star), 0.02);
  // truncated channels overshoot below zero (Gibbs), which schwarz_2d refuses
  EXPECT_THROW(schwarz_2d(ball.sample_polar(0, 256)), std::invalid_argument);
}

TEST(Schwarz2d, Validation) {
  auto g = build_radial_grid(1.0, 16, 2, 0.5);
  EXPECT_THROW(schwarz_2d(PolarField(g, 32, 1.0)), std::invalid_argument);
  PolarField f(g, 64, 1.0);
  f.at(2, 5) = -1e-13;  // clipped
  EXPECT_NO_THROW(schwarz_2d(f));
  f.at(2, 5) = -1e-6;
  EXPECT_THROW(schwarz_2d(f), std::invalid_argument);
}

TEST(HardyLittlewood, NonnegativeOnRandomPairs) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_field(g, rng), h = random_field(g, rng);
    EXPECT_GE(check_hardy_littlewood(f, h), -1e-8);
  }
  // equality for equally ordered fields
  auto a = RadialField::from_function(g, [](double r) { return 1 - r; });
  auto b = RadialField::from_function(g, [](double r) { return std::exp(-r); });
  EXPECT_NEAR(check_hardy_littlewood(a, b), 0.0, 1e-13);
}

TEST(HardyLittlewood, PolarVersion) {
  auto g = build_radial_grid(1.0, 32, 2, 0.5);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PolarField f(g, 64), h(g, 64);
  for (auto& v : f.values) v = U(rng);
  for (auto& v : h.values) v = U(rng);
  EXPECT_GT(check_hardy_littlewood(f, h), 0.0);
}

TEST(Precedes, BallAndFlatProfile) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  AdmissibleSpec spec{g->ball_volume(g->star_radius())};
  auto star = ball_control(g).radial_slice(0);
  EXPECT_TRUE(precedes(star, star).holds);
  RadialField flat(g, spec.V0 / g->volume());
  EXPECT_TRUE(precedes(flat, star).holds);
  auto r = precedes(star, flat);
  EXPECT_FALSE(r.holds);
  EXPECT_LT(r.worst_margin, 0.0);
}

TEST(Precedes, AdmissibleControlsPrecedeBall) {
  auto g = build_radial_grid(1.0, 128, 2, 0.5);
  AdmissibleSpec spec{g->ball_volume(g->star_radius())};
  auto star = ball_control(g).radial_slice(0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    SampleRequest req;
    req.kind = s % 2 ? SampleKind::smooth : SampleKind::bangbang_radial;
    auto f = sample_random_admissible(s, req, spec, g);
    EXPECT_TRUE(precedes(f.radial_slice(0), star).holds) << s;
  }
}

TEST(Distribution, ConstantJumpsAtItsValue) {
  auto g = build_radial_grid(1.0, 32, 2, 0.5);
  RadialField c(g, 0.3);
  auto cake = layer_cake(c);
  EXPECT_EQ(cake.volume_above(0.3), 0.0);
  EXPECT_NEAR(cake.volume_above(0.3 - 1e-9), g->volume(), 1e-12);
  auto d = distribution(c, 3);
  ASSERT_EQ(d.thresholds.size(), 3u);
  for (double m : d.measures) EXPECT_EQ(m, 0.0);
}

TEST(Distribution, Descending) {
  auto g = build_radial_grid(1.0, 64, 2, 0.5);
  auto f = RadialField::from_function(g, [](double r) { return std::cos(3 * r) + 1; });
  auto d = distribution(f, 20);
  for (size_t i = 0; i + 1 < d.thresholds.size(); ++i) {
    EXPECT_GT(d.thresholds[i], d.thresholds[i + 1]);
    EXPECT_LE(d.measures[i], d.measures[i + 1]);
  }
  EXPECT_THROW(distribution(f, 1), std::invalid_argument);
}
