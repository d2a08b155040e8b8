#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "piso/shape_hessian.hpp"

using namespace piso;

namespace {

constexpr double pi = std::numbers::pi;

ProblemSetup plane(int M = 128, int N = 256, double T = 1.0) {
  SetupOptions o;
  o.M = M;
  o.N = N;
  o.T = T;
  o.eps = 0.0;
  return make_setup(o);
}

}  // namespace

TEST(Spectrum, SignsOrderAndComparisons) {
  auto s = plane();
  auto sp = compute_spectrum(8, s);
  ASSERT_EQ(sp.size(), 8);
  EXPECT_TRUE(sp.omega1_negative);
  EXPECT_TRUE(sp.monotone_ok);
  EXPECT_TRUE(sp.sign_ok) << sp.y1_min << " " << sp.z1_min;
  EXPECT_TRUE(sp.comparison_ok) << sp.y_excess << " " << sp.z_excess;
  // the shared radial term is negative: p decreases across r*
  EXPECT_LT(sp.dp_integral, 0.0);
}

TEST(Spectrum, GridStable) {
  auto a = compute_spectrum(4, plane(128, 256));
  auto b = compute_spectrum(4, plane(256, 512));
  for (int k = 1; k <= 4; ++k)
    EXPECT_NEAR(a.omega(k) / b.omega(k), 1.0, 0.01) << k;
}

TEST(Spectrum, Preconditions) {
  EXPECT_THROW(compute_spectrum(8, plane(16, 16)), std::invalid_argument);
  EXPECT_THROW(compute_spectrum(0, plane()), std::invalid_argument);
  SetupOptions o;
  o.M = 64;
  o.N = 64;
  EXPECT_THROW(compute_spectrum(2, make_setup(o)), std::invalid_argument);  // eps = 0.1
}

TEST(Spectrum, CsvRows) {
  auto sp = compute_spectrum(3, plane(64, 64));
  const auto csv = sp.csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("k,omega_k,fd_error\n1,", 0), 0u);
}

TEST(LagrangeMultiplier, NegativeStableAndVanishingHorizon) {
  const double mu = lagrange_multiplier(plane(128, 256));
  EXPECT_LT(mu, 0.0);
  const double mu2 = lagrange_multiplier(plane(256, 512));
  EXPECT_NEAR(mu / mu2, 1.0, 1e-4);
  const double tiny = lagrange_multiplier(plane(128, 64, 1e-3));
  EXPECT_LT(std::abs(tiny), 1e-6 * std::abs(mu) * 1e3);
}

TEST(Criticality, BallIsCritical) {
  auto s = plane(64, 64);
  auto ref = compute_reference(s);
  auto norm = [](const DeformationCoeffs& c) { return std::sqrt(pi * 0.5 * c.energy()); };
  auto a1 = DeformationCoeffs::single(1, 1.0);
  EXPECT_LE(std::abs(criticality_check(a1, s, &ref)), 1e-8 * norm(a1));
  auto b3 = DeformationCoeffs::single(3, 0.0, 1.0);
  EXPECT_LE(std::abs(criticality_check(b3, s, &ref)), 1e-8 * norm(b3));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  DeformationCoeffs mix;
  mix.alpha.assign(9, 0.0);
  mix.beta.assign(9, 0.0);
  for (int k = 1; k <= 8; ++k) {
    mix.alpha[k] = N(rng);
    mix.beta[k] = N(rng);
  }
  EXPECT_LE(std::abs(criticality_check(mix, s, &ref)), 1e-8 * norm(mix));
  DeformationCoeffs zero_mode;
  zero_mode.alpha = {1.0, 0.5};
  EXPECT_THROW(criticality_check(zero_mode, s, &ref), std::invalid_argument);
}

TEST(QuadraticForm, Basics) {
  auto sp = compute_spectrum(4, plane(64, 64));
  EXPECT_EQ(quadratic_form(DeformationCoeffs{}, sp), 0.0);
  const double one = quadratic_form(DeformationCoeffs::single(1, 1.0), sp);
  EXPECT_LT(one, 0.0);
  EXPECT_NEAR(one, pi * 0.5 * sp.omega(1), 1e-15);
  EXPECT_NEAR(quadratic_form(DeformationCoeffs::single(1, 1.0, 1.0), sp), 2 * one, 1e-15);
  EXPECT_THROW(quadratic_form(DeformationCoeffs::single(5, 1.0), sp), std::invalid_argument);
}

TEST(Lagrangian, BasePointAndEvenness) {
  auto s = plane(64, 64);
  auto ref = compute_reference(s);
  auto c = DeformationCoeffs::single(2, 1.0);
  const double L0 = lagrangian_value(deformed_ball_control(0.0, c, s.spec, s.grid), s, &ref);
  EXPECT_NEAR(L0, ref.J - ref.Psi[s.grid->star_index()] * s.spec.V0, 1e-14);
  const double lp = lagrangian_value(deformed_ball_control(5e-3, c, s.spec, s.grid), s, &ref);
  const double lm = lagrangian_value(deformed_ball_control(-5e-3, c, s.spec, s.grid), s, &ref);
  EXPECT_LT(lp, L0);
  EXPECT_NEAR(lp, lm, 1e-6 * std::abs(lp - L0));
  EXPECT_THROW(lagrangian_value(annulus_control(0.01, s.spec, s.grid), s, &ref),
               std::invalid_argument);
}

TEST(Lagrangian, UncorrectedVolumeIsSecondOrder) {
  Shape sh;
  sh.kind = Shape::Kind::deformed_ball;
  sh.base = 0.5;
  sh.coeffs = DeformationCoeffs::single(3, 1.0, -2.0);
  for (double tau : {1e-2, 1e-3}) {
    sh.tau = tau;
    EXPECT_NEAR(sh.volume(2) - pi * 0.25, 0.5 * pi * tau * tau * 5.0, 1e-15);
  }
}

TEST(FdHessian, MatchesSpectrumForLowModes) {
  auto s = plane(128, 256);
  auto ref = compute_reference(s);
  auto sp = compute_spectrum(4, s, &ref);
  auto r1 = fd_hessian_check(DeformationCoeffs::single(1, 1.0), {4e-3, 2e-3, 1e-3}, s, sp, &ref);
  EXPECT_LT(r1.rel_errors.back(), 0.02);
  auto r2 = fd_hessian_check(DeformationCoeffs::single(2, 1.0), {4e-3, 2e-3, 1e-3}, s, sp, &ref);
  EXPECT_LT(r2.rel_errors.back(), 0.02);
  EXPECT_LT(r2.second_differences.back(), r1.second_differences.back());
}

TEST(FdHessian, ZeroDeformation) {
  auto s = plane(64, 64);
  auto sp = compute_spectrum(2, s);
  auto r = fd_hessian_check(DeformationCoeffs{}, {1e-3}, s, sp);
  EXPECT_NEAR(r.second_differences[0], 0.0, 1e-8);
}

TEST(NormalDeformation, QuadraticLossInAsymmetry) {
  auto s = plane(128, 128);
  auto ref = compute_reference(s);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 6; ++trial) {
    DeformationCoeffs c;
    c.alpha.assign(5, 0.0);
    c.beta.assign(5, 0.0);
    for (int k = 1; k <= 4; ++k) {
      c.alpha[k] = U(rng);
      c.beta[k] = U(rng);
    }
    const double tau = 1e-2 * std::abs(U(rng)) + 1e-3;
    auto f = deformed_ball_control(tau, c, s.spec, s.grid, 16);
    const double asym = l1_distance(f, 0, ref.fstar, 0);
    EXPECT_GT((ref.J - evaluate_jt(f, s)) / (asym * asym), 0.0) << trial;
  }
}
