#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "piso/functionals.hpp"

using namespace piso;

namespace {

constexpr double pi = std::numbers::pi;

ProblemSetup small(double eps = 0.0, int M = 64, int N = 64) {
  SetupOptions o;
  o.M = M;
  o.N = N;
  o.eps = eps;
  return make_setup(o);
}

Control random_smooth(std::uint64_t seed, const ProblemSetup& s) {
  SampleRequest req;
  req.kind = SampleKind::smooth;
  return sample_random_admissible(seed, req, s.spec, s.grid, s.tgrid);
}

// J(f*) for u0 = 0 from the Fourier-Bessel series of the unit disk
double bessel_series_jstar(double a, double T, int terms) {
  double J = 0;
  for (int i = 1; i <= terms; ++i) {
    const double j = boost::math::cyl_bessel_j_zero(0.0, i);
    const double lam = j * j;
    const double J1 = std::cyl_bessel_j(1.0, j);
    const double c = 2 * pi * a * std::cyl_bessel_j(1.0, j * a) / j / std::sqrt(pi * J1 * J1);
    const double e1 = std::exp(-lam * T), e2 = std::exp(-2 * lam * T);
    const double time = (T - 2 * (1 - e1) / lam + (1 - e2) / (2 * lam)) / (lam * lam);
    J += 0.5 * c * c * time;
  }
  return J;
}

}  // namespace

TEST(Setup, DefaultsAndValidation) {
  auto s = make_setup();
  EXPECT_EQ(s.grid->star_radius(), 0.5);
  EXPECT_NEAR(s.spec.V0, pi / 4, 1e-15);
  EXPECT_EQ(s.tgrid.N, 512);
  EXPECT_EQ(s.hash(), make_setup().hash());
  SetupOptions o;
  o.eps = -1;
  try {
    make_setup(o);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("eps"), std::string::npos);
  }
  auto bad = small();
  bad.u0 = RadialField::from_function(bad.grid, [](double r) { return r * (1 - r); });
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(EvaluateJ, ZeroControlZeroData) {
  auto s = small();
  auto zero = radial_control(RadialField(s.grid));
  EXPECT_EQ(evaluate_jt(zero, s), 0.0);
  EXPECT_EQ(evaluate_jt_eps(zero, s), 0.0);
}

TEST(EvaluateJ, RepresentationConsistency) {
  auto s = small(0.1);
  auto f = random_smooth(3, s);
  std::vector<RadialField> slices(size_t(s.tgrid.N + 1), f.radial_slice(0));
  auto ft = time_radial_control(slices);
  EXPECT_NEAR(evaluate_jt_eps(ft, s), evaluate_jt_eps(f, s), 1e-12 * evaluate_jt_eps(f, s));
}

TEST(EvaluateJ, BallMatchesBesselSeries) {
  const double oracle = bessel_series_jstar(0.5, 1.0, 4000);
  double prev_err = 1;
  for (int M : {64, 128, 256}) {
    auto s = small(0.0, M, 2 * M);
    const double J = evaluate_jt(ball_control(s.grid), s);
    const double err = std::abs(J - oracle) / oracle;
    EXPECT_LT(err, prev_err / 3) << M;
    prev_err = err;
  }
  EXPECT_LT(prev_err, 2e-5);
  EXPECT_LT(prev_err * oracle, 1e-6);  // absolute, as J is small
}

TEST(EvaluateJ, TerminalTermComposes) {
  auto s = small(0.1);
  auto f = ball_control(s.grid);
  auto u = solve_state(f, s);
  double terminal = 0;
  const int N = s.tgrid.N;
  for (int j = 0; j < s.grid->size(); ++j)
    terminal += s.grid->weight(j) * u[0].field.at(N, j) * u[0].field.at(N, j);
  terminal *= 2 * pi;
  EXPECT_NEAR(evaluate_jt_eps(f, s), evaluate_jt(f, s) + 0.05 * terminal, 1e-14);
  auto s0 = small(0.0);
  EXPECT_EQ(evaluate_jt_eps(f, s0), evaluate_jt(f, s0));
}

TEST(EvaluateJ, RejectsMismatchedSlices) {
  auto s = small();
  auto f = time_radial_control({RadialField(s.grid), RadialField(s.grid), RadialField(s.grid)});
  EXPECT_THROW(evaluate_jt(f, s), std::invalid_argument);
  auto other = small(0.0, 128);
  EXPECT_THROW(evaluate_jt(ball_control(other.grid), s), std::invalid_argument);
}

TEST(AdjointSwitch, ZeroStateGivesZeroSwitch) {
  auto s = small(0.1);
  auto sw = adjoint_switch(radial_control(RadialField(s.grid)), s);
  for (double v : sw.p[0].field.values) EXPECT_EQ(v, 0.0);
  for (double v : sw.radial_psi().values) EXPECT_EQ(v, 0.0);
}

TEST(AdjointSwitch, BallSwitchRadialDecreasing) {
  auto s = small(0.0, 128, 128);
  auto psi = adjoint_switch(ball_control(s.grid), s).radial_psi();
  EXPECT_EQ(psi.values.back(), 0.0);
  for (int j = 0; j + 1 < psi.size(); ++j) EXPECT_GT(psi[j], psi[j + 1]);
}

TEST(AdjointSwitch, NondegenerateWithTerminalPenalty) {
  auto s = small(0.1, 128, 128);
  auto ref = compute_reference(s);
  EXPECT_GT(*std::min_element(ref.weight.begin(), ref.weight.end()), 0.0);
  // at eps = 0 the switch vanishes at T
  auto s0 = small(0.0, 128, 128);
  auto r0 = compute_reference(s0);
  EXPECT_LT(r0.weight.back(), 0.1 * r0.weight.front());
}

TEST(Gateaux, ZeroDirection) {
  auto s = small(0.1);
  EXPECT_EQ(gateaux(ball_control(s.grid), radial_control(RadialField(s.grid)), s), 0.0);
}

TEST(Gateaux, MovingMassOffTheBallLoses) {
  auto s = small(0.0, 128, 128);
  auto h = combine(1.0, annulus_control(0.05 * s.spec.V0, s.spec, s.grid), -1.0,
                   ball_control(s.grid));
  EXPECT_LT(gateaux(ball_control(s.grid), h, s), 0.0);
}

TEST(Gateaux, RejectsMassfulDirection) {
  auto s = small();
  EXPECT_THROW(gateaux(ball_control(s.grid), radial_control(RadialField(s.grid, 0.1)), s),
               std::invalid_argument);
}

TEST(Gateaux, MatchesCentralDifference) {
  auto s = small(0.1);
  s.u0 = parabolic_initial_state(s.grid, 0.3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto f = random_smooth(seed, s);
    auto h = combine(1.0, random_smooth(seed + 100, s), -1.0, f);
    const double G = gateaux(f, h, s);
    const double step = 1e-4;
    const double fd = (evaluate_jt_eps(combine(1.0, f, step, h), s) -
                       evaluate_jt_eps(combine(1.0, f, -step, h), s)) /
                      (2 * step);
    EXPECT_NEAR(fd, G, 1e-9 * std::abs(G) + 1e-14);
  }
}

TEST(QuadraticExpansion, ExactOnRandomPairs) {
  auto s = small(0.1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto f = random_smooth(seed, s);
    auto h = combine(1.0, random_smooth(seed + 50, s), -1.0, f);
    auto c = quadratic_expansion_check(f, h, s);
    EXPECT_LT(c.relative, 1e-10);
    EXPECT_GT(c.curvature, 0.0);
  }
}

TEST(QuadraticExpansion, ModalAndTimeDependentDirections) {
  auto s = small(0.1, 64, 32);
  auto fstar = ball_control(s.grid);
  SampleRequest req;
  req.kind = SampleKind::moving_ball;
  req.K = 6;
  auto g = sample_random_admissible(4, req, s.spec, s.grid, s.tgrid);
  auto h = combine(1.0, g, -1.0, fstar);
  auto c = quadratic_expansion_check(fstar, h, s);
  EXPECT_LT(c.relative, 1e-10);
  EXPECT_GT(c.curvature, 0.0);
  auto zero = quadratic_expansion_check(fstar, radial_control(RadialField(s.grid)), s);
  EXPECT_EQ(zero.residual, 0.0);
}

TEST(DeficitTi, AnnulusAndShiftedBall) {
  auto s = small(0.0, 128, 128);
  auto ref = compute_reference(s);
  auto r = deficit_ti(annulus_control(0.05 * s.spec.V0, s.spec, s.grid), s, &ref);
  EXPECT_GT(r.ratio, 0.0);
  EXPECT_NEAR(r.delta, 0.05 * s.spec.V0, 1e-12);
  auto b = deficit_ti(shifted_ball_control(0.05, 0.0, s.spec, s.grid, 16), s, &ref);
  EXPECT_GT(b.ratio, 0.0);
  EXPECT_NEAR(b.delta, disk_symmetric_difference(0.5, 0.5, 0.05), 1e-10);
  EXPECT_THROW(deficit_ti(ball_control(s.grid), s, &ref), std::invalid_argument);
  EXPECT_THROW(deficit_ti(ball_control(s.grid), small(0.1)), std::invalid_argument);
}

TEST(DeficitTd, OscillatingAnnulus) {
  auto s = small(0.1, 128, 128);
  auto ref = compute_reference(s);
  for (int m : {1, 2, 4}) {
    SampleRequest req;
    req.kind = SampleKind::oscillating_annulus;
    req.delta0 = 0.05 * s.spec.V0;
    req.m = m;
    auto f = sample_random_admissible(1, req, s.spec, s.grid, s.tgrid);
    auto r = deficit_td(f, s, &ref);
    EXPECT_GT(r.ratio, 0.0) << m;
    EXPECT_GT(r.weight_min, 0.0);
  }
  EXPECT_THROW(deficit_td(ball_control(s.grid), s, &ref), std::invalid_argument);
  EXPECT_THROW(deficit_td(ball_control(s.grid), small(0.0)), std::invalid_argument);
}

TEST(DeficitReport, CsvAndJson) {
  DeficitReport r;
  r.id = "7";
  r.family = "annulus";
  r.params = "delta=0.1,m=2";
  r.ratio = 0.1;
  const auto row = r.csv_row();
  EXPECT_EQ(row.rfind("7,annulus,\"delta=0.1,m=2\",", 0), 0u);
  EXPECT_NE(row.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(r.to_json(small()).find("setup_hash"), std::string::npos);
}
