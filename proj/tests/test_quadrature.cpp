#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "chui/gauss_kronrod.hpp"
#include "chui/quadrature.hpp"
#include "oracles.hpp"

using namespace chui;

namespace {

constexpr double pi = std::numbers::pi;

QuadratureSpec tol(double rel) {
  QuadratureSpec s;
  s.rel_tolerance = rel;
  return s;
}

TEST(GaussKronrod, SmoothAndEndpointSingular) {
  quad::Options o;
  o.rel_tol = 1e-12;
  auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0, o);
  EXPECT_NEAR(r.value, std::exp(1.0) - 1.0, 1e-13);
  EXPECT_TRUE(r.converged);
  auto s = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, o);
  EXPECT_NEAR(s.value, 2.0, 1e-9);
  auto l = quad::integrate([](double x) { return std::log(std::abs(x - 0.3)); }, 0.0, 1.0, o);
  const double exact = 0.7 * std::log(0.7) - 0.7 + 0.3 * std::log(0.3) - 0.3;
  EXPECT_NEAR(l.value, exact, 1e-9);
}

TEST(Energy, SingleChargePlanar) {
  const auto r = chui_energy(ChargeConfiguration(2, {0.0, 1.0}, {1.0}), tol(1e-6));
  EXPECT_NEAR(r.value, oracle::single_charge(2), 1e-5);
  EXPECT_NEAR(oracle::single_charge(2), 4.0, 1e-12);
  EXPECT_LE(std::abs(r.value - 4.0), 3 * r.error + 1e-12);
}

TEST(Energy, SingleChargeSpatial) {
  const auto r = chui_energy(ChargeConfiguration(3, {0.0, 1.0, 0.0}, {1.0}), tol(1e-3));
  EXPECT_NEAR(oracle::single_charge(3), 2 * pi, 1e-12);
  EXPECT_NEAR(r.value, 2 * pi, 1e-2 * 2 * pi);
  EXPECT_TRUE(r.stochastic);
  EXPECT_LE(std::abs(r.value - 2 * pi), 4 * r.error);
}

TEST(Energy, SingleChargeFourDimensions) {
  const auto r = chui_energy(ChargeConfiguration(4, {0.0, 0.0, 0.0, 1.0}, {1.0}), tol(3e-3));
  const double exact = oracle::single_charge(4);
  EXPECT_NEAR(exact, 8 * pi / 3, 1e-12);
  EXPECT_LE(std::abs(r.value - exact), 4 * r.error);
}

TEST(Energy, CentrePoleGivesTwoPi) {
  const auto r = chui_energy(ChargeConfiguration(2, {0.0, 0.0}, {1.0}), tol(1e-6));
  EXPECT_NEAR(r.value, 2 * pi, 1e-6);
}

TEST(Energy, UniformCircleMatchesEllipticOracle) {
  for (int n : {1, 2, 3, 5, 8, 16, 32}) {
    const double exact = oracle::uniform_circle(n);
    const auto r = chui_energy(uniform_circle_config(n), tol(1e-6));
    EXPECT_TRUE(r.converged) << n;
    EXPECT_NEAR(r.value, exact, 2e-6 * exact) << n;
    EXPECT_LE(std::abs(r.value - exact), 3 * r.error + 1e-12) << n;
  }
}

TEST(Energy, InteriorAndSignedChargesMatchMonteCarlo) {
  const std::vector<std::complex<double>> z{{0.5, 0.1}, {-0.3, 0.7}, {0.0, -1.0}};
  const std::vector<double> a{1.0, -2.0, 0.5};
  const auto r = chui_energy(ChargeConfiguration::planar(z, a), tol(1e-5));
  const auto mc = oracle::planar_mc(z, a, 4'000'000, 3);
  EXPECT_NEAR(r.value, mc.value, 1e-2 * mc.value);
}

TEST(Energy, ScalesLinearlyInWeights) {
  const ChargeConfiguration c(2, {1.0, 0.0, 0.0, 1.0, 0.3, 0.3}, {1.0, 2.0, -0.5});
  const auto e1 = chui_energy(c);
  for (double lambda : {0.5, 2.0, 10.0, -2.5}) {
    const auto e = chui_energy(c.scaled_weights(lambda));
    EXPECT_NEAR(e.value, std::abs(lambda) * e1.value, 2 * (e.error + std::abs(lambda) * e1.error)) << lambda;
  }
  const auto s1 = chui_energy(fibonacci_sphere_config(3));
  const auto s2 = chui_energy(fibonacci_sphere_config(3).scaled_weights(2.0));
  EXPECT_NEAR(s2.value, 2 * s1.value, 2 * (s2.error + 2 * s1.error));
}

TEST(Energy, PoleRadiusHalvingIsConsistent) {
  const auto c = uniform_circle_config(4);
  QuadratureSpec a, b;
  a.pole_radius = 0.1;
  b.pole_radius = 0.05;
  const auto ea = chui_energy(c, a), eb = chui_energy(c, b);
  EXPECT_LT(std::abs(ea.value - eb.value), ea.error + eb.error);
  const auto f = fibonacci_sphere_config(4);
  const auto fa = chui_energy(f, a), fb = chui_energy(f, b);
  EXPECT_LT(std::abs(fa.value - fb.value), 3 * (fa.error + fb.error));
}

TEST(Energy, OffCentrePoleAgainstMonteCarlo) {
  const std::vector<std::complex<double>> z{{0.5, 0.0}};
  const std::vector<double> a{1.0};
  const auto r = chui_energy(ChargeConfiguration::planar(z, a), tol(1e-5));
  const auto mc = oracle::planar_mc(z, a, 4'000'000, 11);
  EXPECT_NEAR(r.value, mc.value, 1e-2 * mc.value);
  EXPECT_GE(r.value, pi);
}

TEST(Energy, RotationInvariant) {
  const std::vector<double> w{1.0, 2.0, 0.5};
  const auto a = chui_energy(angles_config(std::vector<double>{0.1, 1.7, 3.0}, w), tol(1e-6));
  const auto b = chui_energy(angles_config(std::vector<double>{0.1 + 0.8, 1.7 + 0.8, 3.0 + 0.8}, w), tol(1e-6));
  EXPECT_NEAR(a.value, b.value, 3 * (a.error + b.error));
}

TEST(Energy, CoincidentChargesMerge) {
  const ChargeConfiguration twice(2, {1.0, 0.0, 1.0, 0.0}, {1.0, 1.0});
  EXPECT_NEAR(chui_energy(twice, tol(1e-6)).value, 8.0, 1e-4);
  const ChargeConfiguration cancel(2, {1.0, 0.0, 1.0, 0.0}, {1.0, -1.0});
  const auto z = chui_energy(cancel);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(z.method, "identically-zero");
}

TEST(Energy, TriangleInequality) {
  const auto a = uniform_circle_config(2);
  const ChargeConfiguration b(2, {0.0, 1.0, 0.2, 0.2}, {0.5, -1.0});
  const auto ea = chui_energy(a, tol(1e-6)).value;
  const auto eb = chui_energy(b, tol(1e-6)).value;
  const auto eab = chui_energy(merge(a, b), tol(1e-6)).value;
  EXPECT_LE(eab, ea + eb + 1e-4);
}

TEST(Energy, SphereConfigurationAgainstMonteCarlo) {
  // Plain Monte Carlo in the ball for four unit charges.
  const auto c = fibonacci_sphere_config(4);
  const auto r = chui_energy(c, tol(2e-3));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double s = 0.0;
  std::size_t taken = 0;
  while (taken < 2'000'000) {
    const double x[3] = {u(gen), u(gen), u(gen)};
    if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] >= 1.0) continue;
    double f[3] = {0, 0, 0};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto p = c.position(k);
      const double d[3] = {p[0] - x[0], p[1] - x[1], p[2] - x[2]};
      const double r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
      const double s3 = 1.0 / (r2 * std::sqrt(r2));
      for (int i = 0; i < 3; ++i) f[i] += d[i] * s3;
    }
    s += std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
    ++taken;
  }
  const double mc = s / taken * 4.0 * pi / 3.0;
  EXPECT_NEAR(r.value, mc, 2e-2 * mc);
}

TEST(Energy, DeterministicAcrossThreadCounts) {
  QuadratureSpec a = tol(2e-3), b = tol(2e-3);
  b.threads = 3;
  const auto c = fibonacci_sphere_config(5);
  const auto ra = chui_energy(c, a);
  const auto rb = chui_energy(c, b);
  EXPECT_EQ(ra.value, rb.value);
  EXPECT_EQ(ra.error, rb.error);
  const auto pa = chui_energy(uniform_circle_config(7), a);
  const auto pb = chui_energy(uniform_circle_config(7), b);
  EXPECT_EQ(pa.value, pb.value);
}

TEST(Energy, SeedChangesStochasticEstimateOnly) {
  QuadratureSpec a = tol(2e-3), b = tol(2e-3);
  b.seed = 99;
  const auto c = fibonacci_sphere_config(3);
  const auto ra = chui_energy(c, a);
  const auto rb = chui_energy(c, b);
  EXPECT_NE(ra.value, rb.value);
  EXPECT_NEAR(ra.value, rb.value, 4 * (ra.error + rb.error));
}

TEST(Energy, ExplicitMethods) {
  QuadratureSpec s = tol(5e-3);
  s.method = QuadratureMethod::monte_carlo;
  const auto r = chui_energy(ChargeConfiguration(3, {0.0, 0.0, 1.0}, {1.0}), s);
  EXPECT_EQ(r.method, "monte-carlo");
  EXPECT_LE(std::abs(r.value - 2 * pi), 4 * r.error);
  s.method = QuadratureMethod::polar_adaptive;
  EXPECT_THROW(chui_energy(ChargeConfiguration(3, {0.0, 0.0, 1.0}, {1.0}), s), InputError);
}

TEST(Energy, SpecValidation) {
  QuadratureSpec s;
  s.rel_tolerance = 0.0;
  EXPECT_THROW(chui_energy(uniform_circle_config(1), s), InputError);
  s = QuadratureSpec{};
  s.pole_radius = -1.0;
  EXPECT_THROW(chui_energy(uniform_circle_config(1), s), InputError);
}

TEST(Energy, NonConvergenceIsReported) {
  QuadratureSpec s = tol(1e-9);
  s.max_evals = 1000;
  const auto r = chui_energy(uniform_circle_config(5), s);
  EXPECT_FALSE(r.converged);
}

TEST(Defect, FullCircleIsFour) {
  const auto d = l1_defect(2 * pi, tol(1e-6));
  EXPECT_NEAR(d.total.value, 4.0, 1e-5);
}

TEST(Defect, RotatedArcGivesSameValue) {
  const auto a = l1_defect(0.7, tol(1e-6));
  const Arc arc{2.0, 2.7};
  const auto b = l1_defect(std::polar(1.0, 2.35), arc, tol(1e-6));
  EXPECT_NEAR(a.total.value, b.total.value, 1e-5);
  EXPECT_THROW(l1_defect(std::polar(1.0, 2.0), arc), InputError);
}

TEST(Defect, QuarterArcBelowFullCircle) {
  const auto q = l1_defect(pi / 2, tol(1e-5));
  EXPECT_GT(q.total.value, 0.0);
  EXPECT_LT(q.total.value, 4.0);
  EXPECT_NEAR(q.near + q.far, q.total.value, 1e-12);
}

TEST(Defect, SmallArcsScaleLinearly) {
  const auto a = l1_defect(2 * pi / 256, tol(1e-5));
  const auto b = l1_defect(2 * pi / 512, tol(1e-5));
  const double ra = a.total.value / (2 * pi / 256), rb = b.total.value / (2 * pi / 512);
  EXPECT_NEAR(ra, rb, 0.02 * ra);
}

TEST(TwoPole, MatchesRadialOracle) {
  for (double delta : {0.5, 0.25, 1.0 / 64}) {
    SCOPED_TRACE(delta);
    const auto b = std::polar(1.0, delta);
    const auto r = two_pole_l1(1.0, b, tol(1e-6));
    const double exact = oracle::two_pole(1.0, b);
    EXPECT_NEAR(r.value, exact, 1e-5 * exact) << delta;
  }
}

TEST(TwoPole, BoundaryAndCentre) {
  const auto r = two_pole_l1(1.0, 0.0, tol(1e-6));
  const double exact = oracle::two_pole(1.0, 0.0);
  EXPECT_NEAR(r.value, exact, 1e-5 * exact);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(TwoPole, Preconditions) {
  EXPECT_THROW(two_pole_l1(1.0, 1.0), InputError);
  EXPECT_THROW(two_pole_l1(1.0, -1.5), InputError);
}

}  // namespace
