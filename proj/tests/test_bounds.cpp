#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chui/bounds.hpp"

using namespace chui;

namespace {

constexpr double pi = std::numbers::pi;

TEST(WeightStats, UnitWeights) {
  const std::vector<double> w(5, 1.0);
  const auto s = weight_stats(w, 2);
  EXPECT_EQ(s.A, 5.0);
  EXPECT_EQ(s.B, 5.0);
  EXPECT_EQ(s.G, 5.0);
  EXPECT_EQ(s.ratio_lower, 1.0);
  EXPECT_EQ(s.ratio_upper, 1.0);
  EXPECT_THROW(weight_stats(std::vector<double>{1.0, -1.0}, 2), InputError);
}

TEST(WeightStats, ThreeDimensionalExponents) {
  const std::vector<double> w{1.0, 8.0};
  const auto s = weight_stats(w, 3);
  EXPECT_NEAR(s.G, 1.0 + 4.0, 1e-13);
  EXPECT_NEAR(s.ratio_lower, (1.0 + std::pow(8.0, 5.0 / 3)) / 5.0, 1e-12);
}

TEST(Constants, ProofConstant) {
  EXPECT_NEAR(BoundConstants::proof_c(2), pi / 128, 1e-16);
  EXPECT_NEAR(BoundConstants::proof_c(3), 4 * pi / 3 / 256, 1e-16);
  EXPECT_NEAR(BoundConstants::newman_c, 0.17453292519943295, 1e-16);
}

TEST(LowerBound, Examples) {
  EXPECT_NEAR(lower_bound_rhs(std::vector<double>(4, 1.0), 2, pi / 18), 0.17453292519943295, 1e-15);
  EXPECT_NEAR(lower_bound_rhs(std::vector<double>{1.0, 2.0}, 2, pi / 128), 5 * pi / 384, 1e-15);
  for (int d : {2, 3, 4}) EXPECT_NEAR(lower_bound_rhs(std::vector<double>(3, 2.5), d, 0.7), 0.7 * 2.5, 1e-14);
  EXPECT_THROW(lower_bound_rhs(std::vector<double>{1.0, 0.0}, 2, 1.0), InputError);
}

TEST(LowerBound, SingleChargeConstant) {
  // With one charge the right-hand side is c * alpha.
  EXPECT_NEAR(lower_bound_rhs(std::vector<double>{3.0}, 2, 1.0), 3.0, 1e-14);
  EXPECT_THROW(lower_bound_rhs(std::vector<double>{1.0}, 2, 0.0), InputError);
}

TEST(Verdicts, ThreeSigmaRule) {
  EXPECT_EQ(compare_le(1.0, 2.0, 0.1), Verdict::holds);
  EXPECT_EQ(compare_le(2.0, 1.0, 0.1), Verdict::violated);
  EXPECT_EQ(compare_le(1.0, 1.1, 0.1), Verdict::inconclusive);
  EXPECT_EQ(compare_le(1.2, 1.0, 0.1), Verdict::inconclusive);
}

TEST(ProofGeometry, RadiiAndMembership) {
  const auto c = uniform_circle_config(4);
  const ProofGeometry g(c);
  // r = 1 / (16 * 4)
  EXPECT_NEAR(g.radius(0), 1.0 / 64, 1e-16);
  const std::vector<double> deep{1.0 - 2 * g.radius(0) + 1e-9, 0.0};
  EXPECT_TRUE(g.contains(0, deep));
  EXPECT_FALSE(g.contains(1, deep));
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_TRUE(g.members(origin).empty());
  EXPECT_FALSE(g.select(origin).has_value());
  EXPECT_THROW(ProofGeometry(ChargeConfiguration(2, {0.5, 0.0}, {1.0})), InputError);
}

TEST(ProofGeometry, RadiiAreSmall) {
  for (int d : {2, 3}) {
    const auto c = random_config(9, d, 3, false).with_weights({0.1, 10, 1, 2, 3, 0.5, 7, 0.2, 4});
    const ProofGeometry g(c);
    for (double r : g.radii()) EXPECT_LE(r, std::ldexp(1.0, -(d + 2)));
  }
}

TEST(ProofGeometry, SelectionMinimizesScore) {
  const auto c = random_config(12, 2, 8, false).with_weights({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  // Cluster the charges so tangent balls overlap.
  std::vector<double> pos;
  for (int k = 0; k < 12; ++k) {
    pos.push_back(std::cos(0.002 * k));
    pos.push_back(std::sin(0.002 * k));
  }
  const ChargeConfiguration close(2, pos, std::vector<double>(c.weights().begin(), c.weights().end()));
  const ProofGeometry g(close);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t multi = 0;
  for (int i = 0; i < 20000; ++i) {
    const std::vector<double> x{1.0 - 0.02 * std::abs(u(gen)), 0.02 * u(gen)};
    const auto m = g.members(x);
    if (m.empty()) continue;
    multi += m.size() > 1;
    const auto k = *g.select(x);
    EXPECT_TRUE(g.contains(k, x));
    for (std::size_t j : m) {
      const double sj = std::pow(detail::distance(close.position(j), x), 2) / g.radius(j);
      const double sk = std::pow(detail::distance(close.position(k), x), 2) / g.radius(k);
      EXPECT_TRUE(sk < sj || (sk == sj && k <= j));
    }
  }
  EXPECT_GT(multi, 100u);
}

TEST(ProofGeometry, SelectionTieBreaksToLowestIndex) {
  // Two coincident charges: identical balls, identical scores.
  const ChargeConfiguration c(2, {1.0, 0.0, 1.0, 0.0}, {1.0, 1.0});
  const ProofGeometry g(c);
  const std::vector<double> x{1.0 - g.radius(0), 0.0};
  ASSERT_EQ(g.members(x).size(), 2u);
  EXPECT_EQ(*g.select(x), 0u);
}

TEST(Lemma1, ZeroAtOriginSide) {
  // x = 0: <y, 0> term vanishes and the gap is 1/2 for every d.
  for (int d : {2, 3, 5}) {
    std::vector<double> y(d, 0.0), x(d, 0.0);
    y[0] = 1.0;
    EXPECT_NEAR(lemma1_gap(y, x, d), 0.5, 1e-15);
  }
}

TEST(Lemma1, ClosedFormOnTheAxis) {
  // x = t y: gap = t(1-t)/(1-t)^d + 1/(2(1-t)^{d-2}) = (1+t)/(2(1-t)^{d-1}).
  for (int d : {2, 3}) {
    std::vector<double> y(d, 0.0), x(d, 0.0);
    y[1] = 1.0;
    for (double t : {-0.9, -0.3, 0.2, 0.7}) {
      x[1] = t;
      EXPECT_NEAR(lemma1_gap(y, x, d), (1 + t) / (2 * std::pow(1 - t, d - 1)), 1e-12);
    }
  }
}

TEST(Lemma1, AntipodalLimit) {
  const std::vector<double> y{1.0, 0.0};
  for (double t : {0.1, 0.5, 0.99, 0.999999}) {
    const std::vector<double> x{-t, 0.0};
    EXPECT_NEAR(lemma1_gap(y, x, 2), -t / (1 + t) + 0.5, 1e-12);
  }
}

TEST(Lemma1, RandomFourDimensional) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 100000; ++i) {
    std::vector<double> y(4), x(4);
    double ny = 0, nx = 0;
    for (int a = 0; a < 4; ++a) {
      y[a] = n(gen);
      x[a] = n(gen);
      ny += y[a] * y[a];
      nx += x[a] * x[a];
    }
    const double rad = std::pow(u(gen), 0.25);
    for (int a = 0; a < 4; ++a) {
      y[a] /= std::sqrt(ny);
      x[a] *= rad / std::sqrt(nx);
    }
    EXPECT_GE(lemma1_gap(y, x, 4), -1e-12);
  }
}

TEST(Lemma1, Preconditions) {
  EXPECT_THROW(lemma1_gap(std::vector<double>{0.5, 0.0}, std::vector<double>{0.0, 0.0}, 2), InputError);
  EXPECT_THROW(lemma1_gap(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}, 2), InputError);
  EXPECT_THROW(lemma1_gap(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 0.0, 0.0}, 2), InputError);
}

TEST(Lemma2, SharpAtDeepestPoint) {
  // x = (1 - 2r) y: the lemma1 gap is (1 - r)/(2r) in the plane, so equality.
  const std::vector<double> y{0.0, 1.0};
  for (double r : {0.01, 0.2, 0.45}) {
    const std::vector<double> x{0.0, 1.0 - 2 * r};
    EXPECT_NEAR(lemma2_gap(y, x, r, 2), 0.0, 1e-12);
    const std::vector<double> inner{0.3 * r, 1.0 - r};
    EXPECT_GT(lemma2_gap(y, inner, r, 2), 0.0);
  }
  const std::vector<double> outside{0.0, 0.0};
  EXPECT_THROW(lemma2_gap(y, outside, 0.1, 2), InputError);
  EXPECT_THROW(lemma2_gap(y, std::vector<double>{0.0, 0.9}, 0.6, 2), InputError);
}

TEST(Lemma3, EqualRadiiOnBoundaryOfSecondBall) {
  // r1 = r2: the bound is 1. Take x inside B1 and on the sphere of B2.
  const double r = 0.3;
  const std::vector<double> y1{1.0, 0.0}, y2{std::cos(0.5), std::sin(0.5)};
  // Walk from the centre of B1 towards y2 until leaving B2's interior is reached.
  std::vector<double> x{(1 - r), 0.0};
  for (int i = 0; i < 200 && detail::tangent_ball_offset(y2, r, x) < r; ++i) x[1] -= 0.001;
  if (detail::tangent_ball_offset(y1, r, x) < r) EXPECT_LE(lemma3_ratio(y1, r, y2, r, x), 1e-12);
  EXPECT_THROW(lemma3_ratio(y1, r, y2, r, std::vector<double>{0.0, 0.0}), InputError);
}

TEST(Lemma3, RandomSamplesRespectBound) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const double a1 = 0.3 * u(gen), a2 = 0.3 * u(gen) + 0.1;
    const double r1 = 0.01 + 0.48 * u(gen), r2 = 0.01 + 0.48 * u(gen);
    const std::vector<double> y1{std::cos(a1), std::sin(a1)}, y2{std::cos(a2), std::sin(a2)};
    const double s = r1 * std::sqrt(u(gen)), t = 2 * pi * u(gen);
    const std::vector<double> x{(1 - r1) * y1[0] + s * std::cos(t), (1 - r1) * y1[1] + s * std::sin(t)};
    if (detail::tangent_ball_offset(y1, r1, x) >= r1 || detail::tangent_ball_offset(y2, r2, x) < r2) continue;
    ++checked;
    EXPECT_LE(lemma3_ratio(y1, r1, y2, r2, x), 1e-12);
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Estar, PlanarAndSingleChargeCases) {
  // d = 2: domination reads 2 G #E_x >= A / 2 with G = A.
  const auto c = uniform_circle_config(3).with_weights({1.0, 4.0, 0.5});
  const ProofGeometry g(c);
  const std::vector<double> x{1.0 - g.radius(0), 0.0};
  const auto e = estar_check(g, x);
  EXPECT_EQ(e.verdict, Verdict::holds);
  EXPECT_NEAR(e.domination_margin, (2 * 5.5 - 5.5 / 2) / (5.5 / 2), 1e-12);
  // n = 1: the per-pair inequality is 2^d >= 1.
  const ChargeConfiguration one(3, {0.0, 1.0, 0.0}, {2.0});
  const ProofGeometry g1(one);
  const auto e1 = estar_check(g1, std::vector<double>{0.0, 1.0 - g1.radius(0), 0.0});
  EXPECT_NEAR(e1.estar_margin, 1.0 - 1.0 / 8, 1e-15);
}

TEST(Estar, HoldsForRandomPointsInTangentBalls) {
  const ChargeConfiguration c(3, {0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, -0.6, 0.8}, {1.0, 5.0, 0.2});
  const ProofGeometry g(c);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 3000; ++i) {
    const std::size_t k = i % 3;
    std::vector<double> dir{n(gen), n(gen), n(gen)};
    const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    const double s = g.radius(k) * std::cbrt(u(gen));
    std::vector<double> x(3);
    for (int a = 0; a < 3; ++a) x[a] = (1 - g.radius(k)) * c.position(k)[a] + s * dir[a] / len;
    if (!g.contains(k, x)) continue;
    const auto e = estar_check(g, x);
    EXPECT_EQ(e.verdict, Verdict::holds);
    EXPECT_TRUE(g.contains(e.selected, x));
  }
  EXPECT_THROW(estar_check(g, std::vector<double>{0.0, 0.0, 0.0}), InputError);
}

TEST(ReductionBudget, SingleArcEqualsSingleChargeEnergy) {
  auto [cfg, part] = weighted_arc_config(std::vector<double>{1.0});
  QuadratureSpec s;
  s.rel_tolerance = 1e-6;
  const auto b = reduction_budget(part, cfg.weights(), s);
  EXPECT_NEAR(b.value, 4.0, 1e-5);
}

TEST(ReductionBudget, CachesByLength) {
  const std::vector<double> w{1.0, 1.0, 1.0, 1.0};
  auto [cfg, part] = weighted_arc_config(w);
  const auto b = reduction_budget(part, w);
  ASSERT_EQ(b.defects.size(), 4u);
  for (const auto& [l, d] : b.defects) EXPECT_EQ(d, b.defects[0].second);
  // (A / 2 pi) * 4 * (pi/2) * defect(pi/2) = 4 * defect(pi/2)
  EXPECT_NEAR(b.value, 4.0 * b.defects[0].second, 1e-12);
  EXPECT_THROW(reduction_budget(part, std::vector<double>{1.0}), InputError);
}

TEST(ReductionBudget, DominatesEnergy) {
  for (const auto& w : {std::vector<double>{1.0, 2.0, 4.0}, std::vector<double>{1.0, 1.0},
                        std::vector<double>{0.3, 5.0, 1.0, 1.0, 2.0}}) {
    auto [cfg, part] = weighted_arc_config(w);
    const auto e = chui_energy(cfg);
    const auto b = reduction_budget(part, w);
    EXPECT_LE(e.value, b.value + 3 * (e.error + b.error));
  }
}

TEST(Report, UniformEight) {
  const auto r = make_bound_report(uniform_circle_config(8));
  EXPECT_EQ(r.verdicts.at("newman_lower"), Verdict::holds);
  EXPECT_EQ(r.verdicts.at("theorem11_lower"), Verdict::holds);
  EXPECT_FALSE(r.any_violated());
  // Equal weights are a rotated weighted-arc layout.
  ASSERT_TRUE(r.upper_budget.has_value());
  EXPECT_EQ(r.verdicts.at("reduction_upper"), Verdict::holds);
}

TEST(Report, WeightedArcUpperHolds) {
  auto [cfg, part] = weighted_arc_config(std::vector<double>{1.0, 2.0, 4.0});
  const auto r = make_bound_report(cfg);
  EXPECT_EQ(r.verdicts.at("reduction_upper"), Verdict::holds);
  const auto j = to_json(r);
  for (const char* k : {"energy", "err", "A", "B", "G", "ratio_lower", "ratio_upper", "lower_newman",
                        "lower_theorem11", "upper_budget", "lemma41_lhs", "verdicts"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_TRUE(j["lower_newman"].is_null());
}

TEST(Report, SingleChargeSpatial) {
  const auto r = make_bound_report(ChargeConfiguration(3, {0.0, 0.0, 1.0}, {1.0}));
  EXPECT_EQ(r.verdicts.at("theorem11_lower"), Verdict::holds);
  EXPECT_EQ(r.verdicts.at("newman_lower"), Verdict::not_applicable);
  EXPECT_EQ(r.verdicts.at("reduction_upper"), Verdict::not_applicable);
}

TEST(Report, Lemma41OffCentre) {
  const auto r = make_bound_report(ChargeConfiguration(2, {0.5, 0.0}, {1.0}));
  EXPECT_NEAR(*r.lemma41_lhs, pi, 1e-15);
  EXPECT_EQ(r.verdicts.at("lemma41_lower"), Verdict::holds);
  EXPECT_NEAR(*lemma41_lhs(uniform_circle_config(5)), 0.0, 0.0);
  EXPECT_THROW(lemma41_lhs(fibonacci_sphere_config(2)), InputError);
}

TEST(Report, InteriorUnitCharges) {
  const auto r = make_bound_report(ChargeConfiguration(2, {0.0, 0.0}, {1.0}));
  ASSERT_TRUE(r.lemma41_lhs.has_value());
  EXPECT_NEAR(*r.lemma41_lhs, 2 * pi, 1e-15);
  // Equality case: within error either way.
  EXPECT_NE(r.verdicts.at("lemma41_lower"), Verdict::violated);
  EXPECT_EQ(r.verdicts.at("theorem11_lower"), Verdict::not_applicable);
  EXPECT_FALSE(lemma41_lhs(ChargeConfiguration(2, {0.0, 0.0}, {2.0})).has_value());
}

TEST(Report, SignedWeights) {
  const auto r = make_bound_report(ChargeConfiguration(2, {1.0, 0.0, -1.0, 0.0}, {1.0, -1.0}));
  EXPECT_FALSE(r.stats.has_value());
  EXPECT_FALSE(r.any_violated());
}

}  // namespace
