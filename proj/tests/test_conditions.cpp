#include <gtest/gtest.h>

#include <cmath>

#include "pphi2/schrodinger/conditions.hpp"
#include "pphi2/schrodinger/resonance.hpp"

using namespace pphi2;

TEST(Weight, Kinds) {
  EXPECT_EQ(WeightFunction::one()(7), 1.0);
  EXPECT_NEAR(WeightFunction::power(0.6)(3), std::pow(10.0, 0.3), 1e-14);
  EXPECT_NEAR(WeightFunction::mu_quarter(2)(1), std::pow(2.0, 0.25), 1e-14);
  const auto w = WeightFunction::windowed(2);
  EXPECT_EQ(w(1.5), 1.0);
  EXPECT_TRUE(std::isinf(w(2.5)));
  EXPECT_EQ(w.inverse(2.5), 0.0);
  EXPECT_THROW(WeightFunction::power(-1), Error);
}

TEST(LineIntegral, ConvergenceByTailSlope) {
  const auto a = integrate_line([](double x) { return std::exp(-x * x); });
  EXPECT_TRUE(a.converged);
  EXPECT_NEAR(a.value, std::sqrt(M_PI), 1e-9);
  const auto b = integrate_line([](double x) { return 1 / (1 + x * x); });
  EXPECT_TRUE(b.converged);
  EXPECT_NEAR(b.value, M_PI, 1e-6);
  EXPECT_FALSE(integrate_line([](double x) { return std::pow(1 + x * x, -0.3); }).converged);
  EXPECT_FALSE(integrate_line([](double x) { return 1 / japanese(x); }).converged);
}

TEST(Bm1, EmptyOneAndWeighted) {
  const auto x = Grid::uniform(-40, 40, 8001);
  const auto e = check_bm1({}, x, WeightFunction::one());
  EXPECT_EQ(e.sum, 0.0);
  EXPECT_TRUE(e.pass);
  const auto V = builtin_potential("SquareWell", {20, 1});
  const auto bs = bound_states(V, x, 1.0);
  ASSERT_EQ(bs.size(), 3u);
  const auto one = check_bm1(bs, x, WeightFunction::one());
  const auto w = check_bm1(bs, x, WeightFunction::power(0.6));
  EXPECT_TRUE(one.pass);
  EXPECT_TRUE(w.pass);
  EXPECT_LE(w.sum, one.sum);
  for (std::size_t l = 0; l < bs.size(); ++l) EXPECT_LE(w.summands[l], one.summands[l]);
}

TEST(Bm1, DeepWellTenStates) {
  const auto x = Grid::uniform(-20, 20, 16001);
  const auto bs = bound_states(builtin_potential("SquareWell", {230, 1}), x, 1.0);
  ASSERT_EQ(bs.size(), 10u);
  const auto one = check_bm1(bs, x, WeightFunction::one());
  const auto w = check_bm1(bs, x, WeightFunction::power(0.6));
  EXPECT_TRUE(w.pass);
  EXPECT_LE(w.sum, one.sum);
}

TEST(Bm2, QuickDecayNonResonantPasses) {
  const auto x = Grid::uniform(-30, 30, 3001);
  const auto kg = MomentumGrid::geometric(1e-4, 10, 40);
  const auto V = builtin_potential("Gaussian", {-1, 1});
  ASSERT_FALSE(detect_resonance(V).is_resonance);
  const auto b = symmetrize_real(eigenbasis(V, 1.0, x, kg));
  const auto r = check_bm2(b, WeightFunction::one(), 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.alpha_fit, 0.0);  // psi vanishes linearly at k = 0 without a resonance
  EXPECT_TRUE(r.caveats.empty());
}

TEST(Bm2, ResonantSupIsMeasured) {
  // -2 sech^2 x has a zero-energy resonance; the fitted exponent is reported, whatever it is
  const auto x = Grid::uniform(-30, 30, 3001);
  const auto kg = MomentumGrid::geometric(1e-4, 10, 40);
  const auto V = builtin_potential("PoschlTeller", {2, 1});
  const auto b = symmetrize_real(eigenbasis(V, 1.0, x, kg));
  const auto r = check_bm2(b, WeightFunction::one(), 0.45);
  EXPECT_TRUE(std::isfinite(r.alpha_fit));
  EXPECT_TRUE(std::isfinite(r.C));
  EXPECT_GT(r.sup.front(), 0.5);  // |psi| stays of order one at small k
}

TEST(Bm2, SlowNegativeTailWithQuarterWeight) {
  const auto x = Grid::uniform(-30, 30, 601);
  const auto kg = MomentumGrid::geometric(0.05, 5, 12);
  const auto V = builtin_potential("PowerTail", {1, 1.5, -1});
  EigenbasisOptions o;
  o.eps = 0.05;
  o.include_bound = false;  // an attractive tail with mu < 2 has infinitely many levels
  const auto b = eigenbasis(V, 1.0, x, kg, o);
  const auto r = check_bm2(b, WeightFunction::mu_quarter(1.5), 0.0);
  EXPECT_TRUE(r.pass) << r.alpha_fit;
  EXPECT_FALSE(r.caveats.empty());
}

TEST(Bm2, RejectsBadAlpha) {
  const auto x = Grid::uniform(-5, 5, 101);
  const auto b = eigenbasis(builtin_potential("Zero", {}), 1.0, x, MomentumGrid::geometric(1e-3, 1, 10));
  EXPECT_THROW(check_bm2(b, WeightFunction::one(), 0.5), Error);
}

TEST(Bm3, CompactCouplingPassesEverything) {
  auto g = [](double x) { return std::abs(x) < 1 ? std::pow(1 - x * x, 3) : 0.0; };
  const auto P = WickPolynomial::monomial(4, g);
  const auto r = check_bm3(P, WeightFunction::power(3));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.table.size(), 4u * 5u / 2u);
  EXPECT_TRUE(check_bm3(P, WeightFunction::windowed(2)).pass);
  EXPECT_THROW(check_bm3(P, WeightFunction::windowed(0.5)), Error);
}

TEST(Bm3, GaussianMomentsDecreaseWithAlpha) {
  auto P = WickPolynomial::monomial(4, [](double x) { return std::exp(-x * x); });
  for (auto& a : P.a) a = [](double) { return 1.0; };
  const auto lo = check_bm3(P, WeightFunction::power(0.5));
  const auto hi = check_bm3(P, WeightFunction::power(1.5));
  ASSERT_TRUE(lo.pass && hi.pass);
  for (std::size_t i = 0; i < lo.table.size(); ++i) {
    const auto& e = lo.table[i];
    if (e.s == 0) {
      EXPECT_NEAR(e.l2, hi.table[i].l2, 1e-9);
      continue;
    }
    EXPECT_LT(e.l2, hi.table[i].l2);
    EXPECT_LT(e.l1, hi.table[i].l1);
  }
  // s = 0, p = 0: int g^2 = sqrt(pi/2)
  EXPECT_NEAR(lo.table[0].l2, std::sqrt(M_PI / 2), 1e-9);
}

TEST(Bm3, SlowCouplingTailFails) {
  auto P = WickPolynomial::monomial(4, [](double x) { return std::pow(japanese(x), -0.6); });
  for (auto& a : P.a) a = [](double) { return 1.0; };
  const auto r = check_bm3(P, WeightFunction::power(2));
  EXPECT_FALSE(r.pass);
  for (const auto& e : r.table)
    if (e.p == 3 && e.s == 3) {
      EXPECT_FALSE(e.l1_finite);
    }
}
