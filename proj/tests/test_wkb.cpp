#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pphi2/schrodinger/jost.hpp"
#include "pphi2/schrodinger/wkb.hpp"

using namespace pphi2;

namespace {
const cplx I(0, 1);
const auto kNegTail = builtin_potential("PowerTail", {1, 1.5, -1});
const auto kPosTail = builtin_potential("PowerTail", {1, 1.5, 1});
}  // namespace

TEST(Wkb, Conjugation) {
  const auto g = Grid::uniform(-10, 10, 81);
  for (auto side : {Side::Plus, Side::Minus}) {
    const auto a = wkb_solve(kNegTail, 0.5, side, 0.1, g);
    const auto b = wkb_solve(kNegTail, -0.5, side, 0.1, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_LT(std::abs(a.eta[i] - std::conj(b.eta[i])), 1e-10 * (1 + std::abs(a.eta[i])));
      EXPECT_LT(std::abs(a.theta[i] - std::conj(b.theta[i])), 1e-10 * (1 + std::abs(a.theta[i])));
    }
  }
}

TEST(Wkb, RepresentationIdentity) {
  const auto g = Grid::uniform(-60, 60, 241);
  for (auto side : {Side::Plus, Side::Minus}) {
    const auto sol = wkb_solve(kNegTail, 0.7, side, 0.2, g);
    const double s = side_sign(side);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!sol.in_volterra[i]) continue;
      ++covered;
      const cplx rep = std::exp(-s * sol.S[i]) / std::sqrt(sol.F[i]) * (sol.u1[i] + sol.u2[i]);
      EXPECT_LT(std::abs(rep - sol.eta[i]), 1e-8 * std::abs(sol.eta[i]));
    }
    EXPECT_GT(covered, 10u);
  }
}

TEST(Wkb, ResidualAndRk4Oracle) {
  const auto g = Grid::uniform(-20, 20, 4001);
  const double k = 0.5;
  const auto sol = wkb_solve(kNegTail, k, Side::Plus, 0.1, g);
  EXPECT_LT(eigen_residual(kNegTail, k * k, g, sol.eta), 1e-6);
  // independent RK4 from WKB data at the far end of the grid down to x = 0
  const std::size_t far = g.size() - 1, zero = g.nearest(0.0);
  const auto [y, dy] = oracle::rk4(kNegTail.V, k * k, g[far], 0.0, sol.eta[far], sol.eta_prime[far], 200000);
  EXPECT_LT(std::abs(y - sol.eta[zero]), 1e-8 * std::abs(y));
  EXPECT_LT(std::abs(dy - sol.eta_prime[zero]), 1e-8 * std::abs(dy));
}

TEST(Wkb, EtaBounds) {
  const auto g = Grid::uniform(0, 200, 401);
  const double eps = 0.2;
  double C = 0;
  for (double k : {0.2, 0.5, 1.0, 4.0, 20.0}) {
    const auto sol = wkb_solve(kNegTail, k, Side::Plus, eps, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < sol.R) continue;
      C = std::max({C, std::abs(sol.eta[i]) * std::sqrt(k), std::abs(sol.eta_prime[i]) / std::sqrt(k)});
    }
  }
  EXPECT_LT(C, 3.0);
}

TEST(Wkb, ErrorsAndProfiles) {
  const auto g = Grid::uniform(-5, 5, 11);
  EXPECT_THROW(wkb_solve(kNegTail, 0.05, Side::Plus, 0.1, g), Error);
  EXPECT_THROW(wkb_solve(builtin_potential("Gaussian", {-1, 1}), 1.0, Side::Plus, 0.1, g), Error);
  WkbOptions force;
  force.force = true;
  EXPECT_NO_THROW(wkb_solve(builtin_potential("Gaussian", {-1, 1}), 1.0, Side::Plus, 0.1, g, force));
}

TEST(WkbScattering, NormalizationAndUnitarity) {
  const std::vector<double> ks{0.01, 0.1, 0.5, 2, 10, 50};
  for (const auto* V : {&kNegTail, &kPosTail}) {
    const auto sd = wkb_scattering(*V, ks, 0.01);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      EXPECT_LT(sd.normalization_defect[j], 1e-6) << ks[j];
      EXPECT_LT(sd.relative_unitarity_defect(j), 1e-10) << ks[j];
      // the absolute defect is resolvable only while |m|^2 stays within double precision range of 1
      if (std::norm(sd.m[j]) < 1e6) {
        EXPECT_LT(sd.unitarity_defect(j), 1e-6) << ks[j];
      }
      EXPECT_GE(std::abs(sd.m[j]), 1 - 1e-9);
    }
    EXPECT_NEAR(std::abs(sd.w.back()) / (2 * 50), 1.0, 1e-2);
  }
}

TEST(WkbScattering, LongRangeTailsAndOverflow) {
  const std::vector<double> ks{0.001, 0.01, 0.5, 50};
  const auto sd = wkb_scattering(builtin_potential("PowerTail", {0.5, 1, -1}), ks, 0.001);
  for (std::size_t j = 0; j < ks.size(); ++j) EXPECT_LT(sd.unitarity_defect(j), 1e-6) << ks[j];
  EXPECT_THROW(wkb_scattering(builtin_potential("PowerTail", {0.5, 1, 1}), ks, 0.001), Error);
}

TEST(WkbScattering, AgreesWithJostForQuickDecay) {
  const auto V = builtin_potential("Gaussian", {-1, 0.8});
  std::vector<double> ks;
  for (double k = 0.5; k <= 5.0001; k += 0.5) ks.push_back(k);
  WkbOptions force;
  force.force = true;
  const auto a = wkb_scattering(V, ks, 0.5, force);
  const auto b = scattering_data(V, ks);
  for (std::size_t j = 0; j < ks.size(); ++j) EXPECT_NEAR(std::abs(a.m[j]), std::abs(b.m[j]), 1e-3);
}

TEST(WkbResonance, PositiveTailGenericIsStable) {
  const auto g = Grid::uniform(-50, 50, 201);
  const auto r1 = wkb_resonance(kPosTail, g);
  WkbResonanceOptions o;
  o.wkb.x_far_scale = 2;
  const auto r2 = wkb_resonance(kPosTail, g, o);
  EXPECT_FALSE(r1.is_resonance);
  EXPECT_LT(std::abs(r1.m0 - r2.m0), 1e-4 * std::abs(r1.m0));
}

TEST(WkbResonance, NegativeTailWronskianConstant) {
  const auto g = Grid::uniform(-50, 50, 201);
  const auto r = wkb_resonance(kNegTail, g);
  EXPECT_LT(r.spread, 1e-8);
}

TEST(WkbResonance, AmplitudeSweepFlips) {
  const auto g = Grid::uniform(-50, 50, 201);
  auto make = [](double A) {
    ReducedPotential V = kPosTail;
    const auto v = kPosTail.V, dv = kPosTail.dV, d2v = kPosTail.d2V;
    V.V = [=](double x) { return v(x) - A * std::exp(-x * x); };
    V.dV = [=](double x) { return dv(x) + 2 * A * x * std::exp(-x * x); };
    V.d2V = [=](double x) { return d2v(x) + A * (2 - 4 * x * x) * std::exp(-x * x); };
    return V;
  };
  auto w = [&](double A) { return wkb_resonance(make(A), g).m0.real(); };
  double lo = 1, hi = 3;
  ASSERT_LT(w(lo) * w(hi), 0);
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (w(lo) * w(mid) <= 0 ? hi : lo) = mid;
  }
  EXPECT_TRUE(wkb_resonance(make(0.5 * (lo + hi)), g).is_resonance);
  EXPECT_FALSE(wkb_resonance(make(lo * 0.9), g).is_resonance);
}
