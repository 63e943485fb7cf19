#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pphi2/schrodinger/jost.hpp"
#include "pphi2/schrodinger/resonance.hpp"

using namespace pphi2;

namespace {
const cplx I(0, 1);
}

TEST(Propagator, MatchesRk4) {
  const auto V = builtin_potential("Gaussian", {-1.5, 0.7});
  MagnusPropagator prop(V.V, cplx(0.8, 0.1));
  const auto s = prop.advance({1.0, 0.3, 0}, -2, 3);
  const auto [y, dy] = oracle::rk4(V.V, cplx(0.8, 0.1), -2, 3, 1.0, 0.3, 20000);
  EXPECT_LT(std::abs(s.y * std::exp(s.log_scale) - y), 1e-9);
  EXPECT_LT(std::abs(s.dy * std::exp(s.log_scale) - dy), 1e-9);
}

TEST(Propagator, ConservesWronskianAcrossBreakpoints) {
  const auto V = builtin_potential("SquareWell", {3, 1});
  MagnusPropagator prop(V.V, 0.5, V.breakpoints);
  const OdeState f{1.0, 0.0, 0}, g{0.0, 1.0, 0};
  const auto F = prop.advance(f, -4, 4), G = prop.advance(g, -4, 4);
  EXPECT_NEAR(std::abs(wronskian(F, G) * std::exp(F.log_scale + G.log_scale) - wronskian(f, g)), 0, 1e-12);
}

TEST(Jost, FreeCaseIsPlaneWave) {
  const auto V = builtin_potential("Zero", {});
  const auto grid = Grid::uniform(-5, 5, 41);
  for (double k : {-2.0, 0.3, 1.0}) {
    const auto p = jost_solve(V, k, Side::Plus, grid);
    const auto m = jost_solve(V, k, Side::Minus, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_LT(std::abs(p.theta[i] - std::exp(I * k * grid[i])), 1e-12);
      EXPECT_LT(std::abs(m.theta[i] - std::exp(-I * k * grid[i])), 1e-12);
    }
  }
}

TEST(Jost, SquareWellTransmission) {
  const double V0 = 3, a = 1;
  const auto V = builtin_potential("SquareWell", {V0, a});
  const std::vector<double> ks{0.05, 0.3, 1.0, 2.5, 7.0};
  const auto sd = scattering_data(V, ks);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    EXPECT_NEAR(1.0 / std::norm(sd.m[j]), oracle::square_well_transmission(V0, a, ks[j]), 1e-6) << ks[j];
    EXPECT_LT(sd.unitarity_defect(j), 1e-8);
    EXPECT_LT(sd.wronskian_spread[j], 1e-10);
  }
}

TEST(Jost, ConjugationSymmetry) {
  const auto V = builtin_potential("Gaussian", {-2, 1});
  const auto grid = Grid::uniform(-6, 6, 61);
  for (auto side : {Side::Plus, Side::Minus}) {
    const auto a = jost_solve(V, 1.3, side, grid), b = jost_solve(V, -1.3, side, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LT(std::abs(a.theta[i] - std::conj(b.theta[i])), 1e-10);
  }
}

TEST(Jost, UnitarityOnGaussianAndSmallK) {
  const auto V = builtin_potential("Gaussian", {-1, 0.8});
  const std::vector<double> ks{1e-3, 1e-2, 0.5, 3};
  const auto sd = scattering_data(V, ks);
  for (std::size_t j = 0; j < ks.size(); ++j) EXPECT_LT(sd.unitarity_defect(j), 1e-8) << ks[j];
}

TEST(Jost, ResidualAndPicardBound) {
  const auto V = builtin_potential("Gaussian", {-1, 0.8});
  const auto grid = Grid::uniform(-8, 8, 1601);
  for (double k : {0.5, 2.0}) {
    const auto sol = jost_solve(V, k, Side::Plus, grid);
    EXPECT_LT(eigen_residual(V, k * k, grid, sol.theta), 1e-6);
    EXPECT_LE(sol.picard_defect, sol.picard_bound + 1e-10);
  }
}

TEST(Jost, SquareWellResidualSkipsBreakpoints) {
  const auto V = builtin_potential("SquareWell", {2, 1});
  const auto grid = Grid::uniform(-4, 4, 801);
  const auto sol = jost_solve(V, 1.0, Side::Minus, grid);
  EXPECT_LT(eigen_residual(V, 1.0, grid, sol.theta), 1e-6);
}

TEST(Jost, SlowProfileRejected) {
  const auto V = builtin_potential("PowerTail", {1, 1.5, 1});
  EXPECT_THROW(scattering_data(V, {1.0}), Error);
}

TEST(Resonance, FreeAndReflectionless) {
  EXPECT_TRUE(detect_resonance(builtin_potential("Zero", {})).is_resonance);
  // -l(l+1) sech^2 x with integer l has a threshold resonance
  EXPECT_TRUE(detect_resonance(builtin_potential("PoschlTeller", {2, 1})).is_resonance);
  EXPECT_FALSE(detect_resonance(builtin_potential("PoschlTeller", {1, 1})).is_resonance);
  EXPECT_FALSE(detect_resonance(builtin_potential("Gaussian", {-1, 1})).is_resonance);
}

TEST(Resonance, SquareWellThreshold) {
  // a new bound state appears when 2 a sqrt(V0) = n pi
  const double a = 1, V0 = std::pow(M_PI / 2, 2);
  EXPECT_TRUE(detect_resonance(builtin_potential("SquareWell", {V0, a})).is_resonance);
  EXPECT_FALSE(detect_resonance(builtin_potential("SquareWell", {0.8 * V0, a})).is_resonance);
  // the zero-energy Wronskian changes sign across the threshold
  const auto lo = zero_energy_wronskian(builtin_potential("SquareWell", {0.95 * V0, a}));
  const auto hi = zero_energy_wronskian(builtin_potential("SquareWell", {1.05 * V0, a}));
  EXPECT_LT(lo.real() * hi.real(), 0);
}

TEST(Resonance, ZeroWronskianMatchesClosedForm) {
  // theta+(x,0) = 1 for x > a
  const double V0 = 1.7, a = 0.9, q = std::sqrt(V0);
  // theta+ = cos(q(x - a)) inside; at x = -a: u = cos(2qa), u' = q sin(2qa); theta- = 1 outside left
  // W(theta+, theta-) at x = -a: theta+' theta- - theta+ theta-' = q sin(2qa)
  const auto W = zero_energy_wronskian(builtin_potential("SquareWell", {V0, a}));
  EXPECT_NEAR(W.real(), q * std::sin(2 * q * a), 1e-7);
  EXPECT_NEAR(W.imag(), 0, 1e-12);
}
