#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pphi2/schrodinger/bound_states.hpp"

using namespace pphi2;

namespace {

double inner(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  return trapezoid(g, p);
}

void expect_orthonormal(const Grid& g, const std::vector<BoundState>& bs) {
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (std::size_t j = 0; j < bs.size(); ++j)
      EXPECT_NEAR(inner(g, bs[i].psi, bs[j].psi), i == j ? 1.0 : 0.0, 1e-8) << i << "," << j;
}

}  // namespace

TEST(BoundStates, FreeHasNone) {
  EXPECT_TRUE(bound_states(builtin_potential("Zero", {}), Grid::uniform(-20, 20, 801), 1).empty());
}

TEST(BoundStates, PoschlTellerSingleLevel) {
  const auto V = builtin_potential("PoschlTeller", {2, 1});
  const auto g = Grid::uniform(-25, 25, 5001);
  const auto bs = bound_states(V, g, 1.5);
  ASSERT_EQ(bs.size(), 1u);
  EXPECT_NEAR(bs[0].lambda, -1, 1e-6);
  EXPECT_NEAR(bs[0].epsilon, 1.25, 1e-6);
  EXPECT_LT(bound_state_residual(V, g, bs[0]), 1e-6);
  // exact eigenfunction sech(x)/sqrt(2)
  for (std::size_t i = 0; i < g.size(); i += 250) EXPECT_NEAR(bs[0].psi[i], 1 / (std::sqrt(2.0) * std::cosh(g[i])), 1e-7);
}

TEST(BoundStates, SquareWellMatchesOracle) {
  const double a = 1;
  for (double V0 : {0.5, 2.0, 3.0, 8.0, 25.0}) {
    const auto V = builtin_potential("SquareWell", {V0, a});
    const auto g = Grid::uniform(-80, 80, 32001);
    const auto bs = bound_states(V, g, 1);
    const auto ref = oracle::square_well_levels(V0, a);
    ASSERT_EQ(bs.size(), ref.size()) << V0;
    EXPECT_EQ(static_cast<int>(bs.size()), oracle::square_well_count(V0, a));
    for (std::size_t j = 0; j < bs.size(); ++j) {
      EXPECT_NEAR(bs[j].lambda, ref[j], 1e-8) << V0 << " level " << j;
      EXPECT_LT(bound_state_residual(V, g, bs[j]), 1e-6);
    }
    expect_orthonormal(g, bs);
  }
}

TEST(BoundStates, SignConvention) {
  const auto g = Grid::uniform(-30, 30, 3001);
  for (const auto& b : bound_states(builtin_potential("SquareWell", {8, 1}), g, 1)) {
    std::size_t imax = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(b.psi[i]) > std::abs(b.psi[imax]) * (1 + 1e-12)) imax = i;
    EXPECT_GT(b.psi[imax], 0);
  }
}

TEST(BoundStates, GaussianOrthonormal) {
  const auto V = builtin_potential("Gaussian", {-6, 1.5});
  const auto g = Grid::uniform(-40, 40, 8001);
  const auto bs = bound_states(V, g, 1);
  ASSERT_GE(bs.size(), 2u);
  expect_orthonormal(g, bs);
  for (const auto& b : bs) EXPECT_LT(bound_state_residual(V, g, b), 1e-6);
}

TEST(BoundStates, GridTooNarrow) {
  const auto V = builtin_potential("SquareWell", {1, 1});
  try {
    bound_states(V, Grid::uniform(-3, 3, 601), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "GridTooNarrow");
  }
}
