#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "pphi2/potential.hpp"

using namespace pphi2;

namespace {

MetricSpec metric(Sampler a, Sampler c, double m) {
  MetricSpec s;
  s.a = std::move(a);
  s.c = std::move(c);
  s.m_inf = m;
  return s;
}

// lowest Dirichlet eigenvalue of -(d/dy) a (d/dy) + c on [lo, hi], n interior nodes
double lowest_fd(const Sampler& a, const Sampler& c, double lo, double hi, int n) {
  const double h = (hi - lo) / (n + 1);
  Eigen::VectorXd d(n), e(n - 1);
  for (int i = 0; i < n; ++i) {
    const double y = lo + h * (i + 1);
    const double ap = a(y + h / 2), am = a(y - h / 2);
    d(i) = (ap + am) / (h * h) + c(y);
    if (i + 1 < n) e(i) = -ap / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double richardson(const std::function<double(int)>& f, int n) {
  return (4 * f(2 * n + 1) - f(n)) / 3;
}

}  // namespace

TEST(Liouville, UnitMetricIsIdentityOnC) {
  const double m = 1.3;
  auto spec = metric([](double) { return 1.0; }, [m](double x) { return m * m + std::exp(-x * x); }, m);
  const auto grid = Grid::uniform(-8, 8, 401);
  const auto V = liouville_reduce(spec, grid);
  for (double x : grid.x) {
    EXPECT_EQ(V(x), spec.c(x) - m * m);
    EXPECT_EQ(V.map.psi(x), x);
  }
  EXPECT_EQ(V.profile, SignProfile::QuickDecay);
}

TEST(Liouville, ConstantMetricIsDilation) {
  auto spec = metric([](double) { return 4.0; }, [](double) { return 1.0; }, 1.0);
  const auto V = liouville_reduce(spec, Grid::uniform(-5, 5, 101));
  for (double x : {-3.0, -0.5, 0.0, 2.0}) {
    EXPECT_DOUBLE_EQ(V.map.phi(x), x / 2);
    EXPECT_DOUBLE_EQ(V.map.psi(x), 2 * x);
    EXPECT_EQ(V(x), 0.0);
  }
}

TEST(Liouville, PhiAndPsiAreInverse) {
  auto spec = metric([](double x) { return 1 + 0.5 * std::exp(-x * x); }, [](double) { return 1.0; }, 1.0);
  const auto grid = Grid::uniform(-10, 10, 201);
  const auto V = liouville_reduce(spec, grid);
  for (double x : grid.x) {
    EXPECT_LT(std::abs(V.map.psi(V.map.phi(x)) - x), 1e-10);
    EXPECT_LT(std::abs(V.map.phi(V.map.psi(x)) - x), 1e-10);
  }
}

TEST(Liouville, TransferIsUnitary) {
  auto spec = metric([](double x) { return 1 + 0.5 * std::exp(-x * x); }, [](double) { return 1.0; }, 1.0);
  const auto V = liouville_reduce(spec, Grid::uniform(-10, 10, 201));
  auto u = [](double y) { return std::exp(-(y - 0.3) * (y - 0.3)) * (1 + y); };
  const double n0 = integrate_adaptive([&](double y) { return u(y) * u(y); }, -12, 12, 1e-14);
  const double n1 = integrate_adaptive(
      [&](double x) {
        const double t = u(V.map.psi(x));
        return V.map.psi_prime(x) * t * t;
      },
      V.map.phi(-12), V.map.phi(12), 1e-14);
  EXPECT_NEAR(n1, n0, 1e-8);
}

TEST(Liouville, SpectrumMatchesOriginalForm) {
  const double m = 1.0;
  const Sampler a = [](double x) { return 1 + 0.5 * std::exp(-x * x); };
  const Sampler c = [m](double) { return m * m; };
  auto spec = metric(a, c, m);
  const auto V = liouville_reduce(spec, Grid::uniform(-10, 10, 201));
  const double L = 8;
  const double e_orig = richardson([&](int n) { return lowest_fd(a, c, -L, L, n); }, 1999);
  const Sampler one = [](double) { return 1.0; };
  const Sampler ct = [&](double x) { return V(x) + m * m; };
  const double e_red =
      richardson([&](int n) { return lowest_fd(one, ct, V.map.phi(-L), V.map.phi(L), n); }, 1999);
  EXPECT_NEAR(e_orig, e_red, 1e-6);
}

TEST(Liouville, Errors) {
  const auto grid = Grid::uniform(-3, 3, 31);
  EXPECT_THROW(liouville_reduce(metric([](double x) { return x; }, [](double) { return 1.0; }, 1), grid), Error);
  EXPECT_THROW(liouville_reduce(metric([](double) { return 1.0; }, [](double x) { return -1 + x * 0; }, 1), grid),
               Error);
  auto spec = metric([](double x) { return 2 + std::sin(x); }, [](double) { return 1.0; }, 1);
  spec.da = [](double) { return std::nan(""); };
  try {
    liouville_reduce(spec, grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DerivativeUnavailable");
  }
  try {
    liouville_reduce(metric([](double x) { return x; }, [](double) { return 1.0; }, 1), grid);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "NonPositiveMetric");
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
}

TEST(Builtin, Families) {
  const auto z = builtin_potential("Zero", {});
  EXPECT_EQ(z(3.0), 0.0);
  const auto sw = builtin_potential("SquareWell", {2, 1});
  EXPECT_EQ(sw(0.5), -2);
  EXPECT_EQ(sw(1.0), -2);
  EXPECT_EQ(sw(1.01), 0);
  EXPECT_EQ(sw.profile, SignProfile::QuickDecay);
  const auto pt = builtin_potential("PowerTail", {1, 1.5, 1});
  EXPECT_NEAR(pt(1e4) / std::pow(1e4, -1.5), 1, 1e-7);
  EXPECT_EQ(pt.profile, SignProfile::SlowPositive);
  EXPECT_EQ(builtin_potential("PowerTail", {1, 1.5, -1}).profile, SignProfile::SlowNegative);
  EXPECT_EQ(builtin_potential("PowerTail", {1, 3, -1}).profile, SignProfile::QuickDecay);
  for (const auto& V : {pt, builtin_potential("Gaussian", {-1.5, 0.7}), builtin_potential("PoschlTeller", {2, 1.3})})
    for (double x : {-2.0, 0.1, 1.7}) {
      EXPECT_NEAR(V.dV(x), fd_first(V.V, x), 1e-8);
      EXPECT_NEAR(V.d2V(x), fd_second(V.V, x), 1e-5);
    }
}

TEST(Builtin, Errors) {
  EXPECT_THROW(builtin_potential("Morse", {}), Error);
  EXPECT_THROW(builtin_potential("SquareWell", {2, -1}), Error);
  EXPECT_THROW(builtin_potential("Gaussian", {1}), Error);
  EXPECT_THROW(builtin_potential("PowerTail", {1, 1.5, 0.5}), Error);
}

TEST(DecayFit, RecoversExponentAndSign) {
  const auto grid = Grid::uniform(-400, 400, 801);
  const auto pt = builtin_potential("PowerTail", {1, 1.5, -1});
  const auto fit = fit_decay(pt.V, grid);
  EXPECT_NEAR(fit.mu, 1.5, 0.15);
  EXPECT_EQ(fit.profile, SignProfile::SlowNegative);
  EXPECT_EQ(fit_decay(builtin_potential("Gaussian", {1, 1}).V, grid).profile, SignProfile::QuickDecay);
  EXPECT_EQ(fit_decay([](double x) { return std::sin(x) / (1 + std::abs(x)); }, grid).profile,
            SignProfile::Indefinite);
}

TEST(DecayFit, ReducedPotentialKeepsSourceExponent) {
  const double m = 1;
  auto spec = metric([](double) { return 1.0; }, [m](double x) { return m * m + std::pow(1 + x * x, -0.75); }, m);
  const auto grid = Grid::uniform(-400, 400, 801);
  const auto V = liouville_reduce(spec, grid);
  const auto [mu_a, mu_c] = fit_metric_decay(spec, grid);
  EXPECT_TRUE(std::isinf(mu_a));
  EXPECT_NEAR(V.mu, mu_c, 0.1 * mu_c);
  EXPECT_EQ(V.profile, SignProfile::SlowPositive);
}
