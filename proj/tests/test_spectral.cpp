#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pphi2/fock/fock.hpp"
#include "pphi2/spectral/probes.hpp"

using namespace pphi2;

namespace {

SparseOperator diagonal(const std::vector<double>& d) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < d.size(); ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), d[i]);
  return SparseOperator::from_triplets(d.size(), t, true);
}

SparseOperator random_symmetric(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < n; ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), 10 * u(rng));
  for (std::size_t e = 0; e < 4 * n; ++e) {
    const auto i = pick(rng), j = pick(rng);
    if (i == j) continue;
    const double v = u(rng);
    t.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    t.emplace_back(static_cast<int>(j), static_cast<int>(i), v);
  }
  return SparseOperator::from_triplets(n, t, true);
}

SpectrumOptions iterative() {
  SpectrumOptions o;
  o.dense_limit = 0;
  return o;
}

}  // namespace

TEST(LowSpectrum, Diagonal) {
  const auto r = low_spectrum(diagonal({3, 1, 0, 2}), 2);
  EXPECT_EQ(r.method, "dense");
  EXPECT_EQ(r.eigenvalues, (std::vector<double>{0, 1}));
}

TEST(LowSpectrum, FreeFieldMatchesEnumeration) {
  const FockBasis b({1, std::sqrt(2.0), std::sqrt(2.0), std::sqrt(5.0)}, 5);
  ASSERT_LE(b.size(), 500u);
  std::vector<double> e;
  for (std::size_t s = 0; s < b.size(); ++s) e.push_back(b.energy(s));
  std::sort(e.begin(), e.end());
  const auto r = low_spectrum(free_hamiltonian(b), b.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(r.eigenvalues[i], e[i], 1e-12);
}

TEST(LowSpectrum, LanczosAgreesWithDense) {
  const auto A = random_symmetric(700, 3);
  const auto d = low_spectrum(A, 6);
  const auto l = low_spectrum(A, 6, iterative());
  EXPECT_EQ(l.method, "iterative");
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(l.eigenvalues[i], d.eigenvalues[i], 1e-9);
    EXPECT_LT(l.residuals[i], 1e-8);
  }
}

TEST(LowSpectrum, LanczosFindsDegenerateCopies) {
  const FockBasis b({1, std::sqrt(2.0), std::sqrt(2.0), std::sqrt(5.0), std::sqrt(5.0)}, 3);
  const auto H = free_hamiltonian(b);
  const auto d = low_spectrum(H, 8);
  const auto l = low_spectrum(H, 8, iterative());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(l.eigenvalues[i], d.eigenvalues[i], 1e-9) << i;
}

TEST(LowSpectrum, QuarticSingleModeDenseOracle) {
  const FockBasis b({1.0}, 200);
  const std::vector<double> v{0.8};
  const auto H = free_hamiltonian(b) + wick_power(b, v, 4) * 0.5;
  const auto d = low_spectrum(H, 3);
  const auto l = low_spectrum(H, 3, iterative());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(l.eigenvalues[i], d.eigenvalues[i], 1e-10);
}

TEST(LowSpectrum, Deterministic) {
  const auto A = random_symmetric(900, 5);
  SpectrumOptions o = iterative();
  o.seed = 42;
  const auto a = low_spectrum(A, 4, o), b = low_spectrum(A, 4, o);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}

TEST(LowSpectrum, RejectsAsymmetric) {
  std::vector<Eigen::Triplet<double>> t{{0, 1, 1.0}};
  EXPECT_THROW(low_spectrum(SparseOperator::from_triplets(2, t, false), 1), Error);
}

TEST(ConjugateGradient, SolvesShiftedOperator) {
  const auto A = random_symmetric(300, 9);
  const double s = -gershgorin(A.m).first + 1;
  const MatVec op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A.m * v + s * v; };
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(300, -1, 1);
  const Eigen::VectorXd x = conjugate_gradient(op, b);
  EXPECT_LT((op(x) - b).norm(), 1e-9 * b.norm());
}

TEST(Hvz, FreeFieldBandsAndGap) {
  const LevelBuilder build = [](const RefinementLevel& lv) {
    std::vector<double> w;
    const auto jmax = static_cast<long>(std::floor(lv.kappa * lv.nu + 1e-9));
    for (long j = -jmax; j <= jmax; ++j) w.push_back(std::sqrt(1 + std::pow(j / lv.nu, 2)));
    return free_hamiltonian(FockBasis(w, lv.n_max, lv.e_max));
  };
  const auto r = hvz_probe(build, {{1, 1.5, 2, 2.6}, {2, 1.5, 2, 2.6}, {4, 1.5, 2, 2.6}}, 1.0);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.E1 - row.E0, 1.0);
    EXPECT_TRUE(row.discrete.empty());
  }
  EXPECT_EQ(r.rows[0].band_count, 3u);
  EXPECT_EQ(r.rows[1].band_count, 5u);
  EXPECT_EQ(r.rows[2].band_count, 9u);
  EXPECT_TRUE(r.pass());
}

TEST(HigherOrder, FreeFieldRatio) {
  const std::vector<double> w{1, std::sqrt(2.0), std::sqrt(2.0)};
  auto build = [&](int n) {
    const FockBasis b(w, n);
    return TruncatedModel{free_hamiltonian(b), number_operator(b), 1.0};
  };
  const auto r = higher_order_probe(build, {4, 8, 12}, {1});
  for (const auto& row : r.rows) {
    const FockBasis b(w, row.n_max);
    double want = 0;
    for (std::size_t s = 0; s < b.size(); ++s) want = std::max(want, b.number(s) / (b.energy(s) + 1));
    EXPECT_NEAR(row.norm, want, 1e-12);
    EXPECT_LE(row.norm, 1.0 + 1e-9);
  }
  EXPECT_TRUE(r.pass);
}

TEST(HigherOrder, IterativeMatchesDense) {
  const FockBasis b({1.0, 1.3}, 20);
  const std::vector<double> v{0.5, 0.4};
  const auto H = free_hamiltonian(b) + wick_power(b, v, 4) * 0.3;
  const double e0 = low_spectrum(H, 1).eigenvalues[0];
  const TruncatedModel m{H, number_operator(b), e0 < 0 ? 1 - e0 : 1.0};
  const Eigen::VectorXd n = m.N.m.diagonal();
  const Eigen::VectorXd n2 = n.cwiseProduct(n);
  SpectrumOptions it = iterative();
  it.seed = 1;
  EXPECT_NEAR(detail::resolvent_norm(m, n2, 2, Eigen::VectorXd::Ones(n.size()), {}),
              detail::resolvent_norm(m, n2, 2, Eigen::VectorXd::Ones(n.size()), it), 1e-8);
}
