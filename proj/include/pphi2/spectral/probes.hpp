#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "pphi2/core/error.hpp"
#include "pphi2/fock/sparse.hpp"
#include "pphi2/spectral/lanczos.hpp"

namespace pphi2 {

struct RefinementLevel {
  double nu = 1, kappa = 1;
  int n_max = 2;
  double e_max = std::numeric_limits<double>::infinity();
};

struct HvzRow {
  RefinementLevel level;
  std::size_t dim = 0;
  double E0 = 0, E1 = 0;
  std::size_t band_count = 0;    // eigenvalues in [E0 + m, E0 + m + delta]
  std::vector<double> discrete;  // eigenvalues in (E0, E0 + m), relative to E0
};

struct HvzReport {
  std::vector<HvzRow> rows;
  std::vector<double> band_ratios;  // count ratio between consecutive levels
  double discrete_shift = 0;        // largest move of a below-threshold eigenvalue between levels
  bool band_pass = true, discrete_pass = true, ground_pass = true;
  bool pass() const { return band_pass && discrete_pass && ground_pass; }
};

using LevelBuilder = std::function<SparseOperator(const RefinementLevel&)>;

// Band filling above E0 + m as nu doubles, and stability of the discrete spectrum below it.
inline HvzReport hvz_probe(const LevelBuilder& build, const std::vector<RefinementLevel>& levels, double m_inf,
                           double delta = -1, const SpectrumOptions& sopt = {}, double ratio_lo = 1.6,
                           double ratio_hi = 2.4, double shift_tol = 1e-3) {
  if (!(m_inf > 0)) throw validation_error("BadParams", "m_inf must be positive", "m_inf");
  if (levels.size() < 2) throw validation_error("BadParams", "need at least two refinement levels", "probes.levels");
  if (delta < 0) delta = 0.5 * m_inf;
  constexpr double edge = 1e-9;
  HvzReport r;
  for (const auto& lv : levels) {
    const auto H = build(lv);
    const auto s = spectrum_below(H, H.dim() ? low_spectrum(H, 1, sopt).eigenvalues[0] + m_inf + delta + 10 * edge : 0, sopt);
    HvzRow row;
    row.level = lv;
    row.dim = H.dim();
    row.E0 = s.eigenvalues[0];
    row.E1 = s.eigenvalues.size() > 1 ? s.eigenvalues[1] : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) {
      const double e = s.eigenvalues[i] - row.E0;
      if (e < -edge) r.ground_pass = false;
      // the threshold is resolved only to shift_tol; states that close to it belong to the band
      if (e > edge && e < m_inf - shift_tol) row.discrete.push_back(e);
      if (e >= m_inf - shift_tol && e <= m_inf + delta + edge) ++row.band_count;
    }
    r.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1];
    const auto& b = r.rows[i];
    const double ratio = a.band_count ? double(b.band_count) / double(a.band_count) : std::numeric_limits<double>::infinity();
    r.band_ratios.push_back(ratio);
    if (std::abs(b.level.nu - 2 * a.level.nu) < 1e-12 && !(ratio >= ratio_lo && ratio <= ratio_hi)) r.band_pass = false;
    if (a.discrete.size() != b.discrete.size()) {
      r.discrete_pass = false;
      r.discrete_shift = std::numeric_limits<double>::infinity();
      continue;
    }
    for (std::size_t j = 0; j < a.discrete.size(); ++j)
      r.discrete_shift = std::max(r.discrete_shift, std::abs(a.discrete[j] - b.discrete[j]));
  }
  if (r.discrete_shift >= shift_tol) r.discrete_pass = false;
  return r;
}

struct TruncatedModel {
  SparseOperator H, N;  // Hamiltonian and number operator on one truncation
  double b = 1;         // H + b >= 1
};

struct HoeRow {
  int n_max = 0;
  std::size_t dim = 0;
  double b = 1;
  double alpha = 1;
  double norm = 0;   // ||N^alpha (H+b)^-alpha||
  double mixed = 0;  // ||N^alpha (H+b)^-1 (N+1)^(1-alpha)||
};

struct HoeReport {
  std::vector<HoeRow> rows;
  std::vector<double> alphas;
  std::vector<double> spread, mixed_spread;  // max / min over the schedule per alpha
  bool pass = true;
};

namespace detail {

// largest singular value of D1 (H+b)^-alpha D2 for diagonal D1, D2
inline double resolvent_norm(const TruncatedModel& m, const Eigen::VectorXd& d1, int alpha, const Eigen::VectorXd& d2,
                             const SpectrumOptions& sopt) {
  const auto n = static_cast<Eigen::Index>(m.H.dim());
  if (m.H.dim() <= sopt.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.H.dense());
    const Eigen::VectorXd lam = (es.eigenvalues().array() + m.b).pow(-double(alpha)).matrix();
    const Eigen::MatrixXd R = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd B = d1.asDiagonal() * R * d2.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bt(B.transpose() * B, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, bt.eigenvalues()(n - 1)));
  }
  const MatVec shifted = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return parallel_apply(m.H.m, v) + m.b * v; };
  auto resolve = [&](Eigen::VectorXd v) {
    for (int a = 0; a < alpha; ++a) v = conjugate_gradient(shifted, v, 1e-10);
    return v;
  };
  // -B^T B, lowest eigenvalue
  const MatVec neg = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd Bv = d1.cwiseProduct(resolve(d2.cwiseProduct(v)));
    return -d2.cwiseProduct(resolve(d1.cwiseProduct(Bv)));
  };
  const auto s = lanczos_lowest(neg, m.H.dim(), 1, sopt);
  return std::sqrt(std::max(0.0, -s.eigenvalues[0]));
}

}  // namespace detail

// ||N^alpha (H+b)^-alpha|| and ||N^alpha (H+b)^-1 (N+1)^(1-alpha)|| over a truncation schedule
inline HoeReport higher_order_probe(const std::function<TruncatedModel(int)>& build, const std::vector<int>& schedule,
                                    const std::vector<int>& alphas = {1, 2}, double plateau = 1.25,
                                    const SpectrumOptions& sopt = {}) {
  if (schedule.size() < 2) throw validation_error("BadParams", "need at least two truncations", "probes.hoe_n_max");
  for (int a : alphas)
    if (a < 1 || a > 2) throw validation_error("BadParams", "alpha must be 1 or 2", "probes.alphas");
  HoeReport r;
  for (int a : alphas) r.alphas.push_back(a);
  for (int nm : schedule) {
    const auto m = build(nm);
    if (m.H.dim() != m.N.dim()) throw validation_error("BadParams", "H and N have different dimensions");
    const Eigen::VectorXd n = m.N.m.diagonal();
    for (int a : alphas) {
      HoeRow row;
      row.n_max = nm;
      row.dim = m.H.dim();
      row.b = m.b;
      row.alpha = a;
      const Eigen::VectorXd na = n.array().pow(double(a)).matrix();
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(n.size());
      row.norm = detail::resolvent_norm(m, na, a, one, sopt);
      const Eigen::VectorXd tail = (n.array() + 1).pow(1.0 - a).matrix();
      row.mixed = detail::resolvent_norm(m, na, 1, tail, sopt);
      r.rows.push_back(row);
    }
  }
  for (int a : alphas) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0, mlo = lo, mhi = 0;
    for (const auto& row : r.rows)
      if (row.alpha == a) {
        lo = std::min(lo, row.norm), hi = std::max(hi, row.norm);
        mlo = std::min(mlo, row.mixed), mhi = std::max(mhi, row.mixed);
      }
    r.spread.push_back(hi / lo);
    r.mixed_spread.push_back(mhi / mlo);
    r.pass = r.pass && hi / lo < plateau && mhi / mlo < plateau;
  }
  return r;
}

}  // namespace pphi2
