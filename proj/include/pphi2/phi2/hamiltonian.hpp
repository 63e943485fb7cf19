#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/core/fit.hpp"
#include "pphi2/fock/fock.hpp"
#include "pphi2/phi2/interaction.hpp"
#include "pphi2/spectral/lanczos.hpp"

namespace pphi2 {

struct HamiltonianBundle {
  SparseOperator H0, V, H;
  double b = 1;  // H + b >= 1
  double ground_energy = 0;
  std::vector<double> ground_multiplet;  // eigenvalues within 1e-10 of the ground energy
  std::string provenance;
};

inline double shift_from_ground(double e0) { return e0 < 0 ? 1 - e0 : 1.0; }

inline HamiltonianBundle assemble_hamiltonian(const ModeSet& modes, const FockBasis& fock, const SparseOperator& V,
                                              const SpectrumOptions& sopt = {}, std::string provenance = {}) {
  if (fock.modes() != modes.size() || V.dim() != fock.size())
    throw validation_error("BadParams", "mode set, Fock basis and interaction do not match", "modes");
  HamiltonianBundle h;
  h.H0 = free_hamiltonian(fock);
  h.V = V;
  h.H = h.H0 + V;
  h.H.symmetric = true;
  h.provenance = std::move(provenance);
  const auto spec = low_spectrum(h.H, std::min<std::size_t>(8, fock.size()), sopt);
  h.ground_energy = spec.eigenvalues.front();
  for (double e : spec.eigenvalues)
    if (e - h.ground_energy <= 1e-10) h.ground_multiplet.push_back(e);
  h.b = shift_from_ground(h.ground_energy);
  return h;
}

struct LowerBoundRow {
  double kappa = 0;
  double min_eig = 0;
  std::size_t effective_modes = 0;
  std::size_t dim = 0;
};

struct LowerBoundReport {
  int n = 1;  // degree / 2
  std::vector<LowerBoundRow> rows;
  double D2 = 0, D3 = 0, residual = 0;              // -min_eig ~ D2 + D3 (ln kappa)^n
  double lin_D2 = 0, lin_D3 = 0, lin_residual = 0;  // -min_eig ~ D2 + D3 ln kappa
  double exponent = 0, exponent_residual = 0;       // best beta in -min_eig ~ D2 + D3 (ln kappa)^beta
  bool power_beats_linear = false;
};

namespace detail {

inline double fit_residual(const std::vector<double>& t, const std::vector<double>& y, double& a, double& b) {
  const auto f = fit_line(t, y);
  a = f.intercept;
  b = f.slope;
  double r = 0;
  for (std::size_t i = 0; i < t.size(); ++i) r += std::pow(y[i] - a - b * t[i], 2);
  return r;
}

}  // namespace detail

// min eig V_kappa on {N <= n_max} for a family of kernel tables at increasing kappa
inline LowerBoundReport lower_bound_probe(const WickPolynomial& P, const std::vector<KernelTable>& tables, int n_max,
                                          const SpectrumOptions& sopt = {}) {
  P.validate();
  if (tables.size() < 3) throw validation_error("BadParams", "need at least three cutoffs", "probes.kappas");
  LowerBoundReport r;
  r.n = P.degree / 2;
  InteractionOptions iopt;
  iopt.check_quadrature = false;
  for (const auto& t : tables) {
    if (!(t.modes.kappa > 1)) throw validation_error("BadParams", "cutoffs must exceed 1 so that ln kappa > 0", "probes.kappas");
    const auto e = effective_table(t);
    const FockBasis fock(std::vector<double>(e.modes.size(), 1.0), n_max);
    const auto V = assemble_interaction(P, e, fock, iopt);
    const auto s = low_spectrum(V.V, 1, sopt);
    r.rows.push_back({t.modes.kappa, s.eigenvalues.front(), e.modes.size(), fock.size()});
  }
  std::vector<double> y, l, ln;
  for (const auto& row : r.rows) {
    y.push_back(-row.min_eig);
    l.push_back(std::log(row.kappa));
    ln.push_back(std::pow(std::log(row.kappa), r.n));
  }
  r.residual = detail::fit_residual(ln, y, r.D2, r.D3);
  r.lin_residual = detail::fit_residual(l, y, r.lin_D2, r.lin_D3);
  r.power_beats_linear = r.residual < r.lin_residual;
  r.exponent_residual = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 400; ++j) {
    const double beta = 0.1 + 0.01 * j;
    std::vector<double> t;
    for (double v : l) t.push_back(std::pow(v, beta));
    double a, b;
    const double res = detail::fit_residual(t, y, a, b);
    if (res < r.exponent_residual) r.exponent_residual = res, r.exponent = beta;
  }
  return r;
}

struct PerturbationLevel {
  int n_max = 0;
  std::size_t dim = 0;
  double ground_energy = 0;
  double C = 0;  // smallest C >= 0 with H - E0 +- V_Q + C >= 0
};

struct PerturbationReport {
  std::vector<PerturbationLevel> levels;
  double C = 0;
  bool stable = false;  // last two levels within 20%
};

// +-V_Q <= H - E0 + C on each truncation; C is the exact threshold from the lowest eigenvalue of each sign
inline PerturbationReport perturbation_bound_probe(const WickPolynomial& P, const WickPolynomial& Q, const KernelTable& t,
                                                   const std::vector<int>& n_max_levels, double e_max = std::numeric_limits<double>::infinity(),
                                                   double C_cap = 1e8, const SpectrumOptions& sopt = {}) {
  P.validate();
  Q.validate(false);
  if (Q.degree >= P.degree) throw validation_error("BadPolynomial", "Q must have lower degree than P", "probes.q");
  if (n_max_levels.size() < 2) throw validation_error("BadParams", "need at least two truncation levels", "probes.n_max");
  PerturbationReport r;
  for (int nm : n_max_levels) {
    const auto fock = enumerate_basis(t.modes, nm, e_max);
    const auto VP = assemble_interaction(P, t, fock);
    const auto VQ = assemble_interaction(Q, t, fock);
    const auto bundle = assemble_hamiltonian(t.modes, fock, VP.V, sopt);
    const auto I = SparseOperator::identity(fock.size());
    double worst = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
      const auto op = bundle.H - I * bundle.ground_energy + VQ.V * sign;
      worst = std::min(worst, low_spectrum(op, 1, sopt).eigenvalues.front());
    }
    const double C = std::max(0.0, -worst);
    if (!(C <= C_cap)) throw numerical_error("NoFiniteC", "certified constant exceeds the cap " + std::to_string(C_cap));
    r.levels.push_back({nm, fock.size(), bundle.ground_energy, C});
  }
  const double a = r.levels[r.levels.size() - 2].C, c = r.levels.back().C;
  r.C = c;
  r.stable = std::abs(c - a) <= 0.2 * std::max(a, c) || std::max(a, c) == 0;
  return r;
}

}  // namespace pphi2
