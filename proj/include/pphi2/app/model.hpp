#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pphi2/app/config.hpp"
#include "pphi2/core/expression.hpp"
#include "pphi2/phi2/hamiltonian.hpp"
#include "pphi2/schrodinger/conditions.hpp"
#include "pphi2/schrodinger/eigenbasis.hpp"

namespace pphi2::app {

inline Grid x_grid(const RunConfig& c) {
  const double a = c.number("grids", "x_min"), b = c.number("grids", "x_max"), h = c.number("grids", "x_step");
  if (!(b > a)) throw validation_error("BadGrid", "x_max must exceed x_min", "grids.x_max");
  if (!(h > 0) || h > b - a) throw validation_error("BadGrid", "x_step must be positive and below the grid length", "grids.x_step");
  return Grid::uniform_step(a, b, h);
}

inline double mass(const RunConfig& c) {
  const double m = c.number("potential", "m_inf");
  if (!(m > 0) || !std::isfinite(m)) throw validation_error("BadParams", "m_inf must be positive", "potential.m_inf");
  return m;
}

inline ReducedPotential potential_from(const RunConfig& c, const Grid& x) {
  const std::string a = c.text("potential", "a_expr"), cc = c.text("potential", "c_expr");
  if (!a.empty() || !cc.empty()) {
    if (a.empty() || cc.empty())
      throw validation_error("BadParams", "a_expr and c_expr must be given together", a.empty() ? "potential.a_expr" : "potential.c_expr");
    const Expression ea(a), ec(cc);
    MetricSpec spec;
    spec.a = [ea](double t) { return ea(t); };
    spec.c = [ec](double t) { return ec(t); };
    spec.m_inf = mass(c);
    return liouville_reduce(spec, x);
  }
  try {
    return builtin_potential(c.text("potential", "family"), c.numbers("potential", "params"));
  } catch (const Error& e) {
    throw validation_error(e.code(), e.what(), e.code() == "UnknownFamily" ? "potential.family" : "potential.params");
  }
}

inline WickPolynomial polynomial_from(const RunConfig& c) {
  const int deg = c.integer("polynomial", "degree");
  if (deg < 1 || deg > 12) throw validation_error("BadPolynomial", "degree must lie in 1..12", "polynomial.degree");
  WickPolynomial P;
  P.degree = deg;
  for (int p = 0; p <= deg; ++p) {
    const Expression e(c.text("polynomial", "a" + std::to_string(p)));
    P.a.push_back([e](double x) { return e(x); });
  }
  const Expression g(c.text("coupling", "g"));
  P.g = [g](double x) { return g(x); };
  return P;
}

inline WeightFunction weight_from(const RunConfig& c, double mu) {
  const std::string w = c.text("probes", "weight");
  const auto colon = w.find(':');
  const std::string kind = w.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : w.substr(colon + 1);
  try {
    if (kind == "one" && arg.empty()) return WeightFunction::one();
    if (kind == "power" && !arg.empty()) return WeightFunction::power(std::stod(arg));
    if (kind == "mu_quarter" && arg.empty()) return WeightFunction::mu_quarter(std::isfinite(mu) ? mu : -1);
    if (kind == "window" && !arg.empty()) return WeightFunction::windowed(std::stod(arg));
  } catch (const Error& e) {
    throw validation_error(e.code(), e.what(), "probes.weight");
  } catch (const std::exception&) {
  }
  throw validation_error("BadParams", "weight must be one, power:<alpha>, mu_quarter or window:<R>", "probes.weight");
}

struct Model {
  ReducedPotential V;
  double m_inf = 1;
  Grid x;
  WickPolynomial P;
  SpectrumOptions spectrum;
  InteractionOptions interaction;
  int cell_order = 8;
};

inline Model model_from(const RunConfig& c, std::uint64_t seed) {
  Model m;
  m.x = x_grid(c);
  m.m_inf = mass(c);
  m.V = potential_from(c, m.x);
  m.P = polynomial_from(c);
  m.spectrum.tol = c.number("probes", "tol");
  m.spectrum.dense_limit = static_cast<std::size_t>(std::max(0, c.integer("probes", "dense_limit")));
  m.spectrum.max_restarts = static_cast<std::size_t>(std::max(1, c.integer("probes", "max_restarts")));
  m.spectrum.seed = seed;
  m.interaction.quadrature_tol = c.number("coupling", "quadrature_tol");
  m.cell_order = c.integer("grids", "cell_order");
  if (!(m.spectrum.tol > 0)) throw validation_error("BadParams", "tol must be positive", "probes.tol");
  return m;
}

// eigenbasis on the lattice cells, mode set and kernel table for one (nu, kappa)
struct Discretization {
  GeneralizedEigenbasis basis;
  ModeSet modes;
  KernelTable table;
};

inline Discretization discretize(const Model& m, double nu, double kappa) {
  Discretization d;
  EigenbasisOptions opt;
  d.basis = symmetrize_real(eigenbasis(m.V, m.m_inf, m.x, MomentumGrid::cells(nu, kappa, m.cell_order), opt));
  d.modes = build_mode_set(d.basis.bound, nu, kappa, m.m_inf, kappa + 0.5 / nu);
  d.table = kernel_table(d.basis, d.modes, m.P.g, XQuadrature::on_support(m.x, m.P.g));
  return d;
}

struct Truncation {
  FockBasis fock;
  Interaction V;
  SparseOperator H;
};

inline Truncation truncate(const Model& m, const Discretization& d, int n_max, double e_max) {
  Truncation t;
  t.fock = enumerate_basis(d.modes, n_max, e_max);
  t.V = assemble_interaction(m.P, d.table, t.fock, m.interaction);
  t.H = free_hamiltonian(t.fock) + t.V.V;
  t.H.symmetric = true;
  return t;
}

}  // namespace pphi2::app
