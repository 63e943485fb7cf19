#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "pphi2/core/error.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/fock/modes.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/eigenbasis.hpp"

namespace pphi2 {

// Quadrature in x on rows of the eigenbasis grid.
struct XQuadrature {
  std::vector<std::size_t> index;
  std::vector<double> w;
  double h = 0;  // spacing when the rule is the trapezoid rule on a uniform grid, else 0

  std::size_t size() const { return index.size(); }

  // trapezoid rule over the grid nodes where g > tol_rel * max g
  static XQuadrature on_support(const Grid& x, const Sampler& g, double tol_rel = 1e-12) {
    double gmax = 0;
    for (double t : x.x) gmax = std::max(gmax, g(t));
    XQuadrature q;
    if (gmax == 0) return q;
    std::size_t lo = x.size(), hi = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (g(x[i]) > tol_rel * gmax) lo = std::min(lo, i), hi = i;
    if (lo == 0 || hi + 1 == x.size())
      throw validation_error("GridTooNarrow", "coupling is not negligible at the end of the x grid", "grids.x");
    const double h = x[1] - x[0];
    for (std::size_t i = 1; i < x.size(); ++i)
      if (std::abs(x[i] - x[i - 1] - h) > 1e-9 * h) throw validation_error("BadGrid", "x grid must be uniform", "grids.x");
    // g vanishes to tolerance at lo - 1 and hi + 1, so plain Riemann weights are the trapezoid rule
    for (std::size_t i = lo; i <= hi; ++i) q.index.push_back(i), q.w.push_back(h);
    q.h = h;
    return q;
  }

  // point masses sitting on grid nodes
  static XQuadrature points(const Grid& x, const std::vector<double>& at, const std::vector<double>& mass) {
    if (at.size() != mass.size()) throw validation_error("BadParams", "one mass per point is required", "coupling");
    XQuadrature q;
    for (std::size_t j = 0; j < at.size(); ++j) {
      const auto i = x.nearest(at[j]);
      if (std::abs(x[i] - at[j]) > 1e-9 * std::max(1.0, std::abs(at[j])))
        throw validation_error("BadGrid", "point mass is not on a grid node", "coupling");
      q.index.push_back(i);
      q.w.push_back(mass[j]);
    }
    return q;
  }
};

// m_n(x_i, delta) on quadrature nodes; rows are nodes, columns are modes
struct KernelTable {
  ModeSet modes;
  std::vector<double> x, w, g;
  Eigen::MatrixXd values;
  double imag_residue = 0;
  double h = 0;

  std::size_t nodes() const { return x.size(); }

  // every second node with doubled weights (for the quadrature convergence check)
  KernelTable coarsened() const {
    if (h == 0) throw validation_error("BadParams", "only uniform trapezoid tables can be coarsened");
    KernelTable c;
    c.modes = modes;
    c.h = 2 * h;
    c.imag_residue = imag_residue;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < x.size(); i += 2) {
      rows.push_back(static_cast<Eigen::Index>(i));
      c.x.push_back(x[i]);
      c.w.push_back(2 * w[i]);
      c.g.push_back(g[i]);
    }
    c.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) c.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
    return c;
  }
};

struct KernelOptions {
  double imag_tol = 1e-10;
  int nodes_per_period = 6;
};

// Cell modes use sqrt(nu / 2 pi) int_cell (k^2 + m^2)^(-1/4) conj psi(x, k) dk; the pair (+gamma, -gamma)
// is replaced by its real cos/sin combination sqrt(2) (Re, Im). Bound modes use (lambda + m^2)^(-1/4) psi_l(x).
inline KernelTable kernel_table(const GeneralizedEigenbasis& basis, const ModeSet& modes, const Sampler& g,
                                const XQuadrature& quad, const KernelOptions& opt = {}) {
  basis.k.validate();
  if (std::abs(modes.m_inf - basis.m_inf) > 1e-12 * basis.m_inf)
    throw validation_error("BadParams", "mode set and eigenbasis disagree on m_inf", "m_inf");
  const double nu = modes.nu, hc = 1.0 / nu, m2 = modes.m_inf * modes.m_inf;
  if (quad.h > 0) {
    const double kmax = modes.kappa + 0.5 * hc;
    if (kmax > 0 && quad.h > 2 * std::numbers::pi / (opt.nodes_per_period * kmax))
      throw validation_error("BadGrid", "x grid has fewer than " + std::to_string(opt.nodes_per_period) +
                                            " nodes per period of the largest lattice momentum", "grids.x");
  }
  // momentum nodes per cell
  const std::size_t nm = modes.size();
  std::vector<std::vector<std::size_t>> cell_nodes(nm);
  for (std::size_t d = 0; d < nm; ++d) {
    const auto& md = modes.modes[d];
    if (md.kind != Mode::Kind::Cell) continue;
    double covered = 0;
    for (std::size_t j = 0; j < basis.k.size(); ++j) {
      const double k = basis.k.k[j];
      if (k > md.gamma - 0.5 * hc + 1e-12 * hc && k <= md.gamma + 0.5 * hc + 1e-12 * hc) {
        cell_nodes[d].push_back(j);
        covered += basis.k.w[j];
      }
    }
    if (std::abs(covered - hc) > 1e-9 * hc)
      throw validation_error("CutoffExceedsBasis", "momentum grid does not cover the cell at " + md.label(), "k_grid");
  }
  const auto pair_of = [&](std::size_t d) { return modes.find_cell(-modes.modes[d].gamma); };

  KernelTable t;
  t.modes = modes;
  t.h = quad.h;
  const std::size_t nq = quad.size();
  t.values.setZero(static_cast<Eigen::Index>(nq), static_cast<Eigen::Index>(nm));
  for (std::size_t i = 0; i < nq; ++i) {
    const double xi = basis.x[quad.index[i]];
    t.x.push_back(xi);
    t.w.push_back(quad.w[i]);
    t.g.push_back(g(xi));
  }
  const double pref = std::sqrt(nu / (2 * std::numbers::pi));
  std::vector<double> residue(nq, 0.0);
  parallel_for(nq, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(quad.index[i]);
    std::vector<cplx> c(nm);
    for (std::size_t d = 0; d < nm; ++d) {
      const auto& md = modes.modes[d];
      if (md.kind == Mode::Kind::Bound) {
        const auto it = std::find_if(basis.bound.begin(), basis.bound.end(), [&](const BoundState& b) { return b.index == md.l; });
        if (it == basis.bound.end()) throw validation_error("UnknownMode", "bound mode missing from the eigenbasis", "modes");
        t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
            std::pow(it->lambda + m2, -0.25) * it->psi[quad.index[i]];
        continue;
      }
      cplx s = 0;
      for (auto j : cell_nodes[d]) {
        const double k = basis.k.k[j];
        s += basis.k.w[j] * std::pow(k * k + m2, -0.25) * std::conj(basis.continuum(row, static_cast<Eigen::Index>(j)));
      }
      c[d] = pref * s;
    }
    for (std::size_t d = 0; d < nm; ++d) {
      const auto& md = modes.modes[d];
      if (md.kind != Mode::Kind::Cell) continue;
      const auto p = pair_of(d);
      if (p >= nm) throw validation_error("BadParams", "cell set is not symmetric", "modes");
      residue[i] = std::max(residue[i], std::abs(c[p] - std::conj(c[d])));
      double v;
      if (md.gamma == 0) v = c[d].real();
      else if (md.gamma > 0) v = std::sqrt(2.0) * c[d].real();
      else v = std::sqrt(2.0) * c[p].imag();
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v;
    }
  });
  t.imag_residue = nq ? *std::max_element(residue.begin(), residue.end()) : 0.0;
  if (t.imag_residue > opt.imag_tol)
    throw numerical_error("ComplexKernel", "kernel has imaginary residue " + std::to_string(t.imag_residue) +
                                               "; the eigenbasis must be reality-symmetrized");
  return t;
}

}  // namespace pphi2
