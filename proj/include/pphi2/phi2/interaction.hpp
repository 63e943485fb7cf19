#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/fock/fock.hpp"
#include "pphi2/phi2/kernel.hpp"
#include "pphi2/phi2/polynomial.hpp"

namespace pphi2 {

struct InteractionOptions {
  bool check_quadrature = true;  // compare with the every-second-node rule
  double quadrature_tol = 1e-6;
  std::size_t block = 16;  // nodes per reduction block; fixed so results do not depend on the thread count
};

struct Interaction {
  SparseOperator V;
  double scalar = 0;             // int g a_0, included in V as a multiple of the identity
  double quadrature_change = 0;  // relative max-entry change against the coarse rule, 0 when unchecked
  double top_band_fraction = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// sum_p c_p :phi^p: (p >= 1) from the projected annihilator A of one node
inline SparseMatrix wick_polynomial(const SparseMatrix& A, const std::vector<double>& c) {
  const auto dim = A.rows();
  const int deg = static_cast<int>(c.size()) - 1;
  SparseMatrix out(dim, dim);
  if (deg < 1) return out;
  std::vector<SparseMatrix> pw(static_cast<std::size_t>(deg) + 1), pt(static_cast<std::size_t>(deg) + 1);
  pw[0].resize(dim, dim);
  pw[0].setIdentity();
  pt[0] = pw[0];
  for (int s = 1; s <= deg; ++s) {
    pw[static_cast<std::size_t>(s)] = SparseMatrix(A * pw[static_cast<std::size_t>(s) - 1]);
    pt[static_cast<std::size_t>(s)] = SparseMatrix(pw[static_cast<std::size_t>(s)].transpose());
  }
  for (int p = 1; p <= deg; ++p) {
    const double cp = c[static_cast<std::size_t>(p)];
    if (cp == 0) continue;
    const double scale = cp * std::pow(2.0, -0.5 * p);
    for (int r = 0; r <= p; ++r) {
      const SparseMatrix term = pt[static_cast<std::size_t>(r)] * pw[static_cast<std::size_t>(p - r)];
      out += (scale * binomial(p, r)) * term;
    }
  }
  return out;
}

// pairwise sum in a fixed tree order
inline SparseMatrix tree_sum(std::vector<SparseMatrix>& parts) {
  if (parts.empty()) return {};
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2)
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      parts[i] = SparseMatrix(parts[i] + parts[i + stride]);
      parts[i + stride] = SparseMatrix();
    }
  return parts[0];
}

inline SparseMatrix assemble_nodes(const WickPolynomial& P, const KernelTable& t, const FockBasis& fock,
                                   std::size_t block) {
  const auto dim = static_cast<Eigen::Index>(fock.size());
  SparseMatrix acc(dim, dim);
  const std::size_t nq = t.nodes();
  for (std::size_t b0 = 0; b0 < nq; b0 += block) {
    const std::size_t nb = std::min(block, nq - b0);
    std::vector<SparseMatrix> parts(nb);
    parallel_for(nb, [&](std::size_t j) {
      const std::size_t i = b0 + j;
      const double wg = t.w[i] * t.g[i];
      if (wg == 0) {
        parts[j] = SparseMatrix(dim, dim);
        return;
      }
      std::vector<double> c(static_cast<std::size_t>(P.degree) + 1, 0.0);
      for (int p = 1; p <= P.degree; ++p) c[static_cast<std::size_t>(p)] = wg * P.coefficient(p, t.x[i]);
      std::vector<double> v(t.values.cols());
      for (Eigen::Index d = 0; d < t.values.cols(); ++d) v[static_cast<std::size_t>(d)] = t.values(static_cast<Eigen::Index>(i), d);
      parts[j] = wick_polynomial(annihilator(fock, v).m, c);
    });
    acc += tree_sum(parts);
  }
  return acc;
}

}  // namespace detail

// V = sum_i w_i g(x_i) sum_p a_p(x_i) :phi(m(x_i, .))^p:, plus (sum_i w_i g a_0) times the identity.
// The coupling values g(x_i) are those stored in the table; P.g is not re-sampled.
inline Interaction assemble_interaction(const WickPolynomial& P, const KernelTable& t, const FockBasis& fock,
                                        const InteractionOptions& opt = {}) {
  P.validate(false);
  if (static_cast<std::size_t>(t.values.cols()) != fock.modes())
    throw validation_error("BadParams", "kernel table and Fock basis have different mode counts", "modes");
  for (int p = 1; p <= P.degree; ++p) detail::validate_wick_expansion(p);
  Interaction out;
  SparseMatrix V = detail::assemble_nodes(P, t, fock, std::max<std::size_t>(1, opt.block));
  for (std::size_t i = 0; i < t.nodes(); ++i) out.scalar += t.w[i] * t.g[i] * P.coefficient(0, t.x[i]);

  if (opt.check_quadrature && t.h > 0 && t.nodes() >= 8) {
    const SparseMatrix Vc = detail::assemble_nodes(P, t.coarsened(), fock, std::max<std::size_t>(1, opt.block));
    double dmax = 0, vmax = 0;
    const SparseMatrix D = V - Vc;
    for (Eigen::Index r = 0; r < D.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(D, r); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
    for (Eigen::Index r = 0; r < V.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(V, r); it; ++it) vmax = std::max(vmax, std::abs(it.value()));
    out.quadrature_change = vmax > 0 ? dmax / vmax : 0;
    if (out.quadrature_change > opt.quadrature_tol)
      throw numerical_error("QuadratureUnconverged", "halving the x nodes moves V by " +
                                                        std::to_string(out.quadrature_change) + " relative");
  }

  // share of V Omega in the band N > n_max - degree
  Eigen::VectorXd vac = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fock.size()));
  vac(0) = 1;
  const Eigen::VectorXd col = V * vac;
  double top = 0;
  for (std::size_t s = 0; s < fock.size(); ++s)
    if (fock.number(s) > fock.n_max() - P.degree) top += col(static_cast<Eigen::Index>(s)) * col(static_cast<Eigen::Index>(s));
  out.top_band_fraction = col.squaredNorm() > 0 ? std::sqrt(top / col.squaredNorm()) : 0;
  if (out.top_band_fraction > 1e-6)
    out.warnings.push_back("TruncationWarning: n_max = " + std::to_string(fock.n_max()) +
                           " is too small for Wick degree " + std::to_string(P.degree));

  if (out.scalar != 0) {
    SparseMatrix I(V.rows(), V.cols());
    I.setIdentity();
    V += out.scalar * I;
  }
  V.prune(0.0);
  out.V = SparseOperator(std::move(V), true);
  return out;
}

// Orthonormal effective modes spanning the node kernels; the spectrum of V on {N <= n_max} is unchanged
// because that truncation is invariant under unitary mode rotations.
inline KernelTable effective_table(const KernelTable& t, double rank_tol = 1e-12) {
  KernelTable e = t;
  if (t.values.size() == 0) return e;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.values, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rank_tol * s(0)) ++r;
  e.values = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
  e.modes.modes.assign(static_cast<std::size_t>(r), Mode{Mode::Kind::Cell, 0, 0, 1.0});
  return e;
}

}  // namespace pphi2
