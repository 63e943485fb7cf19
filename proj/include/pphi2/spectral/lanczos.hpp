#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pphi2/core/error.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/fock/sparse.hpp"

namespace pphi2 {

using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Row-parallel product; each row is a sequential dot product, so the result is thread-count independent.
inline Eigen::VectorXd parallel_apply(const SparseMatrix& m, const Eigen::VectorXd& v) {
  const auto n = static_cast<std::size_t>(m.rows());
  Eigen::VectorXd out(m.rows());
  constexpr std::size_t chunk = 512;
  parallel_for((n + chunk - 1) / chunk, [&](std::size_t c) {
    const auto hi = std::min(n, (c + 1) * chunk);
    for (auto r = c * chunk; r < hi; ++r) {
      double s = 0;
      for (SparseMatrix::InnerIterator it(m, static_cast<Eigen::Index>(r)); it; ++it) s += it.value() * v(it.col());
      out(static_cast<Eigen::Index>(r)) = s;
    }
  });
  return out;
}

struct SpectrumOptions {
  std::size_t dense_limit = 2000;
  double tol = 1e-8;  // residual certification
  std::size_t max_restarts = 500;
  std::size_t krylov = 0;  // 0 picks max(2q + 20, 40)
  std::uint64_t seed = 0;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  Eigen::MatrixXd vectors;  // columns, unit norm
  std::string method;
  std::size_t dim = 0;
};

// Gershgorin interval of a symmetric sparse matrix
inline std::pair<double, double> gershgorin(const SparseMatrix& m) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double d = 0, off = 0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.col() == r) d += it.value();
      else off += std::abs(it.value());
    }
    lo = std::min(lo, d - off);
    hi = std::max(hi, d + off);
  }
  if (m.outerSize() == 0) lo = hi = 0;
  return {lo, hi};
}

namespace detail {

inline void orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& X, Eigen::Index xcols, const Eigen::MatrixXd& V,
                          Eigen::Index vcols) {
  for (int pass = 0; pass < 2; ++pass) {
    if (xcols > 0) w -= X.leftCols(xcols) * (X.leftCols(xcols).transpose() * w);
    if (vcols > 0) w -= V.leftCols(vcols) * (V.leftCols(vcols).transpose() * w);
  }
}

inline Eigen::VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng, const Eigen::MatrixXd& X, Eigen::Index xcols) {
  std::normal_distribution<double> nd;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    orthogonalize(v, X, xcols, Eigen::MatrixXd(), 0);
    const double nv = v.norm();
    if (nv > 1e-8) return v / nv;
  }
  return Eigen::VectorXd();
}

struct RitzRun {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  std::vector<double> residuals;
};

// Thick-restart Lanczos for the `want` lowest pairs of A restricted to the complement of X.
inline RitzRun thick_restart(const MatVec& A, Eigen::Index n, std::size_t want, const Eigen::MatrixXd& X,
                             Eigen::Index xcols, std::mt19937_64& rng, const SpectrumOptions& opt) {
  const Eigen::Index room = n - xcols;
  const auto m = static_cast<Eigen::Index>(
      std::min<std::size_t>(static_cast<std::size_t>(room), opt.krylov ? opt.krylov : std::max<std::size_t>(2 * want + 20, 40)));
  const auto k_keep = std::min<Eigen::Index>(m - 1, static_cast<Eigen::Index>(want) + std::max<Eigen::Index>(static_cast<Eigen::Index>(want), 10));
  Eigen::MatrixXd V(n, m), AV(n, m);
  Eigen::Index cols = 0;
  Eigen::VectorXd next = random_unit(n, rng, X, xcols);
  RitzRun out;
  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    while (cols < m) {
      if (next.size() == 0) break;
      V.col(cols) = next;
      AV.col(cols) = A(next);
      ++cols;
      Eigen::VectorXd w = AV.col(cols - 1);
      orthogonalize(w, X, xcols, V, cols);
      double beta = w.norm();
      if (beta < 1e-12 * std::max(1.0, AV.col(cols - 1).norm())) {
        // invariant subspace: continue with a fresh direction
        if (cols + xcols >= n) {
          next.resize(0);
          break;
        }
        w = random_unit(n, rng, X, xcols);
        orthogonalize(w, X, xcols, V, cols);
        beta = w.norm();
        if (beta < 1e-8) {
          next.resize(0);
          break;
        }
      }
      next = w / beta;
    }
    Eigen::MatrixXd H = V.leftCols(cols).transpose() * AV.leftCols(cols);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const auto nw = std::min<Eigen::Index>(static_cast<Eigen::Index>(want), cols);
    const Eigen::MatrixXd Y = es.eigenvectors();
    const Eigen::MatrixXd U = V.leftCols(cols) * Y.leftCols(nw);
    const Eigen::MatrixXd AU = AV.leftCols(cols) * Y.leftCols(nw);
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + nw);
    out.residuals.resize(static_cast<std::size_t>(nw));
    bool done = true;
    for (Eigen::Index i = 0; i < nw; ++i) {
      out.residuals[static_cast<std::size_t>(i)] = (AU.col(i) - es.eigenvalues()(i) * U.col(i)).norm();
      done = done && out.residuals[static_cast<std::size_t>(i)] < opt.tol;
    }
    out.vectors = U;
    if (done || next.size() == 0) return out;
    // keep the lowest Ritz vectors and continue from the residual direction
    const auto keep = std::min(k_keep, cols - 1);
    const Eigen::MatrixXd Vk = V.leftCols(cols) * Y.leftCols(keep);
    const Eigen::MatrixXd AVk = AV.leftCols(cols) * Y.leftCols(keep);
    V.leftCols(keep) = Vk;
    AV.leftCols(keep) = AVk;
    cols = keep;
    orthogonalize(next, X, xcols, V, cols);
    const double nn = next.norm();
    if (nn < 1e-10) {
      next = random_unit(n, rng, X, xcols);
      orthogonalize(next, X, xcols, V, cols);
      next.normalize();
    } else {
      next /= nn;
    }
  }
  throw numerical_error("NotConverged", "Lanczos did not reach residual " + std::to_string(opt.tol));
}

}  // namespace detail

// lowest q eigenpairs of a symmetric operator given by its action; degenerate copies are found by locking
inline SpectrumReport lanczos_lowest(const MatVec& A, std::size_t n, std::size_t q, const SpectrumOptions& opt = {}) {
  const auto N = static_cast<Eigen::Index>(n);
  q = std::min(q, n);
  std::mt19937_64 rng(opt.seed);
  Eigen::MatrixXd X(N, static_cast<Eigen::Index>(q) + 1);
  std::vector<double> vals;
  Eigen::Index locked = 0;
  // main pass, then probes in the complement until no lower pair is missing
  auto run = detail::thick_restart(A, N, q, X, 0, rng, opt);
  for (std::size_t i = 0; i < run.values.size(); ++i) {
    X.col(locked++) = run.vectors.col(static_cast<Eigen::Index>(i));
    vals.push_back(run.values[i]);
  }
  for (std::size_t guard = 0; guard < 4 * q + 8 && static_cast<std::size_t>(locked) < n; ++guard) {
    const bool full = vals.size() >= q;
    const auto probe = detail::thick_restart(A, N, 1, X, locked, rng, opt);
    if (probe.values.empty()) break;
    const double top = vals.empty() ? std::numeric_limits<double>::infinity() : *std::max_element(vals.begin(), vals.end());
    if (full && probe.values[0] >= top - 10 * opt.tol) break;
    X.col(locked++) = probe.vectors.col(0);
    vals.push_back(probe.values[0]);
    if (vals.size() > q) {
      // drop the highest pair
      const auto it = std::max_element(vals.begin(), vals.end());
      const auto drop = static_cast<Eigen::Index>(it - vals.begin());
      X.col(drop) = X.col(locked - 1);
      vals[static_cast<std::size_t>(drop)] = vals.back();
      vals.pop_back();
      --locked;
    }
  }
  // Rayleigh-Ritz on the locked vectors with fresh products; stored products drift over restarts
  SpectrumReport r;
  r.method = "iterative";
  r.dim = n;
  if (locked == 0) return r;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X.leftCols(locked));
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, locked);
  Eigen::MatrixXd AQ(N, locked);
  for (Eigen::Index j = 0; j < locked; ++j) AQ.col(j) = A(Q.col(j));
  Eigen::MatrixXd G = Q.transpose() * AQ;
  G = 0.5 * (G + G.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  r.vectors = Q * es.eigenvectors();
  const Eigen::MatrixXd AR = AQ * es.eigenvectors();
  for (Eigen::Index i = 0; i < locked; ++i) {
    r.eigenvalues.push_back(es.eigenvalues()(i));
    r.residuals.push_back((AR.col(i) - es.eigenvalues()(i) * r.vectors.col(i)).norm());
  }
  return r;
}

inline SpectrumReport low_spectrum(const SparseOperator& op, std::size_t q, const SpectrumOptions& opt = {}) {
  const std::size_t n = op.dim();
  if (n == 0) throw validation_error("BadParams", "empty operator");
  if (op.symmetry_defect(opt.seed) > 1e-12) throw validation_error("NotSymmetric", "operator is not symmetric");
  q = std::min(q, n);
  if (n <= opt.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
    SpectrumReport r;
    r.method = "dense";
    r.dim = n;
    r.vectors = es.eigenvectors().leftCols(static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < q; ++i) {
      r.eigenvalues.push_back(es.eigenvalues()(static_cast<Eigen::Index>(i)));
      const Eigen::VectorXd v = r.vectors.col(static_cast<Eigen::Index>(i));
      r.residuals.push_back((op.m * v - r.eigenvalues.back() * v).norm());
    }
    return r;
  }
  // shift by the Gershgorin lower bound so the operator is positive semidefinite
  const double shift = gershgorin(op.m).first;
  const MatVec A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return parallel_apply(op.m, v) - shift * v; };
  auto r = lanczos_lowest(A, n, q, opt);
  for (auto& e : r.eigenvalues) e += shift;
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    const Eigen::VectorXd v = r.vectors.col(static_cast<Eigen::Index>(i));
    r.residuals[i] = (parallel_apply(op.m, v) - r.eigenvalues[i] * v).norm();
    if (!(r.residuals[i] < opt.tol * 10))
      throw numerical_error("NotConverged", "eigenpair residual " + std::to_string(r.residuals[i]) + " exceeds tolerance");
  }
  return r;
}

// all eigenvalues below `limit` (ascending), growing q until the spectrum passes the limit
inline SpectrumReport spectrum_below(const SparseOperator& op, double limit, const SpectrumOptions& opt = {},
                                     std::size_t q0 = 8) {
  for (std::size_t q = q0;; q *= 2) {
    auto r = low_spectrum(op, q, opt);
    if (r.eigenvalues.size() >= op.dim() || r.eigenvalues.back() > limit) return r;
  }
}

// conjugate gradients for (A) x = b with A symmetric positive definite
inline Eigen::VectorXd conjugate_gradient(const MatVec& A, const Eigen::VectorXd& b, double tol = 1e-10,
                                          std::size_t max_iter = 0) {
  const auto n = static_cast<std::size_t>(b.size());
  if (max_iter == 0) max_iter = 10 * n + 100;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size()), r = b, p = r;
  const double bn = b.norm();
  if (bn == 0) return x;
  double rr = r.squaredNorm(), best = rr;
  std::size_t since_best = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= tol * bn) return x;
    const Eigen::VectorXd Ap = A(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0)) throw numerical_error("SolveFailed", "operator is not positive definite");
    const double a = rr / pAp;
    x += a * p;
    r -= a * Ap;
    const double rr2 = r.squaredNorm();
    p = r + (rr2 / rr) * p;
    rr = rr2;
    if (rr < best * 0.999) best = rr, since_best = 0;
    else if (++since_best > 200) throw numerical_error("SolveFailed", "conjugate gradients stagnated");
  }
  if (std::sqrt(rr) <= tol * bn) return x;
  throw numerical_error("SolveFailed", "conjugate gradients did not converge");
}

}  // namespace pphi2
