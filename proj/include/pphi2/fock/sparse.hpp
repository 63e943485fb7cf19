#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "pphi2/core/error.hpp"

namespace pphi2 {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Real sparse operator on a truncated Fock space.
struct SparseOperator {
  SparseMatrix m;
  bool symmetric = false;

  SparseOperator() = default;
  explicit SparseOperator(SparseMatrix a, bool sym = false) : m(std::move(a)), symmetric(sym) { m.makeCompressed(); }

  static SparseOperator from_triplets(std::size_t dim, const std::vector<Eigen::Triplet<double>>& t, bool sym) {
    SparseMatrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    a.setFromTriplets(t.begin(), t.end());
    return SparseOperator(std::move(a), sym);
  }
  static SparseOperator identity(std::size_t dim) {
    SparseMatrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    a.setIdentity();
    return SparseOperator(std::move(a), true);
  }
  static SparseOperator zero(std::size_t dim) {
    return SparseOperator(SparseMatrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)), true);
  }

  std::size_t dim() const { return static_cast<std::size_t>(m.rows()); }
  std::size_t nnz() const { return static_cast<std::size_t>(m.nonZeros()); }
  double operator()(std::size_t i, std::size_t j) const {
    return m.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // largest |A_ij - A_ji| over `samples` random stored entries
  double symmetry_defect(std::uint64_t seed = 0, std::size_t samples = 100) const {
    if (nnz() == 0) return 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pos;
    pos.reserve(nnz());
    for (Eigen::Index r = 0; r < m.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) pos.emplace_back(it.row(), it.col());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
    double d = 0;
    for (std::size_t s = 0; s < samples; ++s) {
      const auto [r, c] = pos[pick(rng)];
      d = std::max(d, std::abs(m.coeff(r, c) - m.coeff(c, r)));
    }
    return d;
  }

  // full check, used by tests and small problems
  double full_symmetry_defect() const {
    const SparseMatrix d = m - SparseMatrix(m.transpose());
    double x = 0;
    for (Eigen::Index r = 0; r < d.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(d, r); it; ++it) x = std::max(x, std::abs(it.value()));
    return x;
  }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return m * v; }

  SparseOperator operator+(const SparseOperator& o) const {
    return SparseOperator(SparseMatrix(m + o.m), symmetric && o.symmetric);
  }
  SparseOperator operator-(const SparseOperator& o) const {
    return SparseOperator(SparseMatrix(m - o.m), symmetric && o.symmetric);
  }
  SparseOperator operator*(double s) const { return SparseOperator(SparseMatrix(m * s), symmetric); }
  SparseOperator operator*(const SparseOperator& o) const { return SparseOperator(SparseMatrix(m * o.m), false); }

  nlohmann::json header() const {
    return {{"dim", dim()}, {"nnz", nnz()}, {"symmetric", symmetric}};
  }

  // "row col value" per line with 17 significant digits
  void write_coo(std::ostream& os) const {
    char buf[64];
    for (Eigen::Index r = 0; r < m.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
        std::snprintf(buf, sizeof buf, "%.17g", it.value());
        os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
      }
  }
};

}  // namespace pphi2
