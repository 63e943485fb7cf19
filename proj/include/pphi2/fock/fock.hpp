#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/fock/modes.hpp"
#include "pphi2/fock/sparse.hpp"

namespace pphi2 {

// Occupation-number basis {n : sum n <= n_max, sum n omega <= e_max} in lexicographic order.
class FockBasis {
 public:
  static constexpr std::size_t kDefaultCap = 200000;

  FockBasis() = default;
  FockBasis(std::vector<double> omega, int n_max, double e_max = std::numeric_limits<double>::infinity(),
            std::size_t cap = kDefaultCap)
      : omega_(std::move(omega)), n_max_(n_max), e_max_(e_max) {
    if (n_max < 0) throw validation_error("BadParams", "n_max must be non-negative", "cutoffs.n_max");
    if (n_max > 65535) throw validation_error("BadParams", "n_max is too large", "cutoffs.n_max");
    for (double w : omega_)
      if (!(w > 0)) throw validation_error("BadParams", "mode energies must be positive", "modes");
    std::vector<std::uint16_t> cur(omega_.size(), 0);
    enumerate(0, 0, 0.0, cur, cap);
    index_.reserve(size());
    for (std::size_t s = 0; s < size(); ++s) index_.emplace(key(occupation(s)), s);
  }

  std::size_t size() const noexcept { return omega_.empty() ? 1 : occ_.size() / omega_.size(); }
  std::size_t modes() const noexcept { return omega_.size(); }
  int n_max() const noexcept { return n_max_; }
  double e_max() const noexcept { return e_max_; }
  const std::vector<double>& omega() const noexcept { return omega_; }

  std::span<const std::uint16_t> occupation(std::size_t s) const {
    return {occ_.data() + s * omega_.size(), omega_.size()};
  }
  int number(std::size_t s) const {
    int n = 0;
    for (auto v : occupation(s)) n += v;
    return n;
  }
  double energy(std::size_t s) const {
    double e = 0;
    const auto o = occupation(s);
    for (std::size_t d = 0; d < o.size(); ++d) e += o[d] * omega_[d];
    return e;
  }
  // ordinal of an occupation vector, or size() when outside the truncation
  std::size_t find(std::span<const std::uint16_t> n) const {
    auto it = index_.find(key(n));
    return it == index_.end() ? size() : it->second;
  }

 private:
  static std::string key(std::span<const std::uint16_t> n) {
    return std::string(reinterpret_cast<const char*>(n.data()), n.size() * sizeof(std::uint16_t));
  }

  void enumerate(std::size_t d, int n, double e, std::vector<std::uint16_t>& cur, std::size_t cap) {
    if (d == omega_.size()) {
      if (occ_.size() / std::max<std::size_t>(1, omega_.size()) >= cap)
        throw numerical_error("DimensionOverflow", "Fock basis exceeds " + std::to_string(cap) + " states");
      occ_.insert(occ_.end(), cur.begin(), cur.end());
      return;
    }
    for (int k = 0; n + k <= n_max_; ++k) {
      const double ek = e + k * omega_[d];
      if (ek > e_max_ * (1 + 1e-12) + 1e-12) break;
      cur[d] = static_cast<std::uint16_t>(k);
      enumerate(d + 1, n + k, ek, cur, cap);
    }
    cur[d] = 0;
  }

  std::vector<double> omega_;
  int n_max_ = 0;
  double e_max_ = std::numeric_limits<double>::infinity();
  std::vector<std::uint16_t> occ_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline FockBasis enumerate_basis(const ModeSet& modes, int n_max, double e_max = std::numeric_limits<double>::infinity(),
                                 std::size_t cap = FockBasis::kDefaultCap) {
  return FockBasis(modes.omegas(), n_max, e_max, cap);
}

enum class Ladder { create, annihilate };

// P a^#(delta) P
inline SparseOperator ladder(const FockBasis& b, std::size_t delta, Ladder kind) {
  if (delta >= b.modes()) throw validation_error("UnknownMode", "mode index out of range", "mode");
  std::vector<Eigen::Triplet<double>> t;
  std::vector<std::uint16_t> n(b.modes());
  for (std::size_t s = 0; s < b.size(); ++s) {
    const auto o = b.occupation(s);
    std::copy(o.begin(), o.end(), n.begin());
    if (kind == Ladder::annihilate) {
      if (n[delta] == 0) continue;
      const double amp = std::sqrt(double(n[delta]));
      --n[delta];
      const auto j = b.find(n);
      if (j < b.size()) t.emplace_back(static_cast<int>(j), static_cast<int>(s), amp);
    } else {
      const double amp = std::sqrt(double(n[delta]) + 1);
      ++n[delta];
      const auto j = b.find(n);
      if (j < b.size()) t.emplace_back(static_cast<int>(j), static_cast<int>(s), amp);
    }
  }
  return SparseOperator::from_triplets(b.size(), t, false);
}

// P a(v) P = sum_delta v_delta P a(delta) P for real v
inline SparseOperator annihilator(const FockBasis& b, std::span<const double> v) {
  if (v.size() != b.modes()) throw validation_error("BadParams", "coefficient vector does not match the mode count");
  std::vector<Eigen::Triplet<double>> t;
  std::vector<std::uint16_t> n(b.modes());
  for (std::size_t s = 0; s < b.size(); ++s) {
    const auto o = b.occupation(s);
    std::copy(o.begin(), o.end(), n.begin());
    for (std::size_t d = 0; d < n.size(); ++d) {
      if (n[d] == 0 || v[d] == 0) continue;
      const double amp = v[d] * std::sqrt(double(n[d]));
      --n[d];
      const auto j = b.find(n);
      ++n[d];
      if (j < b.size()) t.emplace_back(static_cast<int>(j), static_cast<int>(s), amp);
    }
  }
  return SparseOperator::from_triplets(b.size(), t, false);
}

// diagonal sum_delta n_delta w_delta
inline SparseOperator dGamma(const FockBasis& b, std::span<const double> w) {
  if (w.size() != b.modes()) throw validation_error("BadParams", "weight vector does not match the mode count");
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t s = 0; s < b.size(); ++s) {
    const auto o = b.occupation(s);
    double e = 0;
    for (std::size_t d = 0; d < o.size(); ++d) e += o[d] * w[d];
    if (e != 0) t.emplace_back(static_cast<int>(s), static_cast<int>(s), e);
  }
  return SparseOperator::from_triplets(b.size(), t, true);
}

inline SparseOperator number_operator(const FockBasis& b) {
  const std::vector<double> one(b.modes(), 1.0);
  return dGamma(b, one);
}

inline SparseOperator free_hamiltonian(const FockBasis& b) { return dGamma(b, b.omega()); }

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct WickReport {
  double top_band_fraction = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// 2^{-p/2} sum_r C(p,r) (A^T)^r A^{p-r} from a projected annihilator A
inline SparseMatrix wick_from_annihilator(const SparseMatrix& A, int p) {
  const auto dim = A.rows();
  std::vector<SparseMatrix> pw(static_cast<std::size_t>(p) + 1);
  pw[0].resize(dim, dim);
  pw[0].setIdentity();
  for (int s = 1; s <= p; ++s) pw[static_cast<std::size_t>(s)] = SparseMatrix(A * pw[static_cast<std::size_t>(s) - 1]);
  SparseMatrix out(dim, dim);
  for (int r = 0; r <= p; ++r) {
    const SparseMatrix term =
        SparseMatrix(pw[static_cast<std::size_t>(r)].transpose()) * pw[static_cast<std::size_t>(p - r)];
    out += binomial(p, r) * term;
  }
  out *= std::pow(2.0, -0.5 * p);
  out.prune(0.0);
  return out;
}

// Compares the binomial expansion with :phi^{m+1}: = phi :phi^m: - m (|v|^2/2) :phi^{m-1}: for one mode
// with |v| = 1, on states far enough from the cut that the truncated products are exact.
inline double wick_hermite_defect(int p) {
  const int N = p + 8;
  const FockBasis b({1.0}, N);
  const std::vector<double> v{1.0};
  const SparseMatrix A = annihilator(b, v).m;
  const SparseMatrix phi = (SparseMatrix(A.transpose()) + A) * (1 / std::sqrt(2.0));
  SparseMatrix prev(N + 1, N + 1), cur(N + 1, N + 1);
  prev.setIdentity();  // :phi^0:
  cur = phi;           // :phi^1:
  if (p == 0) cur = prev;
  for (int m = 1; m < p; ++m) {
    SparseMatrix next = SparseMatrix(phi * cur) - (0.5 * m) * prev;
    prev = cur;
    cur = next;
  }
  const SparseMatrix bin = wick_from_annihilator(A, p);
  double d = 0;
  for (int i = 0; i <= N - p; ++i)
    for (int j = 0; j <= N - p; ++j) d = std::max(d, std::abs(bin.coeff(i, j) - cur.coeff(i, j)));
  return d;
}

inline void validate_wick_expansion(int p) {
  static std::mutex mu;
  static std::set<int> done;
  std::lock_guard lock(mu);
  if (done.count(p)) return;
  const double d = wick_hermite_defect(p);
  if (!(d < 1e-9 * std::max(1.0, std::tgamma(p + 1.0))))
    throw numerical_error("WickExpansionMismatch", "binomial Wick expansion disagrees with the Hermite recursion");
  done.insert(p);
}

}  // namespace detail

// :phi(v)^p: with phi(v) = (a*(v) + a(v))/sqrt(2) on the truncated basis
inline SparseOperator wick_power(const FockBasis& b, std::span<const double> v, int p, WickReport* report = nullptr) {
  if (p < 0) throw validation_error("BadParams", "Wick power must be non-negative", "polynomial.degree");
  if (p == 0) return SparseOperator::identity(b.size());
  detail::validate_wick_expansion(p);
  const SparseMatrix A = annihilator(b, v).m;
  SparseOperator out(detail::wick_from_annihilator(A, p), true);
  if (report) {
    // share of :phi^p: Omega in the band N > n_max - p, where the product a*^r a^(p-r) loses terms
    Eigen::VectorXd vac = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
    vac(0) = 1;
    const Eigen::VectorXd col = out.m * vac;
    double top = 0;
    for (std::size_t s = 0; s < b.size(); ++s)
      if (b.number(s) > b.n_max() - p) top += col(static_cast<Eigen::Index>(s)) * col(static_cast<Eigen::Index>(s));
    const double all = col.squaredNorm();
    report->top_band_fraction = all > 0 ? std::sqrt(top / all) : 0;
    if (report->top_band_fraction > 1e-6)
      report->warnings.push_back("TruncationWarning: n_max = " + std::to_string(b.n_max()) +
                                 " is too small for Wick degree " + std::to_string(p));
  }
  return out;
}

}  // namespace pphi2
