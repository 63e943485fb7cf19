#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "pphi2/core/error.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/core/quadrature.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/bound_states.hpp"
#include "pphi2/schrodinger/jost.hpp"
#include "pphi2/schrodinger/wkb.hpp"

namespace pphi2 {

// Symmetric momentum nodes with quadrature weights: Gauss-Legendre panels on
// [kmin, kmax] mirrored to the negative axis. k is ascending and k[n-1-j] = -k[j].
struct MomentumGrid {
  std::vector<double> k, w;

  static MomentumGrid gauss(double kmax, double kmin = 0, double panel = 0.25, int order = 8) {
    if (!(kmax > kmin) || kmin < 0 || !(panel > 0) || order < 1)
      throw validation_error("BadGrid", "momentum grid needs 0 <= kmin < kmax and positive panel width", "k_grid");
    const auto np = static_cast<std::size_t>(std::ceil((kmax - kmin) / panel - 1e-9));
    const double h = (kmax - kmin) / static_cast<double>(np);
    const auto& r = gauss_legendre(order);
    std::vector<double> kp, wp;
    for (std::size_t p = 0; p < np; ++p) {
      const double a = kmin + h * static_cast<double>(p);
      for (int i = 0; i < order; ++i) {
        kp.push_back(a + 0.5 * h * (1 + r.nodes[i]));
        wp.push_back(0.5 * h * r.weights[i]);
      }
    }
    MomentumGrid g;
    for (std::size_t j = kp.size(); j-- > 0;) g.k.push_back(-kp[j]), g.w.push_back(wp[j]);
    for (std::size_t j = 0; j < kp.size(); ++j) g.k.push_back(kp[j]), g.w.push_back(wp[j]);
    return g;
  }

  // n log-spaced positive nodes on [kmin, kmax] with trapezoid weights (for small-k sampling)
  static MomentumGrid geometric(double kmin, double kmax, std::size_t n) {
    if (!(kmin > 0) || !(kmax > kmin) || n < 2)
      throw validation_error("BadGrid", "geometric momentum grid needs 0 < kmin < kmax and n >= 2", "k_grid");
    std::vector<double> kp(n), wp(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) kp[j] = kmin * std::pow(kmax / kmin, double(j) / double(n - 1));
    for (std::size_t j = 1; j < n; ++j) {
      const double h = 0.5 * (kp[j] - kp[j - 1]);
      wp[j - 1] += h;
      wp[j] += h;
    }
    MomentumGrid g;
    for (std::size_t j = n; j-- > 0;) g.k.push_back(-kp[j]), g.w.push_back(wp[j]);
    for (std::size_t j = 0; j < n; ++j) g.k.push_back(kp[j]), g.w.push_back(wp[j]);
    return g;
  }

  // `order` Gauss-Legendre nodes in every lattice cell ]gamma - 1/(2 nu), gamma + 1/(2 nu)], |gamma| <= kappa
  static MomentumGrid cells(double nu, double kappa, int order = 8) {
    if (!(nu >= 1) || !(kappa >= 0) || order < 2 || order % 2 != 0)
      throw validation_error("BadGrid", "cell grid needs nu >= 1, kappa >= 0 and an even order", "k_grid");
    const auto jmax = static_cast<long>(std::floor(kappa * nu + 1e-9));
    const double h = 1.0 / nu;
    const auto& r = gauss_legendre(order);
    MomentumGrid g;
    for (long j = -jmax; j <= jmax; ++j) {
      const double c = static_cast<double>(j) * h;
      for (int i = 0; i < order; ++i) {
        g.k.push_back(c + 0.5 * h * r.nodes[i]);
        g.w.push_back(0.5 * h * r.weights[i]);
      }
    }
    // Gauss-Legendre nodes are symmetric; pin exact mirror images
    for (std::size_t j = 0; j < g.k.size() / 2; ++j) g.k[g.k.size() - 1 - j] = -g.k[j];
    return g;
  }

  std::size_t size() const noexcept { return k.size(); }
  std::size_t half() const noexcept { return k.size() / 2; }
  // column of +k_j and -k_j for the j-th positive node
  std::size_t pos(std::size_t j) const { return half() + j; }
  std::size_t neg(std::size_t j) const { return half() - 1 - j; }

  void validate() const {
    if (k.empty() || k.size() % 2 != 0 || w.size() != k.size())
      throw validation_error("BadGrid", "momentum grid must have an even number of weighted nodes", "k_grid");
    for (std::size_t j = 0; j < k.size(); ++j)
      if (k[j] != -k[k.size() - 1 - j] || (j > 0 && !(k[j] > k[j - 1])))
        throw validation_error("BadGrid", "momentum grid must be ascending and symmetric", "k_grid");
    if (!(k[half()] > 0)) throw validation_error("BadGrid", "momentum grid must not contain k = 0", "k_grid");
  }
};

struct GeneralizedEigenbasis {
  Grid x;
  MomentumGrid k;
  std::vector<BoundState> bound;
  Eigen::MatrixXcd continuum;  // psi(x_i, k_j)
  std::vector<cplx> m;         // m(k) at the positive nodes
  bool symmetrized = false;
  SignProfile profile = SignProfile::QuickDecay;
  double m_inf = 0;
};

struct EigenbasisOptions {
  double eps = 0.1;  // lower momentum cutoff for slowly decaying potentials
  bool include_bound = true;
  JostOptions jost{};
  WkbOptions wkb{};
};

// bound states plus psi(x,k) = theta_+(x,k)/m(k), psi(x,-k) = theta_-(x,k)/m(k) for k > 0
inline GeneralizedEigenbasis eigenbasis(const ReducedPotential& V, double m_inf, const Grid& x,
                                        const MomentumGrid& kg, const EigenbasisOptions& opt = {}) {
  kg.validate();
  if (!(m_inf > 0)) throw validation_error("BadParams", "m_inf must be positive", "m_inf");
  if (V.profile == SignProfile::Indefinite)
    throw validation_error("IndefiniteTailSign", "potential changes sign arbitrarily far out", "profile");
  const bool slow = V.profile != SignProfile::QuickDecay;
  if (slow && kg.k[kg.half()] < opt.eps)
    throw validation_error("ZetaTooSmall", "momentum grid reaches below eps for a slowly decaying potential", "k_grid");
  GeneralizedEigenbasis b;
  b.x = x;
  b.k = kg;
  b.profile = V.profile;
  b.m_inf = m_inf;
  if (opt.include_bound) b.bound = bound_states(V, x, m_inf);
  const std::size_t nx = x.size(), nh = kg.half();
  b.continuum.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(kg.size()));
  b.m.resize(nh);
  const std::size_t zi = x.nearest(0.0);
  parallel_for(nh, [&](std::size_t j) {
    const double k = kg.k[kg.pos(j)];
    const auto tp = continuum_states(V, k, Side::Plus, x.x, opt.eps, opt.jost, opt.wkb);
    const auto tm = continuum_states(V, k, Side::Minus, x.x, opt.eps, opt.jost, opt.wkb);
    const cplx m = wronskian(tp[zi], tm[zi]) / (2.0 * cplx(0, k));
    if (!std::isfinite(std::abs(m)) || m == 0.0)
      throw numerical_error("ScatteringOverflow", "m(k) is not representable at k = " + std::to_string(k));
    b.m[j] = m;
    const auto cp = static_cast<Eigen::Index>(kg.pos(j)), cn = static_cast<Eigen::Index>(kg.neg(j));
    for (std::size_t i = 0; i < nx; ++i) {
      b.continuum(static_cast<Eigen::Index>(i), cp) = tp[i].y / m;
      b.continuum(static_cast<Eigen::Index>(i), cn) = tm[i].y / m;
    }
  });
  return b;
}

struct SymmetrizationReport {
  std::vector<Eigen::Matrix2cd> S, A;  // per positive node
  double s_unitarity = 0;              // max ||S*S - I||
  double a_unitarity = 0;              // max ||A*A - I||
  double reality_defect = 0;           // max |psi(x,-k) - conj psi(x,k)| after the transform
  double sup_ratio = 0;                // max over k of sup|new| / sup|old| (both signs)
};

namespace detail {

// z^alpha = e^{i alpha theta} with -pi < theta <= pi
inline cplx unit_power(cplx z, double alpha) {
  double th = std::arg(z);
  if (th <= -std::numbers::pi) th += 2 * std::numbers::pi;
  return std::pow(std::abs(z), alpha) * std::exp(cplx(0, alpha * th));
}

// f(U) for a normal 2x2 matrix through its Schur form (diagonal for normal matrices)
inline Eigen::Matrix2cd normal_power(const Eigen::Matrix2cd& U, double alpha) {
  Eigen::ComplexSchur<Eigen::Matrix2cd> schur(U);
  const Eigen::Matrix2cd& Q = schur.matrixU();
  const Eigen::Matrix2cd& T = schur.matrixT();
  Eigen::Matrix2cd D = Eigen::Matrix2cd::Zero();
  D(0, 0) = unit_power(T(0, 0), alpha);
  D(1, 1) = unit_power(T(1, 1), alpha);
  return Q * D * Q.adjoint();
}

}  // namespace detail

// Reality symmetrization: with Phi = (phi(.,k), phi(.,-k)), conj Phi = S T Phi (T swaps) is solved for S
// by least squares over x, and (psi(.,k), psi(.,-k)) = A Phi with A = conj(S)^(-1/2).
inline GeneralizedEigenbasis symmetrize_real(const GeneralizedEigenbasis& in, SymmetrizationReport* report = nullptr) {
  in.k.validate();
  GeneralizedEigenbasis out = in;
  const std::size_t nh = in.k.half();
  const auto nx = in.continuum.rows();
  SymmetrizationReport rep;
  rep.S.resize(nh);
  rep.A.resize(nh);
  std::vector<double> s_def(nh), a_def(nh), real_def(nh), ratio(nh);
  parallel_for(nh, [&](std::size_t j) {
    const auto cp = static_cast<Eigen::Index>(in.k.pos(j)), cn = static_cast<Eigen::Index>(in.k.neg(j));
    Eigen::MatrixXcd design(nx, 2), rhs(nx, 2);
    design.col(0) = in.continuum.col(cn);
    design.col(1) = in.continuum.col(cp);
    rhs.col(0) = in.continuum.col(cp).conjugate();
    rhs.col(1) = in.continuum.col(cn).conjugate();
    // rhs = design * S^T
    const Eigen::Matrix2cd St = design.colPivHouseholderQr().solve(rhs);
    const Eigen::Matrix2cd S = St.transpose();
    // polar factor: the nearest unitary matrix, so A is unitary to round-off
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2cd U = svd.matrixU() * svd.matrixV().adjoint();
    const Eigen::Matrix2cd A = detail::normal_power(U.conjugate(), -0.5);
    rep.S[j] = S;
    rep.A[j] = A;
    s_def[j] = (S.adjoint() * S - Eigen::Matrix2cd::Identity()).norm();
    a_def[j] = (A.adjoint() * A - Eigen::Matrix2cd::Identity()).norm();
    const Eigen::VectorXcd p = A(0, 0) * in.continuum.col(cp) + A(0, 1) * in.continuum.col(cn);
    const Eigen::VectorXcd q = A(1, 0) * in.continuum.col(cp) + A(1, 1) * in.continuum.col(cn);
    out.continuum.col(cp) = p;
    out.continuum.col(cn) = q;
    real_def[j] = (q - p.conjugate()).cwiseAbs().maxCoeff();
    const double old_sup = std::max(in.continuum.col(cp).cwiseAbs().maxCoeff(), in.continuum.col(cn).cwiseAbs().maxCoeff());
    const double new_sup = std::max(p.cwiseAbs().maxCoeff(), q.cwiseAbs().maxCoeff());
    ratio[j] = old_sup > 0 ? new_sup / old_sup : 0;
  });
  for (std::size_t j = 0; j < nh; ++j) {
    rep.s_unitarity = std::max(rep.s_unitarity, s_def[j]);
    rep.a_unitarity = std::max(rep.a_unitarity, a_def[j]);
    rep.reality_defect = std::max(rep.reality_defect, real_def[j]);
    rep.sup_ratio = std::max(rep.sup_ratio, ratio[j]);
  }
  if (rep.s_unitarity > 1e-4)
    throw numerical_error("NonUnitaryS", "reality matrix S(k) is not unitary (defect " + std::to_string(rep.s_unitarity) + ")");
  // bound states are stored as real samples, so they need no phase fix
  out.symmetrized = true;
  if (report) *report = std::move(rep);
  return out;
}

// inner product (f, g) = int conj(f) g on the basis x grid
inline cplx inner(const Grid& x, const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) {
  std::vector<cplx> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    v[i] = std::conj(f(static_cast<Eigen::Index>(i))) * g(static_cast<Eigen::Index>(i));
  return trapezoid(x, v);
}

// |<f,g> - sum_l (f,psi_l)(psi_l,g) - (2 pi)^-1 int (f,psi_k)(psi_k,g) dk| over the stored k range
inline double parseval_defect(const GeneralizedEigenbasis& b, const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) {
  const auto nx = static_cast<Eigen::Index>(b.x.size());
  if (f.size() != nx || g.size() != nx) throw validation_error("BadGrid", "test functions must live on the basis grid");
  cplx s = inner(b.x, f, g);
  for (const auto& bs : b.bound) {
    Eigen::VectorXcd p(nx);
    for (Eigen::Index i = 0; i < nx; ++i) p(i) = bs.psi[static_cast<std::size_t>(i)];
    s -= inner(b.x, f, p) * inner(b.x, p, g);
  }
  // trapezoid weights in x, then all k columns at once
  Eigen::VectorXd wx = Eigen::VectorXd::Zero(nx);
  for (Eigen::Index i = 1; i < nx; ++i) {
    const double h = 0.5 * (b.x[static_cast<std::size_t>(i)] - b.x[static_cast<std::size_t>(i - 1)]);
    wx(i - 1) += h;
    wx(i) += h;
  }
  const Eigen::VectorXcd fw = f.cwiseProduct(wx.cast<cplx>()), gw = g.cwiseProduct(wx.cast<cplx>());
  const Eigen::VectorXcd fp = b.continuum.adjoint() * fw;  // conj((f, psi_k)) = (psi_k, f)
  const Eigen::VectorXcd pg = b.continuum.adjoint() * gw;  // (psi_k, g)
  cplx c = 0;
  for (std::size_t j = 0; j < b.k.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    c += b.k.w[j] * std::conj(fp(jj)) * pg(jj);
  }
  s -= c / (2 * std::numbers::pi);
  return std::abs(s);
}

// basis with the continuum restricted to |k| <= kmax (for range-doubling checks)
inline GeneralizedEigenbasis truncate_momenta(const GeneralizedEigenbasis& b, double kmax) {
  GeneralizedEigenbasis out = b;
  std::vector<Eigen::Index> keep;
  out.k.k.clear();
  out.k.w.clear();
  for (std::size_t j = 0; j < b.k.size(); ++j)
    if (std::abs(b.k.k[j]) <= kmax) {
      keep.push_back(static_cast<Eigen::Index>(j));
      out.k.k.push_back(b.k.k[j]);
      out.k.w.push_back(b.k.w[j]);
    }
  out.continuum.resize(b.continuum.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) out.continuum.col(static_cast<Eigen::Index>(c)) = b.continuum.col(keep[c]);
  const std::size_t nh = out.k.half();
  out.m.assign(b.m.begin(), b.m.begin() + static_cast<long>(nh));
  return out;
}

}  // namespace pphi2
