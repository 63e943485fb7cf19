#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "pphi2/core/error.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/core/panels.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/core/quadrature.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/jost.hpp"
#include "pphi2/schrodinger/propagator.hpp"

namespace pphi2 {

struct WkbOptions {
  double picard_tol = 1e-10;
  double tail_tol = 1e-12;   // bound on the neglected tail coupling int_X^inf |M| * |M(X)/2F(X)|
  double x_far_scale = 1;    // multiplies the automatically chosen far point
  double x_cap = 1e16;
  int max_iterations = 200;
  std::size_t max_panels = 2000000;
  bool force = false;        // allow quick-decay potentials (used for cross-checks)
  PropagatorOptions ode{};
};

struct WkbSolution {
  Side side = Side::Plus;
  cplx zeta{};
  double eps = 0;
  double R = 0, X = 0;        // Volterra range, |x| in [R, X] on the solution's side
  Grid grid;
  std::vector<cplx> eta, eta_prime;
  std::vector<cplx> theta, theta_prime;  // normalized solutions (real nonzero zeta only)
  std::vector<cplx> u1, u2;              // Volterra unknowns where in_volterra
  std::vector<cplx> F, S;                // (V - zeta^2)^(1/2) and S(0, x)
  std::vector<bool> in_volterra;
  cplx S0R{};                            // int_0^{+-R} F on the solution's side
  int iterations = 0;
};

namespace detail {

struct HalfLine {
  Sampler V, dV, d2V;
  std::vector<double> breakpoints;
};

inline HalfLine half_line(const ReducedPotential& V, Side side) {
  if (side == Side::Plus) return {V.V, V.dV, V.d2V, V.breakpoints};
  HalfLine h;
  const Sampler f = V.V, df = V.dV, d2f = V.d2V;
  h.V = [f](double x) { return f(-x); };
  h.dV = [df](double x) { return -df(-x); };
  h.d2V = [d2f](double x) { return d2f(-x); };
  for (double b : V.breakpoints) h.breakpoints.push_back(-b);
  std::sort(h.breakpoints.begin(), h.breakpoints.end());
  return h;
}

// (V - zeta^2)^(1/2), principal branch; on the real axis the limit from Im zeta > 0
inline cplx wkb_F(double v, cplx zeta) {
  if (zeta.imag() == 0 && zeta.real() != 0) {
    const double k = zeta.real(), d = v - k * k;
    if (d >= 0) return std::sqrt(d);
    return cplx(0, k > 0 ? -1.0 : 1.0) * std::sqrt(-d);
  }
  return std::sqrt(cplx(v, 0) - zeta * zeta);
}

inline cplx wkb_M(const HalfLine& P, double x, cplx zeta) {
  const cplx F = wkb_F(P.V(x), zeta);
  const double d1 = P.dV(x), d2 = P.d2V(x);
  const cplx F2 = F * F, F3 = F2 * F;
  return (4.0 * d2 / F3 - 5.0 * d1 * d1 / (F3 * F2)) / 32.0;
}

// int_a^b F for real a < b, split at breakpoints and turning points
// M for tail quadratures: zero where V has underflowed far out
inline cplx wkb_M_tail(const HalfLine& P, double x, cplx zeta) {
  const cplx m = wkb_M(P, x, zeta);
  return std::isfinite(m.real()) && std::isfinite(m.imag()) ? m : cplx(0);
}

inline cplx phase_integral(const HalfLine& P, cplx zeta, double a, double b) {
  if (a == b) return 0;
  if (a > b) return -phase_integral(P, zeta, b, a);
  std::vector<double> cuts{a};
  for (double bp : P.breakpoints)
    if (bp > a && bp < b) cuts.push_back(bp);
  if (zeta.imag() == 0) {
    const double e = zeta.real() * zeta.real();
    auto f = [&](double x) { return P.V(x) - e; };
    double x = a, fx = f(a);
    while (x < b) {
      const double step = std::min(0.05, 0.01 * japanese(x));
      const double y = std::min(b, x + step), fy = f(y);
      if (fx * fy < 0) {
        std::uintmax_t it = 100;
        auto tol = [](double p, double q) { return std::abs(p - q) < 1e-15 * japanese(p); };
        const auto r = boost::math::tools::toms748_solve(f, x, y, fx, fy, tol, it);
        cuts.push_back(0.5 * (r.first + r.second));
      }
      x = y;
      fx = fy;
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cplx s = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (hi <= lo) continue;
    // nudge inside so one-sided values are used at breakpoints
    auto Fx = [&](double x) { return wkb_F(P.V(std::clamp(x, lo + 1e-14 * japanese(lo), hi - 1e-14 * japanese(hi))), zeta); };
    s += cplx(integrate_singular([&](double x) { return Fx(x).real(); }, lo, hi, 1e-13),
              integrate_singular([&](double x) { return Fx(x).imag(); }, lo, hi, 1e-13));
  }
  return s;
}

// Panelized Picard solution of the WKB Volterra system on [R, X] plus an asymptotic tail.
class WkbVolterra {
 public:
  WkbVolterra(const HalfLine& P, cplx zeta, double R, double X, const WkbOptions& opt)
      : P_(P), zeta_(zeta), R_(R), X_(X) {
    const auto& sp = SpectralPanel::get();
    const int n = SpectralPanel::n;
    for (double x = R; x < X;) {
      const double f = std::max(std::abs(wkb_F(P.V(x), zeta)), 1e-300);
      double L = std::min(1.5 / f, 0.2 * std::max(1.0, x));
      if (x + L >= X * (1 - 1e-13)) L = X - x;
      a_.push_back(x);
      len_.push_back(L);
      x += L;
      if (a_.size() > opt.max_panels)
        throw numerical_error("WkbTooManyPanels", "WKB Volterra range needs too many panels");
    }
    const std::size_t np = a_.size(), N = np * n;
    F_.resize(N);
    M_.resize(N);
    Sloc_.resize(N);
    Sp_.resize(np);
    Sstart_.resize(np + 1);
    Sstart_[0] = 0;
    for (std::size_t p = 0; p < np; ++p) {
      const double h = 0.5 * len_[p];
      for (int i = 0; i < n; ++i) {
        const double x = a_[p] + h * (1 + sp.nodes()[i]);
        F_[p * n + i] = wkb_F(P.V(x), zeta);
        M_[p * n + i] = wkb_M(P, x, zeta);
      }
      cplx tot = 0;
      for (int j = 0; j < n; ++j) tot += sp.weights()[j] * F_[p * n + j];
      Sp_[p] = h * tot;
      for (int i = 0; i < n; ++i) {
        cplx s = 0;
        for (int j = 0; j < n; ++j) s += (sp.weights()[j] - sp.right()[i * n + j]) * F_[p * n + j];
        Sloc_[p * n + i] = h * s;
      }
      Sstart_[p + 1] = Sstart_[p] + Sp_[p];
    }
    // tail beyond X: u2 = exp(int_X^inf M), u1 = -M(X) / (2 F(X)) u2
    const cplx T(integrate_tail([&](double y) { return wkb_M_tail(P, y, zeta).real(); }, X, 1e-14),
                 integrate_tail([&](double y) { return wkb_M_tail(P, y, zeta).imag(); }, X, 1e-14));
    u2X_ = std::exp(T);
    u1X_ = -wkb_M(P, X, zeta) / (2.0 * wkb_F(P.V(X), zeta)) * u2X_;

    u1_.assign(N, 0.0);
    u2_.assign(N, 1.0);
    g_.resize(N);
    hh_.resize(N);
    Aend_.resize(np);
    Bend_.resize(np);
    double prev = kInf;
    for (int it = 1;; ++it) {
      const double change = sweep();
      iterations_ = it;
      if (!std::isfinite(change) || it > opt.max_iterations || (it > 5 && change > prev))
        throw numerical_error("KernelNotContractive", "WKB Volterra iteration does not contract");
      prev = change;
      if (change < opt.picard_tol) break;
    }
    prepare();  // integrands from the converged iterate, for off-node evaluation
  }

  struct Value {
    cplx u1, u2, S;  // S = S(R, x)
  };

  Value eval(double x) const {
    const auto& sp = SpectralPanel::get();
    const int n = SpectralPanel::n;
    if (x <= R_) return eval_panel(0, -1.0, sp, n);
    if (x >= X_) return {u1X_, u2X_, Sstart_.back()};
    auto it = std::upper_bound(a_.begin(), a_.end(), x);
    const auto p = static_cast<std::size_t>(it - a_.begin()) - 1;
    const double t = std::clamp(2 * (x - a_[p]) / len_[p] - 1, -1.0, 1.0);
    return eval_panel(p, t, sp, n);
  }

  int iterations() const { return iterations_; }
  double R() const { return R_; }
  double X() const { return X_; }

 private:
  Value eval_panel(std::size_t p, double t, const SpectralPanel& sp, int n) const {
    const auto wr = sp.to_end(t);
    const double h = 0.5 * len_[p];
    cplx sloc = 0, ih = 0, ig = 0;
    for (int j = 0; j < n; ++j) {
      sloc += (sp.weights()[j] - wr[j]) * F_[p * n + j];
      ih += wr[j] * hh_[p * n + j];
      ig += wr[j] * g_[p * n + j];
    }
    sloc *= h;
    const cplx A = std::exp(2.0 * sloc) * (h * ih + std::exp(-2.0 * Sp_[p]) * Aend_[p]);
    return {-A, u2X_ + h * ig + Bend_[p], Sstart_[p] + sloc};
  }

  void prepare() {
    for (std::size_t k = 0; k < g_.size(); ++k) {
      g_[k] = M_[k] * (u1_[k] + u2_[k]);
      hh_[k] = std::exp(-2.0 * Sloc_[k]) * g_[k];
    }
    const auto& sp = SpectralPanel::get();
    const int n = SpectralPanel::n;
    cplx A = -u1X_, B = 0;
    for (std::size_t p = a_.size(); p-- > 0;) {
      Aend_[p] = A;
      Bend_[p] = B;
      const double h = 0.5 * len_[p];
      cplx sh = 0, sg = 0;
      for (int j = 0; j < n; ++j) {
        sh += sp.weights()[j] * hh_[p * n + j];
        sg += sp.weights()[j] * g_[p * n + j];
      }
      A = h * sh + std::exp(-2.0 * Sp_[p]) * A;
      B = h * sg + B;
    }
  }

  // one Picard step; returns the sup change
  double sweep() {
    prepare();
    const auto& sp = SpectralPanel::get();
    const int n = SpectralPanel::n;
    double change = 0;
    for (std::size_t p = 0; p < a_.size(); ++p) {
      const double h = 0.5 * len_[p];
      const cplx eb = std::exp(-2.0 * Sp_[p]);
      for (int i = 0; i < n; ++i) {
        cplx ih = 0, ig = 0;
        for (int j = 0; j < n; ++j) {
          ih += sp.right()[i * n + j] * hh_[p * n + j];
          ig += sp.right()[i * n + j] * g_[p * n + j];
        }
        const std::size_t k = p * n + i;
        const cplx nu1 = -std::exp(2.0 * Sloc_[k]) * (h * ih + eb * Aend_[p]);
        const cplx nu2 = u2X_ + h * ig + Bend_[p];
        change = std::max(change, std::abs(nu1 - u1_[k]) + std::abs(nu2 - u2_[k]));
        u1_[k] = nu1;
        u2_[k] = nu2;
      }
    }
    return change;
  }

  HalfLine P_;
  cplx zeta_;
  double R_, X_;
  std::vector<double> a_, len_;
  std::vector<cplx> F_, M_, Sloc_, Sp_, Sstart_;
  std::vector<cplx> u1_, u2_, g_, hh_, Aend_, Bend_;
  cplx u1X_{}, u2X_{};
  int iterations_ = 0;
};

inline double tail_abs_M(const HalfLine& P, cplx zeta, double x) {
  return integrate_tail([&](double y) { return std::abs(wkb_M_tail(P, y, zeta)); }, x, 1e-12);
}

// enlarge R until the Volterra map is a 1/2-contraction: 2 int_R^inf |M| <= 1/2
inline double contract_radius(const HalfLine& P, cplx zeta, double R) {
  for (int i = 0; i < 80; ++i) {
    if (2 * tail_abs_M(P, zeta, R) <= 0.5) return R;
    R = std::max(2 * R, 1.0);
  }
  throw numerical_error("KernelNotContractive", "no radius makes the WKB Volterra map contractive");
}

// smallest sampled point beyond which |V| <= thr (extended past the samples if needed)
inline double threshold_radius(const HalfLine& P, double thr, const std::vector<double>& ys) {
  double last_bad = -1, next_good = 0;
  bool pending = false;
  for (double y : ys) {
    if (y < 0) continue;
    if (std::abs(P.V(y)) > thr) {
      last_bad = y;
      pending = true;
    } else if (pending) {
      next_good = y;
      pending = false;
    }
  }
  if (last_bad < 0) return 0;
  if (!pending) return next_good;
  double lo = std::max(last_bad, 1.0), hi = 2 * lo;
  while (std::abs(P.V(hi)) > thr) {
    lo = hi;
    hi *= 2;
    if (hi > 1e15) throw numerical_error("KernelNotContractive", "potential does not fall below eps^2/2");
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(P.V(mid)) > thr ? lo : hi) = mid;
  }
  return hi;
}

// far end of the Volterra range
inline double far_point(const HalfLine& P, cplx zeta, double R, double ymax, const WkbOptions& opt) {
  double X = std::max({2 * R, 1.0, ymax});
  while (X < opt.x_cap) {
    const double tau = tail_abs_M(P, zeta, X);
    const double c = std::abs(wkb_M(P, X, zeta) / (2.0 * wkb_F(P.V(X), zeta)));
    if (tau <= 1e-3 && tau * c <= opt.tail_tol) break;
    X *= 2;
  }
  return std::max(X * opt.x_far_scale, ymax);
}

struct HalfLineStates {
  std::vector<OdeState> eta;  // phase origin at R: F^{-1/2} e^{-S(R, y)} (u1 + u2) for y >= R
  std::vector<cplx> u1, u2, S;  // S(R, y) for y >= R
  std::vector<bool> in_volterra;
  OdeState at_R;  // eta at y = R
  double R = 0, X = 0;
  int iterations = 0;
};

// solution decaying/outgoing at +inf of the half-line problem, sampled at ascending ys
inline HalfLineStates half_line_states(const HalfLine& P, cplx zeta, double R, const std::vector<double>& ys,
                                       const WkbOptions& opt) {
  HalfLineStates out;
  const double ymax = ys.empty() ? 0.0 : ys.back();
  const double X = far_point(P, zeta, R, ymax, opt);
  const WkbVolterra vol(P, zeta, R, X, opt);
  out.R = R;
  out.X = X;
  out.iterations = vol.iterations();
  const std::size_t n = ys.size();
  out.eta.resize(n);
  out.u1.assign(n, 0.0);
  out.u2.assign(n, 0.0);
  out.S.assign(n, 0.0);
  out.in_volterra.assign(n, false);
  auto state_at = [&](double y, std::size_t* idx) {
    const auto v = vol.eval(y);
    const cplx F = wkb_F(P.V(y), zeta);
    const cplx c = P.dV(y) / (4.0 * F * F);
    const cplx pre = std::exp(-v.S) / std::sqrt(F);
    if (idx) {
      out.u1[*idx] = v.u1;
      out.u2[*idx] = v.u2;
      out.S[*idx] = v.S;
      out.in_volterra[*idx] = true;
    }
    return OdeState{pre * (v.u1 + v.u2), pre * ((F - c) * v.u1 - (F + c) * v.u2), 0};
  };
  std::size_t split = 0;
  while (split < n && ys[split] < R) ++split;
  for (std::size_t i = split; i < n; ++i) out.eta[i] = state_at(ys[i], &i);
  out.at_R = state_at(R, nullptr);
  if (split > 0) {
    MagnusPropagator prop(P.V, zeta * zeta, P.breakpoints, opt.ode);
    OdeState s = out.at_R;
    double x = R;
    for (std::size_t i = split; i-- > 0;) {
      s = prop.advance(s, x, ys[i]);
      x = ys[i];
      out.eta[i] = s;
    }
  }
  return out;
}

inline void check_slow(const ReducedPotential& V, const WkbOptions& opt) {
  if (!opt.force && !is_slow(V.profile)) {
    if (V.profile == SignProfile::Indefinite)
      throw validation_error("IndefiniteTailSign", "potential changes sign arbitrarily far out", "profile");
    throw validation_error("QuickDecayProfile", "potential decays quickly; use jost_solve", "profile");
  }
}

inline OdeState unscaled(const OdeState& s) {
  const double e = std::exp(s.log_scale);
  return {s.y * e, s.dy * e, 0};
}

}  // namespace detail

// radius on one side: |V| <= max(eps, |zeta|)^2/2 beyond it, enlarged until the Volterra map contracts.
// Past the last turning point the normalized states do not depend on the radius, so |zeta| > eps
// only shortens the oscillatory range that has to be resolved.
inline double wkb_radius(const ReducedPotential& V, Side side, double eps, cplx zeta, const std::vector<double>& xs) {
  const auto P = detail::half_line(V, side);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(side_sign(side) * x);
  std::sort(ys.begin(), ys.end());
  const double e = std::max(eps, std::abs(zeta));
  const double R = detail::threshold_radius(P, 0.5 * e * e, ys);
  return detail::contract_radius(P, zeta, R);
}

inline WkbSolution wkb_solve(const ReducedPotential& V, cplx zeta, Side side, double eps, const Grid& grid,
                             const WkbOptions& opt = {}) {
  detail::check_slow(V, opt);
  if (!(eps > 0)) throw validation_error("BadParams", "eps must be positive", "eps");
  if (std::abs(zeta) < eps) throw validation_error("ZetaTooSmall", "|zeta| < eps", "zeta");
  if (zeta.imag() < 0) throw validation_error("BadMomentum", "Im zeta must be >= 0", "zeta");
  const double s = side_sign(side);
  const auto P = detail::half_line(V, side);
  const std::size_t n = grid.size();
  // ascending half-line coordinates y = s x
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = s * grid.x[side == Side::Plus ? i : n - 1 - i];
  const double R = wkb_radius(V, side, eps, zeta, grid.x);
  const auto st = detail::half_line_states(P, zeta, R, ys, opt);
  const cplx S0R = detail::phase_integral(P, zeta, 0, R);
  const bool real_k = zeta.imag() == 0;
  const double ak = std::abs(zeta);

  WkbSolution sol;
  sol.side = side;
  sol.zeta = zeta;
  sol.eps = eps;
  sol.R = R;
  sol.X = st.X;
  sol.grid = grid;
  sol.S0R = S0R;
  sol.iterations = st.iterations;
  sol.eta.resize(n);
  sol.eta_prime.resize(n);
  sol.u1.resize(n);
  sol.u2.resize(n);
  sol.F.resize(n);
  sol.S.resize(n);
  sol.in_volterra.resize(n);
  if (real_k) {
    sol.theta.resize(n);
    sol.theta_prime.resize(n);
  }
  const cplx eS0 = std::exp(-S0R);
  const cplx th = std::sqrt(ak) * std::exp(cplx(0, -S0R.imag()));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = side == Side::Plus ? j : n - 1 - j;  // grid index of ys[j]
    const auto e = detail::unscaled(st.eta[j]);
    // back to x: eta(x) = eta_half(s x), eta'(x) = s eta_half'(s x)
    sol.eta[i] = eS0 * e.y;
    sol.eta_prime[i] = s * eS0 * e.dy;
    if (real_k) {
      sol.theta[i] = th * e.y;
      sol.theta_prime[i] = s * th * e.dy;
    }
    sol.F[i] = detail::wkb_F(V(grid.x[i]), zeta);
    sol.in_volterra[i] = st.in_volterra[j];
    sol.u1[i] = st.u1[j];
    sol.u2[i] = st.u2[j];
    // S(0, x) = s * S_half(0, s x)
    const cplx Sh = st.in_volterra[j] ? S0R + st.S[j] : detail::phase_integral(P, zeta, 0, ys[j]);
    sol.S[i] = s * Sh;
  }
  return sol;
}

struct WkbSideStates {
  std::vector<OdeState> theta;  // at the requested points
  OdeState theta_R;             // at x = +-R, where theta is O(1)
  double R = 0;
};

// normalized theta_+-(., k) at the given points (real k, |k| >= eps)
inline WkbSideStates wkb_side_states(const ReducedPotential& V, double k, Side side, double eps,
                                     const std::vector<double>& xs, const WkbOptions& opt = {}) {
  if (std::abs(k) < eps) throw validation_error("ZetaTooSmall", "|k| < eps", "k");
  const double s = side_sign(side);
  const auto P = detail::half_line(V, side);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(s * x);
  std::vector<std::size_t> order(ys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });
  std::vector<double> sorted(ys.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = ys[order[i]];
  const double R = wkb_radius(V, side, eps, k, xs);
  const auto st = detail::half_line_states(P, k, R, sorted, opt);
  const cplx S0R = detail::phase_integral(P, k, 0, R);
  const cplx th = std::sqrt(std::abs(k)) * std::exp(cplx(0, -S0R.imag()));
  WkbSideStates out;
  out.theta.resize(xs.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto e = detail::unscaled(st.eta[j]);
    out.theta[order[j]] = {th * e.y, s * th * e.dy, 0};
  }
  out.theta_R = {th * st.at_R.y, s * th * st.at_R.dy, 0};
  out.R = R;
  return out;
}

inline std::vector<OdeState> wkb_states(const ReducedPotential& V, double k, Side side, double eps,
                                        const std::vector<double>& xs, const WkbOptions& opt = {}) {
  return wkb_side_states(V, k, side, eps, xs, opt).theta;
}

// theta_+- on a grid for either decay profile (Jost for quick decay, WKB otherwise)
inline std::vector<OdeState> continuum_states(const ReducedPotential& V, double k, Side side,
                                              const std::vector<double>& xs, double eps,
                                              const JostOptions& jopt = {}, const WkbOptions& wopt = {}) {
  if (V.profile == SignProfile::QuickDecay) {
    auto st = jost_states(V, k, side, xs, jopt);
    for (auto& s : st) s = detail::unscaled(s);
    return st;
  }
  return wkb_states(V, k, side, eps, xs, wopt);
}

inline ScatteringData wkb_scattering(const ReducedPotential& V, const std::vector<double>& k_grid, double eps,
                                     const WkbOptions& opt = {}) {
  detail::check_slow(V, opt);
  if (k_grid.empty() || !std::is_sorted(k_grid.begin(), k_grid.end()) || !(k_grid.front() > 0))
    throw validation_error("BadGrid", "k grid must be sorted and positive", "k_grid");
  if (k_grid.front() < eps) throw validation_error("ZetaTooSmall", "k grid starts below eps", "k_grid");
  const std::size_t n = k_grid.size();
  ScatteringData sd;
  sd.k_grid = k_grid;
  sd.w.resize(n);
  sd.m.resize(n);
  sd.m_pp.resize(n);
  sd.m_mm.resize(n);
  sd.wronskian_spread.resize(n);
  sd.normalization_defect.resize(n);
  const auto& pts = wronskian_points();
  const std::size_t zi = 2;
  const cplx i(0, 1);
  auto conj_states = [](std::vector<OdeState> v) {
    for (auto& s : v) s = {std::conj(s.y), std::conj(s.dy), s.log_scale};
    return v;
  };
  parallel_for(n, [&](std::size_t j) {
    const double k = k_grid[j];
    const auto sp = wkb_side_states(V, k, Side::Plus, eps, pts, opt);
    const auto sm = wkb_side_states(V, k, Side::Minus, eps, pts, opt);
    const auto& tp = sp.theta;
    const auto& tm = sm.theta;
    const auto tp_neg = conj_states(tp), tm_neg = conj_states(tm);
    const auto W = sampled_wronskian(tp, tm, zi);
    sd.w[j] = W.w;
    sd.m[j] = W.w / (2.0 * i * k);
    sd.m_pp[j] = -sampled_wronskian(tp_neg, tm, zi).w / (2.0 * i * k);
    sd.m_mm[j] = -sampled_wronskian(tp, tm_neg, zi).w / (2.0 * i * k);
    sd.wronskian_spread[j] = W.spread;
    // W(theta(k), theta(-k)) is x-independent; evaluate it at +-R where it is well conditioned
    auto self_w = [](const OdeState& a) { return wronskian(a, {std::conj(a.y), std::conj(a.dy), 0}); };
    const cplx np = self_w(sp.theta_R), nm = self_w(sm.theta_R);
    sd.normalization_defect[j] =
        std::max(std::abs(np - 2.0 * i * k), std::abs(nm + 2.0 * i * k)) / (2 * std::abs(k));
  });
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(std::abs(sd.m[j])) || !std::isfinite(std::abs(sd.m_pp[j])) || !std::isfinite(std::abs(sd.m_mm[j])))
      throw numerical_error("ScatteringOverflow", "scattering coefficients overflow at k = " + std::to_string(k_grid[j]));
    if (sd.wronskian_spread[j] > 1e-8)
      throw numerical_error("WronskianDrift", "Wronskian not constant in x at k = " + std::to_string(k_grid[j]));
    if (sd.normalization_defect[j] > 1e-6)
      throw numerical_error("NormalizationDefect", "W(theta(k), theta(-k)) != +-2ik at k = " + std::to_string(k_grid[j]));
  }
  const std::size_t q = std::min<std::size_t>(4, n);
  sd.w0 = extrapolate_to_zero(std::vector<double>(k_grid.begin(), k_grid.begin() + static_cast<long>(q)),
                              std::vector<cplx>(sd.w.begin(), sd.w.begin() + static_cast<long>(q)));
  return sd;
}

struct WkbResonanceOptions {
  double tol_res = 1e-4;
  WkbOptions wkb{};
};

struct WkbResonanceResult {
  cplx m0{};             // W(eta_+(., 0), eta_-(., 0)) at x = 0, up to a positive normalization
  double relative = 0;   // |W| / ((|eta_+| + |eta_+'|)(|eta_-| + |eta_-'|)) at x = 0
  double spread = 0;     // relative Wronskian spread over x in {-1, 0, 1}
  bool is_resonance = false;
  double R_plus = 0, R_minus = 0, X_plus = 0, X_minus = 0;
};

namespace detail {

// R for zero energy: tail sign fixed beyond R and the Volterra map contracts
inline double zero_energy_radius(const HalfLine& P, const std::vector<double>& ys) {
  double R = 0;
  double tail_sign = 0;
  for (auto it = ys.rbegin(); it != ys.rend(); ++it) {
    if (*it < 0) break;
    const double v = P.V(*it);
    const double sg = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    if (tail_sign == 0) tail_sign = sg;
    if (sg != tail_sign || sg == 0) {
      R = *it;
      break;
    }
  }
  if (tail_sign == 0) throw validation_error("IndefiniteTailSign", "potential vanishes at the end of the grid");
  return contract_radius(P, 0.0, std::max(R, 1.0));
}

}  // namespace detail

inline WkbResonanceResult wkb_resonance(const ReducedPotential& V, const Grid& grid,
                                        const WkbResonanceOptions& opt = {}) {
  detail::check_slow(V, opt.wkb);
  WkbResonanceResult r;
  std::vector<std::vector<OdeState>> st;
  for (Side side : {Side::Plus, Side::Minus}) {
    const double s = side_sign(side);
    const auto P = detail::half_line(V, side);
    std::vector<double> ys;
    for (double x : grid.x) ys.push_back(s * x);
    std::sort(ys.begin(), ys.end());
    const double R = detail::zero_energy_radius(P, ys);
    const std::vector<double> q{-1, 0, 1};  // symmetric, so the same in half-line coordinates
    const auto h = detail::half_line_states(P, 0.0, R, q, opt.wkb);
    std::vector<OdeState> v(3);
    for (std::size_t j = 0; j < 3; ++j) {
      // pts[j] = s * q[idx]
      const auto e = detail::unscaled(h.eta[side == Side::Plus ? j : 2 - j]);
      v[j] = {e.y, s * e.dy, 0};
    }
    st.push_back(v);
    (side == Side::Plus ? r.R_plus : r.R_minus) = R;
    (side == Side::Plus ? r.X_plus : r.X_minus) = h.X;
  }
  const auto W = sampled_wronskian(st[0], st[1], 1);
  r.m0 = W.w;
  r.spread = W.spread;
  const auto& a = st[0][1];
  const auto& b = st[1][1];
  const double scale = a.norm() * b.norm();
  r.relative = scale > 0 ? std::abs(W.w) / scale : 0;
  r.is_resonance = r.relative < opt.tol_res;
  return r;
}

}  // namespace pphi2
