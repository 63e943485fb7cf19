#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/core/parallel.hpp"
#include "pphi2/core/quadrature.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/propagator.hpp"

namespace pphi2 {

enum class Side { Plus, Minus };

inline double side_sign(Side s) { return s == Side::Plus ? 1.0 : -1.0; }

struct JostOptions {
  double tail_tol = 1e-10;  // bound on int_{x_match}^inf y |V(y)| dy
  double x_cap = 2e4;       // farthest allowed matching point
  PropagatorOptions ode{};
};

struct JostSolution {
  Side side = Side::Plus;
  cplx zeta{};
  Grid grid;
  std::vector<cplx> theta, theta_prime;
  double x_match = 0;
  bool asymptotic_tail = false;  // true when the tail tolerance was not reachable
  double picard_defect = 0;      // max |theta - two Picard iterates| on the check interval
  double picard_bound = 0;       // Volterra remainder bound for that difference
};

namespace detail {

// |x_match| such that the tail moment of V beyond it is below tol (searched on the given side)
inline double matching_point(const ReducedPotential& V, Side side, const JostOptions& opt, bool& reached) {
  reached = true;
  if (std::isfinite(V.support)) return V.support;
  const double s = side_sign(side);
  const Sampler f = V.V;
  auto tail = [&](double x) {
    return integrate_adaptive([&](double t) { return t * std::abs(f(s * t)); }, x, kInf, 1e-3 * opt.tail_tol);
  };
  double hi = 1;
  while (tail(hi) >= opt.tail_tol) {
    hi *= 2;
    if (hi > opt.x_cap) {
      reached = false;
      return opt.x_cap;
    }
  }
  double lo = hi / 2;
  if (tail(lo) < opt.tail_tol) return lo;
  for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) < opt.tail_tol ? hi : lo) = mid;
  }
  return hi;
}

// initial data at x_match: e^{+-ikx}, or its Liouville-Green refinement when V is not negligible there
inline OdeState jost_initial(const ReducedPotential& V, double k, Side side, double xm, bool asymptotic) {
  const double s = side_sign(side);
  const cplx i(0, 1);
  if (!asymptotic) {
    const cplx e = std::exp(i * (s * k * xm));
    return {e, i * (s * k) * e, 0};
  }
  // p = (k^2 - V)^(1/2); theta ~ (k/p)^(1/2) exp(i s (k x + int_x^inf (k - p)))
  const Sampler f = V.V;
  auto p = [&](double x) { return std::sqrt(cplx(k * k - f(x), 0)); };
  const double ak = std::abs(k);
  auto excess_re = [&](double t) { return (ak - p(s * t)).real(); };
  auto excess_im = [&](double t) { return (ak - p(s * t)).imag(); };
  const double ax = std::abs(xm);
  const cplx phase_tail(integrate_adaptive(excess_re, ax, kInf, 1e-14), integrate_adaptive(excess_im, ax, kInf, 1e-14));
  const cplx pm = p(xm);
  const double sk = k > 0 ? 1.0 : -1.0;
  const cplx val = std::sqrt(ak / pm) * std::exp(i * sk * (s * ak * xm + phase_tail));
  const cplx dV = V.dV(xm);
  return {val, (i * (s * sk) * pm + dV / (4.0 * pm * pm)) * val, 0};
}

// Two Picard iterates of the Volterra equation on [x_match - 5, x_match] (mirrored for Minus).
inline void picard_check(const ReducedPotential& V, double k, Side side, double xm, JostSolution& sol,
                         MagnusPropagator& prop, const OdeState& init) {
  const double s = side_sign(side);
  // work in t = s x so that the kernel always integrates to the right
  const double t_hi = s * xm, t_lo = t_hi - 5;
  std::vector<double> cuts{t_lo};
  for (double b : V.breakpoints)
    if (s * b > t_lo && s * b < t_hi) cuts.push_back(s * b);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(t_hi);
  const double h_target = std::min(2.5e-3, 0.01 / std::max(1.0, std::abs(k)));
  std::vector<double> t, Vt;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const auto n = static_cast<std::size_t>(std::ceil((cuts[c + 1] - cuts[c]) / h_target));
    for (std::size_t j = 0; j <= n; ++j) {
      const double tt = cuts[c] + (cuts[c + 1] - cuts[c]) * static_cast<double>(j) / static_cast<double>(n);
      // sample V from inside the current segment
      const double nudge = j == 0 ? 1e-12 : (j == n ? -1e-12 : 0.0);
      t.push_back(tt);
      Vt.push_back(V.V(s * (tt + nudge)));
    }
  }
  const std::size_t N = t.size();
  const cplx i(0, 1);
  std::vector<cplx> u0(N), u1(N), u2(N);
  for (std::size_t j = 0; j < N; ++j) u0[j] = std::exp(i * (k * t[j]));
  // (K u)(t) = k^{-1} int_t^{t_hi} sin(k (r - t)) V u dr, accumulated from the right
  auto apply_K = [&](const std::vector<cplx>& u, std::vector<cplx>& out) {
    cplx Ss = 0, Sc = 0;
    out[N - 1] = 0;
    for (std::size_t j = N - 1; j-- > 0;) {
      const double dt = t[j + 1] - t[j];
      if (dt > 0) {
        const cplx fs1 = std::sin(k * t[j + 1]) * Vt[j + 1] * u[j + 1], fs0 = std::sin(k * t[j]) * Vt[j] * u[j];
        const cplx fc1 = std::cos(k * t[j + 1]) * Vt[j + 1] * u[j + 1], fc0 = std::cos(k * t[j]) * Vt[j] * u[j];
        Ss += 0.5 * dt * (fs0 + fs1);
        Sc += 0.5 * dt * (fc0 + fc1);
      }
      out[j] = (std::cos(k * t[j]) * Ss - std::sin(k * t[j]) * Sc) / k;
    }
  };
  std::vector<cplx> k1(N), k2(N);
  apply_K(u0, k1);
  apply_K(k1, k2);
  for (std::size_t j = 0; j < N; ++j) u2[j] = u0[j] + k1[j] + k2[j];

  // remainder bound B(t) = int_t^{t_hi} min(r - t, 1/|k|) |V(r)| dr, worst case at t_lo
  double B = 0;
  for (std::size_t j = 0; j + 1 < N; ++j) {
    const double dt = t[j + 1] - t[j];
    const auto w = [&](std::size_t m) { return std::min(t[m] - t_lo, 1 / std::abs(k)) * std::abs(Vt[m]); };
    B += 0.5 * dt * (w(j) + w(j + 1));
  }
  sol.picard_bound = std::exp(B) - 1 - B - 0.5 * B * B;

  // compare against the integrated solution, sampled every ~0.05
  double defect = 0;
  OdeState st = init;
  double x = xm;
  const std::size_t stride = std::max<std::size_t>(1, N / 100);
  for (std::size_t jj = N; jj-- > 0;) {
    if (jj % stride != 0 && jj != 0) continue;
    const double xx = s * t[jj];
    st = prop.advance(st, x, xx);
    x = xx;
    defect = std::max(defect, std::abs(st.y * std::exp(st.log_scale) - u2[jj]));
  }
  sol.picard_defect = defect;
}

}  // namespace detail

// theta_{+-}(x, k) sampled at arbitrary sorted points
inline std::vector<OdeState> jost_states(const ReducedPotential& V, double k, Side side,
                                         const std::vector<double>& points, const JostOptions& opt = {},
                                         double* x_match_out = nullptr, bool* asymptotic_out = nullptr) {
  if (k == 0) throw validation_error("BadMomentum", "Jost solutions need k != 0", "k");
  bool reached = true;
  const double xm = side_sign(side) * detail::matching_point(V, side, opt, reached);
  const OdeState init = detail::jost_initial(V, k, side, xm, !reached);
  MagnusPropagator prop(V.V, cplx(k * k, 0), V.breakpoints, opt.ode);
  if (x_match_out) *x_match_out = xm;
  if (asymptotic_out) *asymptotic_out = !reached;
  return propagate_to_nodes(prop, points, xm, init);
}

inline JostSolution jost_solve(const ReducedPotential& V, double k, Side side, const Grid& grid,
                               const JostOptions& opt = {}) {
  if (V.profile != SignProfile::QuickDecay)
    throw validation_error("SlowDecayProfile", "potential decays slowly; use the WKB pipeline", "profile");
  JostSolution sol;
  sol.side = side;
  sol.zeta = k;
  sol.grid = grid;
  const auto st = jost_states(V, k, side, grid.x, opt, &sol.x_match, &sol.asymptotic_tail);
  sol.theta.resize(st.size());
  sol.theta_prime.resize(st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    const double sc = std::exp(st[i].log_scale);
    sol.theta[i] = st[i].y * sc;
    sol.theta_prime[i] = st[i].dy * sc;
  }
  const OdeState init = detail::jost_initial(V, k, side, sol.x_match, sol.asymptotic_tail);
  MagnusPropagator prop(V.V, cplx(k * k, 0), V.breakpoints, opt.ode);
  detail::picard_check(V, k, side, sol.x_match, sol, prop, init);
  if (!sol.asymptotic_tail && sol.picard_defect > sol.picard_bound + 1e-6)
    throw numerical_error("JostCrossCheckFailed", "integrated Jost solution disagrees with Picard iterates");
  return sol;
}

// max_i |-u'' + (V - z) u| / max|u| over interior nodes of a uniform stretch, using
// Richardson-corrected second differences; nodes within 2h of a breakpoint are skipped
template <class T>
double eigen_residual(const ReducedPotential& V, cplx z, const Grid& grid, const std::vector<T>& u) {
  double umax = 0;
  for (const auto& v : u) umax = std::max(umax, std::abs(v));
  if (umax == 0) return 0;
  double res = 0;
  for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
    const double h = grid.x[i + 1] - grid.x[i];
    if (std::abs((grid.x[i] - grid.x[i - 1]) - h) > 1e-9 * h || std::abs((grid.x[i + 2] - grid.x[i]) - 2 * h) > 1e-9 * h ||
        std::abs((grid.x[i] - grid.x[i - 2]) - 2 * h) > 1e-9 * h)
      continue;
    bool near_break = false;
    for (double b : V.breakpoints) near_break |= std::abs(grid.x[i] - b) <= 2.5 * h;
    if (near_break) continue;
    const auto d1 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    const auto d2 = (u[i + 2] - 2.0 * u[i] + u[i - 2]) / (4 * h * h);
    const auto d = (4.0 * d1 - d2) / 3.0;
    res = std::max(res, std::abs(-d + (V.V(grid.x[i]) - z) * u[i]));
  }
  return res / umax;
}

struct ScatteringData {
  std::vector<double> k_grid;
  std::vector<cplx> w, m, m_pp, m_mm;
  std::vector<double> wronskian_spread;  // relative to |theta+' theta-| + |theta+ theta-'|
  std::vector<double> normalization_defect;  // |W(theta(k), theta(-k)) -+ 2ik| / 2|k| (WKB path)
  cplx w0{};
  bool resonance_flag = false;

  double unitarity_defect(std::size_t j) const {
    const double a = std::norm(m[j]);
    return std::max(std::abs(a - 1 - std::norm(m_pp[j])), std::abs(a - 1 - std::norm(m_mm[j])));
  }

  // the same defect measured against |m|^2; the absolute one is lost to round-off once |m| >> 1
  double relative_unitarity_defect(std::size_t j) const {
    return unitarity_defect(j) / std::max(1.0, std::norm(m[j]));
  }
};

// polynomial extrapolation of (k_i, f_i) to k = 0 (Neville)
inline cplx extrapolate_to_zero(const std::vector<double>& k, const std::vector<cplx>& f) {
  std::vector<cplx> p(f);
  const std::size_t n = p.size();
  for (std::size_t lev = 1; lev < n; ++lev)
    for (std::size_t i = 0; i + lev < n; ++i)
      p[i] = (k[i + lev] * p[i] - k[i] * p[i + 1]) / (k[i + lev] - k[i]);
  return p[0];
}

struct WronskianSample {
  cplx w;
  double spread;
};

// W(f, g) at x = 0 plus its relative spread over five points
inline WronskianSample sampled_wronskian(const std::vector<OdeState>& f, const std::vector<OdeState>& g,
                                         std::size_t zero_index) {
  auto unscale = [](const OdeState& s) {
    const double e = std::exp(s.log_scale);
    return OdeState{s.y * e, s.dy * e, 0};
  };
  const OdeState f0 = unscale(f[zero_index]), g0 = unscale(g[zero_index]);
  const cplx W0 = wronskian(f0, g0);
  const double scale = std::abs(f0.dy * g0.y) + std::abs(f0.y * g0.dy);
  double spread = 0;
  for (std::size_t j = 0; j < f.size(); ++j)
    spread = std::max(spread, std::abs(wronskian(unscale(f[j]), unscale(g[j])) - W0));
  return {W0, scale > 0 ? spread / scale : 0};
}

inline const std::vector<double>& wronskian_points() {
  static const std::vector<double> pts{-2, -1, 0, 1, 2};
  return pts;
}

inline ScatteringData scattering_data(const ReducedPotential& V, const std::vector<double>& k_grid,
                                      const JostOptions& opt = {}) {
  if (V.profile != SignProfile::QuickDecay)
    throw validation_error("SlowDecayProfile", "potential decays slowly; use wkb_scattering", "profile");
  if (k_grid.empty() || !std::is_sorted(k_grid.begin(), k_grid.end()) || !(k_grid.front() > 0))
    throw validation_error("BadGrid", "k grid must be sorted and positive", "k_grid");
  const std::size_t n = k_grid.size();
  ScatteringData sd;
  sd.k_grid = k_grid;
  sd.w.resize(n);
  sd.m.resize(n);
  sd.m_pp.resize(n);
  sd.m_mm.resize(n);
  sd.wronskian_spread.resize(n);
  const auto& pts = wronskian_points();
  const std::size_t zi = 2;
  const cplx i(0, 1);
  parallel_for(n, [&](std::size_t j) {
    const double k = k_grid[j];
    const auto tp = jost_states(V, k, Side::Plus, pts, opt);
    const auto tm = jost_states(V, k, Side::Minus, pts, opt);
    const auto tp_neg = jost_states(V, -k, Side::Plus, pts, opt);
    const auto tm_neg = jost_states(V, -k, Side::Minus, pts, opt);
    const auto W = sampled_wronskian(tp, tm, zi);
    sd.w[j] = W.w;
    sd.m[j] = W.w / (2.0 * i * k);
    sd.m_pp[j] = -sampled_wronskian(tp_neg, tm, zi).w / (2.0 * i * k);
    sd.m_mm[j] = -sampled_wronskian(tp, tm_neg, zi).w / (2.0 * i * k);
    sd.wronskian_spread[j] = W.spread;
  });
  for (std::size_t j = 0; j < n; ++j)
    if (sd.wronskian_spread[j] > 1e-8)
      throw numerical_error("WronskianDrift", "Wronskian not constant in x at k = " + std::to_string(k_grid[j]));
  const std::size_t q = std::min<std::size_t>(4, n);
  sd.w0 = extrapolate_to_zero(std::vector<double>(k_grid.begin(), k_grid.begin() + static_cast<long>(q)),
                              std::vector<cplx>(sd.w.begin(), sd.w.begin() + static_cast<long>(q)));
  return sd;
}

}  // namespace pphi2
