#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/jost.hpp"

namespace pphi2 {

struct ResonanceOptions {
  double tol_res = 1e-4;
  double k_ref = 1.0;
  std::vector<double> k_extrapolation{1e-3, 2e-3, 3e-3, 4e-3};
  double h = 2e-3;          // base step of the zero-energy quadrature
  double picard_tol = 1e-12;
  JostOptions jost{};
};

struct ResonanceResult {
  cplx w0{};             // direct zero-energy Wronskian
  cplx w0_extrapolated{};
  double w_ref = 0;      // |w(k_ref)|
  bool is_resonance = false;
  int picard_iterations = 0;
};

namespace detail {

struct ZeroEnergyValue {
  double u = 1, du = 0;
  int iterations = 0;
};

// u(t) = 1 + int_t^T (r - t) W(r) u(r) dr on [0, T] with W(r) = V(s r); returns u(0) and u'(0) in t
inline ZeroEnergyValue zero_energy_volterra(const ReducedPotential& V, double s, double T, double h, double tol) {
  std::vector<double> cuts{0.0};
  for (double b : V.breakpoints)
    if (s * b > 0 && s * b < T) cuts.push_back(s * b);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(T);
  std::vector<double> t, w;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((cuts[c + 1] - cuts[c]) / h)));
    for (std::size_t j = 0; j <= n; ++j) {
      const double tt = cuts[c] + (cuts[c + 1] - cuts[c]) * static_cast<double>(j) / static_cast<double>(n);
      const double nudge = j == 0 ? 1e-12 : (j == n ? -1e-12 : 0.0);
      t.push_back(tt);
      w.push_back(V.V(s * (tt + nudge)));
    }
  }
  const std::size_t N = t.size();
  std::vector<double> u(N, 1.0), next(N);
  ZeroEnergyValue out;
  double du0 = 0;
  for (int it = 1; it <= 500; ++it) {
    // Y0(t) = int_t^T W u, Y1(t) = int_t^T r W u
    double Y0 = 0, Y1 = 0;
    next[N - 1] = 1;
    for (std::size_t j = N - 1; j-- > 0;) {
      const double dt = t[j + 1] - t[j];
      Y0 += 0.5 * dt * (w[j] * u[j] + w[j + 1] * u[j + 1]);
      Y1 += 0.5 * dt * (t[j] * w[j] * u[j] + t[j + 1] * w[j + 1] * u[j + 1]);
      next[j] = 1 + Y1 - t[j] * Y0;
    }
    du0 = -Y0;
    double change = 0;
    for (std::size_t j = 0; j < N; ++j) change = std::max(change, std::abs(next[j] - u[j]));
    u.swap(next);
    out.iterations = it;
    if (change < tol) break;
    if (it == 500) throw numerical_error("PicardNotConverged", "zero-energy Volterra iteration did not converge");
  }
  out.u = u[0];
  out.du = du0;
  return out;
}

inline ZeroEnergyValue zero_energy_richardson(const ReducedPotential& V, double s, double T, double h, double tol) {
  const auto a = zero_energy_volterra(V, s, T, h, tol);
  const auto b = zero_energy_volterra(V, s, T, 0.5 * h, tol);
  return {(4 * b.u - a.u) / 3, (4 * b.du - a.du) / 3, std::max(a.iterations, b.iterations)};
}

}  // namespace detail

// W(theta+(.,0), theta-(.,0)) from the zero-energy Volterra equations
inline cplx zero_energy_wronskian(const ReducedPotential& V, double h = 2e-3, double tol = 1e-12,
                                  const JostOptions& jopt = {}, int* iterations = nullptr) {
  bool reached = true;
  const double Tp = detail::matching_point(V, Side::Plus, jopt, reached);
  const double Tm = detail::matching_point(V, Side::Minus, jopt, reached);
  const auto p = detail::zero_energy_richardson(V, 1.0, std::max(Tp, 1e-9), h, tol);
  const auto m = detail::zero_energy_richardson(V, -1.0, std::max(Tm, 1e-9), h, tol);
  if (iterations) *iterations = std::max(p.iterations, m.iterations);
  // in x: theta+' = p.du, theta-' = -m.du
  return p.du * m.u - p.u * (-m.du);
}

inline ResonanceResult detect_resonance(const ReducedPotential& V, const ResonanceOptions& opt = {}) {
  if (V.profile != SignProfile::QuickDecay)
    throw validation_error("SlowDecayProfile", "potential decays slowly; use wkb_resonance", "profile");
  ResonanceResult r;
  r.w0 = zero_energy_wronskian(V, opt.h, opt.picard_tol, opt.jost, &r.picard_iterations);
  std::vector<double> ks = opt.k_extrapolation;
  ks.push_back(opt.k_ref);
  std::sort(ks.begin(), ks.end());
  const auto sd = scattering_data(V, ks, opt.jost);
  r.w0_extrapolated = sd.w0;
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (ks[j] == opt.k_ref) r.w_ref = std::abs(sd.w[j]);
  const double scale = std::max(1.0, r.w_ref);
  if (std::abs(r.w0 - r.w0_extrapolated) > 10 * opt.tol_res * scale)
    throw numerical_error("InconclusiveResonance", "direct and extrapolated zero-energy Wronskians disagree");
  r.is_resonance = std::abs(r.w0) < opt.tol_res * scale;
  return r;
}

}  // namespace pphi2
