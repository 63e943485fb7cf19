#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/core/fit.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/core/integrability.hpp"
#include "pphi2/phi2/polynomial.hpp"
#include "pphi2/schrodinger/eigenbasis.hpp"

namespace pphi2 {

enum class WeightKind { One, PowerAlpha, PowerMuQuarter, WindowedOne };

// M : R -> [1, +inf]; 1/M is taken as 0 where M = +inf
struct WeightFunction {
  WeightKind kind = WeightKind::One;
  double alpha = 0;  // PowerAlpha exponent, or mu for PowerMuQuarter
  double R = 0;      // WindowedOne half width

  static WeightFunction one() { return {}; }
  static WeightFunction power(double a) {
    if (!(a >= 0)) throw validation_error("BadParams", "weight exponent must be non-negative", "weight");
    return {WeightKind::PowerAlpha, a, 0};
  }
  static WeightFunction mu_quarter(double mu) {
    if (!(mu > 0)) throw validation_error("BadParams", "mu must be positive", "weight");
    return {WeightKind::PowerMuQuarter, mu, 0};
  }
  static WeightFunction windowed(double R) {
    if (!(R > 0)) throw validation_error("BadParams", "window half width must be positive", "weight");
    return {WeightKind::WindowedOne, 0, R};
  }

  double operator()(double x) const {
    switch (kind) {
      case WeightKind::One: return 1.0;
      case WeightKind::PowerAlpha: return std::pow(japanese(x), alpha);
      case WeightKind::PowerMuQuarter: return std::pow(japanese(x), 0.25 * alpha);
      case WeightKind::WindowedOne: return std::abs(x) <= R ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return 1.0;
  }
  double inverse(double x) const {
    const double m = (*this)(x);
    return std::isinf(m) ? 0.0 : 1.0 / m;
  }
  bool finite(double x) const { return std::isfinite((*this)(x)); }
};

struct Bm1Report {
  double sum = 0;
  std::vector<double> summands;  // sup_x |psi_l / M|^2 per level
  double decay_slope = 0;        // fitted d log(summand) / dl, 0 when fewer than 3 levels
  bool pass = true;
};

inline Bm1Report check_bm1(const std::vector<BoundState>& bound, const Grid& x, const WeightFunction& M) {
  Bm1Report r;
  for (const auto& b : bound) {
    if (b.psi.size() != x.size()) throw validation_error("BadGrid", "bound state does not live on the grid");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s = std::max(s, std::abs(b.psi[i]) * M.inverse(x[i]));
    r.summands.push_back(s * s);
    r.sum += s * s;
  }
  if (r.summands.size() >= 3) {
    std::vector<double> l, y;
    for (std::size_t i = 0; i < r.summands.size(); ++i)
      if (r.summands[i] > 0) l.push_back(static_cast<double>(i)), y.push_back(std::log(r.summands[i]));
    if (l.size() >= 3) r.decay_slope = fit_line(l, y).slope;
  }
  r.pass = std::isfinite(r.sum);
  return r;
}

struct Bm2Report {
  std::vector<double> k;    // |k| per positive node, ascending
  std::vector<double> sup;  // sup_x |psi(x, +-k)| / M(x), maximum over both signs
  double alpha_fit = 0;     // small-k exponent: sup ~ C |k|^(-alpha_fit) over the lowest decade
  double C = 0;             // max_k sup / sup(1, |k|^-alpha)
  bool pass = false;
  std::vector<std::string> caveats;
};

// (BM2) for alpha = 0, (BM2') for 0 < alpha < 1/2; fitted exponents within alpha_tol of the bound pass
inline Bm2Report check_bm2(const GeneralizedEigenbasis& b, const WeightFunction& M, double alpha,
                           double alpha_tol = 0.05) {
  if (!(alpha >= 0) || !(alpha < 0.5))
    throw validation_error("BadParams", "alpha must lie in [0, 1/2)", "alpha");
  b.k.validate();
  Bm2Report r;
  const std::size_t nh = b.k.half();
  for (std::size_t j = 0; j < nh; ++j) {
    double s = 0;
    for (auto col : {b.k.pos(j), b.k.neg(j)})
      for (std::size_t i = 0; i < b.x.size(); ++i)
        s = std::max(s, std::abs(b.continuum(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col))) *
                            M.inverse(b.x[i]));
    r.k.push_back(b.k.k[b.k.pos(j)]);
    r.sup.push_back(s);
  }
  const double kmin = r.k.front();
  if (b.profile == SignProfile::QuickDecay && kmin > 1e-3)
    r.caveats.push_back("smallest momentum " + std::to_string(kmin) + " is above 1e-3");
  if (b.profile != SignProfile::QuickDecay)
    r.caveats.push_back("slowly decaying potential: momenta below eps = " + std::to_string(kmin) + " are not sampled");
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < nh; ++j)
    if (r.k[j] <= 10 * kmin * (1 + 1e-12) && r.sup[j] > 0) lx.push_back(std::log(r.k[j])), ly.push_back(std::log(r.sup[j]));
  if (lx.size() < 3) throw validation_error("BadGrid", "need at least 3 momenta in the lowest decade", "k_grid");
  r.alpha_fit = -fit_line(lx, ly).slope;
  for (std::size_t j = 0; j < nh; ++j) r.C = std::max(r.C, r.sup[j] / std::max(1.0, std::pow(r.k[j], -alpha)));
  r.pass = std::isfinite(r.C) && r.alpha_fit <= alpha + alpha_tol;
  return r;
}

struct Bm3Entry {
  int p = 0, s = 0;
  double l2 = 0, l1 = 0;  // int (g |a_p| M^s)^2, int g (|a_p| M^s)^(2n/(2n-p+s))
  bool l2_finite = true, l1_finite = true;
  bool pass() const { return l2_finite && l1_finite; }
};

struct Bm3Report {
  std::vector<Bm3Entry> table;
  bool pass = true;
};

// (BM3) for 0 <= s <= p <= 2n-1
inline Bm3Report check_bm3(const WickPolynomial& P, const WeightFunction& M) {
  P.validate();
  if (M.kind == WeightKind::WindowedOne) {
    // supp g must lie strictly inside the window
    std::vector<double> ts;
    for (int j = 0; j <= 2000; ++j) ts.push_back(M.R * (1 + 1e-9 + j / 1000.0));
    for (int j = 2; j <= 60; ++j) ts.push_back(std::ldexp(M.R, j));
    for (double t : ts) {
      for (double x : {t, -t})
        if (P.g(x) > 0) throw validation_error("WeightInfiniteOnSupport", "g is positive where M = +inf", "coupling");
    }
  }
  const int n2 = P.degree;
  auto weighted = [&](int p, int s, double x) {
    const double m = M(x);
    if (std::isinf(m)) {
      if (P.g(x) > 0) throw validation_error("WeightInfiniteOnSupport", "g is positive where M = +inf", "coupling");
      return 0.0;
    }
    return std::abs(P.coefficient(p, x)) * std::pow(m, s);
  };
  Bm3Report r;
  for (int p = 0; p <= n2 - 1; ++p)
    for (int s = 0; s <= p; ++s) {
      Bm3Entry e;
      e.p = p;
      e.s = s;
      const auto l2 = integrate_line([&](double x) {
        const double g = P.g(x);
        if (g == 0) return 0.0;
        const double v = g * weighted(p, s, x);
        return v * v;
      });
      const double q = double(n2) / (n2 - p + s);
      const auto l1 = integrate_line([&](double x) {
        const double g = P.g(x);
        return g == 0 ? 0.0 : g * std::pow(weighted(p, s, x), q);
      });
      e.l2 = l2.value;
      e.l1 = l1.value;
      e.l2_finite = l2.converged && std::isfinite(l2.value);
      e.l1_finite = l1.converged && std::isfinite(l1.value);
      r.pass = r.pass && e.pass();
      r.table.push_back(e);
    }
  return r;
}

}  // namespace pphi2
