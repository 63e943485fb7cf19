#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "pphi2/core/error.hpp"
#include "pphi2/core/expression.hpp"
#include "pphi2/core/fit.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/core/quadrature.hpp"

namespace pphi2 {

using Sampler = std::function<double(double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SignProfile { QuickDecay, SlowNegative, SlowPositive, Indefinite };

inline std::string to_string(SignProfile p) {
  switch (p) {
    case SignProfile::QuickDecay: return "QuickDecay";
    case SignProfile::SlowNegative: return "SlowNegative";
    case SignProfile::SlowPositive: return "SlowPositive";
    case SignProfile::Indefinite: return "Indefinite";
  }
  return "?";
}

inline bool is_slow(SignProfile p) { return p == SignProfile::SlowNegative || p == SignProfile::SlowPositive; }

// 5-point central differences, step 1e-4 <x>
inline double fd_first(const Sampler& f, double x) {
  const double h = 1e-4 * japanese(x);
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

inline double fd_second(const Sampler& f, double x) {
  const double h = 1e-4 * japanese(x);
  return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
}

struct MetricSpec {
  Sampler a;
  Sampler c;
  double m_inf = 1.0;
  double mu = 2.0;
  // optional analytic derivatives; finite differences otherwise
  Sampler da, d2a, dc;
};

// x is the reduced variable, y = psi(x) the original one
struct LiouvilleMap {
  Sampler phi;              // y -> x
  Sampler psi;              // x -> y
  Sampler psi_prime;        // x -> psi'(x)
  Sampler jacobian_weight;  // x -> psi'(x)^(-1/2)
};

inline LiouvilleMap identity_map() {
  return {[](double y) { return y; }, [](double x) { return x; }, [](double) { return 1.0; },
          [](double) { return 1.0; }};
}

struct ReducedPotential {
  std::string name;
  Sampler V, dV, d2V;
  double mu = kInf;
  SignProfile profile = SignProfile::QuickDecay;
  LiouvilleMap map = identity_map();
  std::vector<double> breakpoints;  // jumps of V or its derivatives
  double support = kInf;            // V vanishes for |x| > support
  std::vector<std::string> warnings;

  double operator()(double x) const { return V(x); }

  // weight on the original line induced by a weight on the reduced line
  Sampler transfer_weight(Sampler reduced_weight) const {
    auto m = map;
    return [m, reduced_weight](double y) {
      const double x = m.phi(y);
      return reduced_weight(x) / std::sqrt(m.psi_prime(x));
    };
  }
};

struct DecayFit {
  double mu = kInf;
  SignProfile profile = SignProfile::QuickDecay;
};

// Least squares of log|f| against log<x> over the outer quarter of the grid.
// Values at or below `floor` count as zero (cancellation noise).
inline DecayFit fit_decay(const Sampler& f, const Grid& grid, double floor = 0) {
  double xmax = 0;
  for (double x : grid.x) xmax = std::max(xmax, std::abs(x));
  std::vector<double> lx, ly;
  int pos = 0, neg = 0;
  for (double x : grid.x) {
    if (std::abs(x) < 0.75 * xmax) continue;
    double v = f(x);
    if (std::abs(v) <= floor) v = 0;
    if (v > 0) ++pos;
    if (v < 0) ++neg;
    if (v != 0 && std::isfinite(std::log(std::abs(v)))) {
      lx.push_back(std::log(japanese(x)));
      ly.push_back(std::log(std::abs(v)));
    }
  }
  DecayFit out;
  if (lx.size() < 2) return out;
  double spread = 0;
  for (double v : lx) spread = std::max(spread, std::abs(v - lx.front()));
  if (spread < 1e-12) return out;
  out.mu = -fit_line(lx, ly).slope;
  if (out.mu > 2) return out;
  if (neg > 0 && pos == 0) out.profile = SignProfile::SlowNegative;
  else if (pos > 0 && neg == 0) out.profile = SignProfile::SlowPositive;
  else out.profile = SignProfile::Indefinite;
  return out;
}

namespace detail {

// phi(y) = int_0^y ds / g(s) from a table of anchors plus a short Gauss-Legendre tail
class PhiTable {
 public:
  PhiTable(Sampler inv_g, double half_range, double step) : inv_g_(std::move(inv_g)), step_(step) {
    const auto J = static_cast<long>(std::ceil(half_range / step));
    jmax_ = J;
    phi_.assign(static_cast<std::size_t>(2 * J + 1), 0.0);
    for (long j = 1; j <= J; ++j) {
      phi_[idx(j)] = phi_[idx(j - 1)] + integrate_adaptive(inv_g_, (j - 1) * step_, j * step_, 1e-15);
      phi_[idx(-j)] = phi_[idx(-j + 1)] - integrate_adaptive(inv_g_, -j * step_, (-j + 1) * step_, 1e-15);
    }
  }

  double operator()(double y) const {
    const double t = y / step_;
    if (std::abs(t) <= static_cast<double>(jmax_)) {
      const long j = std::lround(t);
      return phi_[idx(j)] + integrate_gl(inv_g_, j * step_, y, 20);
    }
    const long j = t > 0 ? jmax_ : -jmax_;
    return phi_[idx(j)] + integrate_adaptive(inv_g_, j * step_, y, 1e-15);
  }

 private:
  std::size_t idx(long j) const { return static_cast<std::size_t>(j + jmax_); }
  Sampler inv_g_;
  double step_;
  long jmax_ = 0;
  std::vector<double> phi_;
};

}  // namespace detail

inline ReducedPotential liouville_reduce(const MetricSpec& spec, const Grid& grid) {
  if (!spec.a || !spec.c) throw validation_error("BadParams", "metric coefficients a and c are required");
  if (!(spec.m_inf >= 0)) throw validation_error("BadParams", "m_inf must be >= 0", "m_inf");
  ReducedPotential out;
  out.name = "metric";
  for (double y : grid.x) {
    const double av = spec.a(y), cv = spec.c(y);
    if (!(av > 0)) throw validation_error("NonPositiveMetric", "a(x) <= 0 at x = " + std::to_string(y), "a");
    if (!(cv > 0)) throw validation_error("NonPositiveMetric", "c(x) <= 0 at x = " + std::to_string(y), "c");
    if (cv < 1e-6 * spec.m_inf * spec.m_inf && out.warnings.empty())
      out.warnings.push_back("c(x) below 1e-6 m_inf^2 at x = " + std::to_string(y));
  }

  const Sampler a = spec.a, c = spec.c;
  const Sampler da = spec.da ? spec.da : Sampler([a](double y) { return fd_first(a, y); });
  const Sampler d2a = spec.d2a ? spec.d2a : Sampler([a](double y) { return fd_second(a, y); });
  for (double y : grid.x)
    if (!std::isfinite(da(y)) || !std::isfinite(d2a(y)))
      throw validation_error("DerivativeUnavailable", "metric derivatives not finite at x = " + std::to_string(y));

  const double m2 = spec.m_inf * spec.m_inf;
  const double a0 = a(grid.x.front());
  const bool constant = std::all_of(grid.x.begin(), grid.x.end(), [&](double y) { return a(y) == a0; });

  if (constant) {
    // pure dilation: phi(y) = y / sqrt(a0), psi(x) = sqrt(a0) x
    const double g0 = std::sqrt(a0);
    out.map = {[g0](double y) { return y / g0; }, [g0](double x) { return g0 * x; },
               [g0](double) { return g0; }, [g0](double) { return 1.0 / std::sqrt(g0); }};
    out.V = [c, g0, m2](double x) { return c(g0 * x) - m2; };
  } else {
    double ymax = 0;
    for (double y : grid.x) ymax = std::max(ymax, std::abs(y));
    auto inv_g = [a](double s) { return 1.0 / std::sqrt(a(s)); };
    auto phi = std::make_shared<const detail::PhiTable>(inv_g, 2 * ymax + 10, 0.25);
    auto psi = [phi, a](double x) {
      double lo = x - 1, hi = x + 1;
      for (double step = 1; (*phi)(lo) > x; step *= 2) lo -= step;
      for (double step = 1; (*phi)(hi) < x; step *= 2) hi += step;
      auto fn = [&](double y) { return std::make_pair((*phi)(y) - x, 1.0 / std::sqrt(a(y))); };
      std::uintmax_t iters = 200;
      return boost::math::tools::newton_raphson_iterate(fn, 0.5 * (lo + hi), lo, hi, 45, iters);
    };
    out.map.phi = [phi](double y) { return (*phi)(y); };
    out.map.psi = psi;
    out.map.psi_prime = [psi, a](double x) { return std::sqrt(a(psi(x))); };
    out.map.jacobian_weight = [psi, a](double x) { return std::pow(a(psi(x)), -0.25); };
    out.V = [psi, a, da, d2a, c, m2](double x) {
      const double y = psi(x);
      const double av = a(y), d1 = da(y);
      // (g'^2/4 + g g''/2) with g = sqrt(a)
      return c(y) + 0.25 * d2a(y) - d1 * d1 / (16 * av) - m2;
    };
  }
  const Sampler V = out.V;
  out.dV = [V](double x) { return fd_first(V, x); };
  out.d2V = [V](double x) { return fd_second(V, x); };

  double cmax = m2;
  for (double y : grid.x) cmax = std::max(cmax, std::abs(c(y)));
  const auto fit = fit_decay(V, grid, 1e-13 * std::max(1.0, cmax));
  out.mu = fit.mu;
  out.profile = fit.profile;
  return out;
}

// decay exponents of a - 1 and c - m_inf^2 fitted on the grid
inline std::pair<double, double> fit_metric_decay(const MetricSpec& spec, const Grid& grid) {
  const Sampler a = spec.a, c = spec.c;
  const double m2 = spec.m_inf * spec.m_inf;
  return {fit_decay([a](double x) { return a(x) - 1; }, grid).mu,
          fit_decay([c, m2](double x) { return c(x) - m2; }, grid, 1e-13 * std::max(1.0, m2)).mu};
}

enum class Family { SquareWell, Gaussian, PowerTail, Zero, PoschlTeller };

inline Family parse_family(const std::string& s) {
  if (s == "SquareWell") return Family::SquareWell;
  if (s == "Gaussian") return Family::Gaussian;
  if (s == "PowerTail") return Family::PowerTail;
  if (s == "Zero") return Family::Zero;
  if (s == "PoschlTeller") return Family::PoschlTeller;
  throw validation_error("UnknownFamily", "unknown potential family '" + s + "'", "family");
}

// SquareWell(V0, a):        V = -V0 on |x| <= a
// Gaussian(A, w):           V = A exp(-(x/w)^2)
// PowerTail(q0, mu, sign):  V = sign q0 <x>^(-mu)
// PoschlTeller(A, alpha):   V = -A sech^2(alpha x)
inline ReducedPotential builtin_potential(Family family, const std::vector<double>& p) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) throw validation_error("BadParams", "expected " + std::to_string(n) + " parameters", "params");
    for (double v : p)
      if (!std::isfinite(v)) throw validation_error("BadParams", "non-finite parameter", "params");
  };
  ReducedPotential out;
  switch (family) {
    case Family::Zero: {
      need(0);
      out.name = "Zero";
      out.V = out.dV = out.d2V = [](double) { return 0.0; };
      out.support = 0;
      break;
    }
    case Family::SquareWell: {
      need(2);
      const double V0 = p[0], w = p[1];
      if (!(w > 0)) throw validation_error("BadParams", "square well half width must be positive", "params");
      out.name = "SquareWell";
      out.V = [V0, w](double x) { return std::abs(x) <= w ? -V0 : 0.0; };
      out.dV = out.d2V = [](double) { return 0.0; };
      out.breakpoints = {-w, w};
      out.support = w;
      break;
    }
    case Family::Gaussian: {
      need(2);
      const double A = p[0], w = p[1];
      if (!(w > 0)) throw validation_error("BadParams", "Gaussian width must be positive", "params");
      out.name = "Gaussian";
      out.V = [A, w](double x) { return A * std::exp(-x * x / (w * w)); };
      out.dV = [A, w](double x) { return -2 * x / (w * w) * A * std::exp(-x * x / (w * w)); };
      out.d2V = [A, w](double x) {
        return (4 * x * x / (w * w * w * w) - 2 / (w * w)) * A * std::exp(-x * x / (w * w));
      };
      break;
    }
    case Family::PowerTail: {
      need(3);
      const double q0 = p[0], mu = p[1], sign = p[2];
      if (!(q0 > 0) || !(mu > 0) || std::abs(sign) != 1)
        throw validation_error("BadParams", "PowerTail needs q0 > 0, mu > 0, sign = +-1", "params");
      const double q = sign * q0;
      out.name = "PowerTail";
      out.V = [q, mu](double x) { return q * std::pow(1 + x * x, -0.5 * mu); };
      out.dV = [q, mu](double x) { return -q * mu * x * std::pow(1 + x * x, -0.5 * mu - 1); };
      out.d2V = [q, mu](double x) {
        const double s = 1 + x * x;
        return q * (-mu * std::pow(s, -0.5 * mu - 1) + mu * (mu + 2) * x * x * std::pow(s, -0.5 * mu - 2));
      };
      out.mu = mu;
      if (mu <= 2) out.profile = sign > 0 ? SignProfile::SlowPositive : SignProfile::SlowNegative;
      return out;
    }
    case Family::PoschlTeller: {
      need(2);
      const double A = p[0], al = p[1];
      if (!(al > 0)) throw validation_error("BadParams", "PoschlTeller alpha must be positive", "params");
      out.name = "PoschlTeller";
      out.V = [A, al](double x) {
        const double s = 1 / std::cosh(al * x);
        return -A * s * s;
      };
      out.dV = [A, al](double x) {
        const double s = 1 / std::cosh(al * x);
        return 2 * A * al * s * s * std::tanh(al * x);
      };
      out.d2V = [A, al](double x) {
        const double s = 1 / std::cosh(al * x), t = std::tanh(al * x);
        return 2 * A * al * al * s * s * (s * s - 2 * t * t);
      };
      break;
    }
  }
  out.mu = kInf;
  out.profile = SignProfile::QuickDecay;
  return out;
}

inline ReducedPotential builtin_potential(const std::string& name, const std::vector<double>& p) {
  return builtin_potential(parse_family(name), p);
}

// V given directly as an expression (a = 1, c = m_inf^2 + V)
inline ReducedPotential expression_potential(const std::string& text, const Grid& grid) {
  Expression e(text);
  ReducedPotential out;
  out.name = "expr";
  out.V = [e](double x) { return e(x); };
  const Sampler V = out.V;
  out.dV = [V](double x) { return fd_first(V, x); };
  out.d2V = [V](double x) { return fd_second(V, x); };
  const auto fit = fit_decay(V, grid);
  out.mu = fit.mu;
  out.profile = fit.profile;
  return out;
}

inline std::vector<double> sample(const Sampler& f, const Grid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.x[i]);
  return v;
}

}  // namespace pphi2
