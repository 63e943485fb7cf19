#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/core/integrability.hpp"
#include "pphi2/potential.hpp"

namespace pphi2 {

// P(x, lambda) = sum_p a_p(x) lambda^p with space cutoff g(x) >= 0 and a constant top coefficient.
struct WickPolynomial {
  int degree = 4;
  std::vector<Sampler> a;  // a[p], p = 0..degree
  Sampler g;

  static WickPolynomial monomial(int p, Sampler g, double coeff = 1.0) {
    WickPolynomial P;
    P.degree = p;
    P.a.assign(static_cast<std::size_t>(p) + 1, [](double) { return 0.0; });
    P.a[static_cast<std::size_t>(p)] = [coeff](double) { return coeff; };
    P.g = std::move(g);
    return P;
  }

  // structural checks; `even_top` enforces an even degree with a_{2n} constant > 0
  void validate(bool even_top = true) const {
    if (degree < 0 || a.size() != static_cast<std::size_t>(degree) + 1)
      throw validation_error("BadPolynomial", "need one coefficient per power 0..degree", "polynomial");
    if (!g) throw validation_error("BadPolynomial", "coupling g is missing", "coupling");
    for (int i = 0; i < 10; ++i) {
      const double x = -9 + 2.0 * i;
      if (!(g(x) >= 0)) throw validation_error("NegativeCoupling", "g must be non-negative", "coupling");
    }
    if (!even_top) return;
    if (degree < 2 || degree % 2 != 0)
      throw validation_error("BadPolynomial", "degree must be even and at least 2", "polynomial.degree");
    const auto& top = a.back();
    const double a0 = top(0.0);
    if (!(a0 > 0)) throw validation_error("BadPolynomial", "top coefficient must be positive", "polynomial");
    for (int i = 0; i < 10; ++i) {
      const double x = -9 + 2.0 * i;
      if (std::abs(top(x) - a0) > 1e-12 * a0)
        throw validation_error("BadPolynomial", "top coefficient must be constant in x", "polynomial");
    }
  }

  double coefficient(int p, double x) const { return a[static_cast<std::size_t>(p)](x); }
};

struct IntegrabilityItem {
  std::string what;
  double value = 0;
  bool finite = true;
};

// g in L^1 and L^2, g a_p in L^2, g |a_p|^(2n/(2n-p)) in L^1 for p < 2n
inline std::vector<IntegrabilityItem> integrability_report(const WickPolynomial& P) {
  std::vector<IntegrabilityItem> out;
  auto add = [&](std::string what, auto&& h) {
    const auto r = integrate_line(h);
    out.push_back({std::move(what), r.value, r.converged});
  };
  add("g in L1", [&](double x) { return std::abs(P.g(x)); });
  add("g in L2", [&](double x) { return P.g(x) * P.g(x); });
  const int n2 = P.degree;
  for (int p = 0; p <= n2; ++p) {
    add("g a_" + std::to_string(p) + " in L2", [&, p](double x) {
      const double v = P.g(x) * P.coefficient(p, x);
      return v * v;
    });
    if (p < n2)
      add("g a_" + std::to_string(p) + "^(2n/(2n-p)) in L1", [&, p](double x) {
        const double g = P.g(x);
        return g == 0 ? 0.0 : g * std::pow(std::abs(P.coefficient(p, x)), double(n2) / (n2 - p));
      });
  }
  return out;
}

}  // namespace pphi2
