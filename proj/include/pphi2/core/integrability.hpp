#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pphi2/core/fit.hpp"
#include "pphi2/core/quadrature.hpp"

namespace pphi2 {

struct LineIntegral {
  double value = 0;       // +inf when a tail diverges
  bool converged = true;
  double slope_minus = -std::numeric_limits<double>::infinity();  // fitted tail exponents of |h|
  double slope_plus = -std::numeric_limits<double>::infinity();
};

// int_R h over [-1, 1] plus dyadic shells out to 2^shells on both sides. A tail converges when |h|
// vanishes on the outer shells or its fitted power-law exponent is below -1 - margin; the neglected
// remainder is then added from the fitted power law.
template <class F>
LineIntegral integrate_line(F&& h, int shells = 50, double tol = 1e-10, double margin = 0.02) {
  LineIntegral out;
  double total = integrate_adaptive(h, -1.0, 1.0, tol);
  for (double s : {-1.0, 1.0}) {
    std::vector<double> lx, ly;
    bool any = false;
    double last_x = 1;
    for (int j = 0; j < shells; ++j) {
      const double a = std::ldexp(1.0, j), b = 2 * a;
      total += integrate_adaptive([&](double t) { return h(s * t); }, a, b, tol);
      if (j >= shells - 12) {
        double peak = 0;
        for (double f : {1.1, 1.3, 1.5, 1.7, 1.9}) peak = std::max(peak, std::abs(h(s * f * a)));
        if (peak > 0) {
          lx.push_back(std::log(1.5 * a));
          ly.push_back(std::log(peak));
          any = true;
        }
      }
      last_x = b;
    }
    double slope = -std::numeric_limits<double>::infinity();
    if (any && lx.size() >= 4) {
      slope = fit_line(lx, ly).slope;
      if (slope >= -1 - margin) {
        out.converged = false;
      } else {
        const double hx = std::abs(h(s * last_x));
        total += std::copysign(1.0, h(s * last_x)) * hx * last_x / (-slope - 1);
      }
    } else if (any) {
      out.converged = false;  // sporadic nonzero samples: cannot certify the tail
    }
    (s < 0 ? out.slope_minus : out.slope_plus) = slope;
  }
  out.value = out.converged ? total : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace pphi2
