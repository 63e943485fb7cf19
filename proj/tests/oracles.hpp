#pragma once

// Independent reference formulas used by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// |T(k)|^2 for the well V = -V0 on |x| <= a
inline double square_well_transmission(double V0, double a, double k) {
  const double q = std::sqrt(k * k + V0);
  const double s = std::sin(2 * q * a);
  return 1.0 / (1.0 + V0 * V0 * s * s / (4 * k * k * q * q));
}

inline int square_well_count(double V0, double a) {
  return 1 + static_cast<int>(std::floor(2 * a * std::sqrt(V0) / M_PI));
}

// bound states of the symmetric well from the even/odd matching equations, by bisection
inline std::vector<double> square_well_levels(double V0, double a) {
  // kappa^2 = V0 - q^2; even: q tan(qa) = kappa, odd: -q cot(qa) = kappa
  std::vector<double> out;
  const double qmax = std::sqrt(V0);
  auto even = [&](double q) { return q * std::sin(q * a) - std::sqrt(std::max(0.0, V0 - q * q)) * std::cos(q * a); };
  auto odd = [&](double q) { return -q * std::cos(q * a) - std::sqrt(std::max(0.0, V0 - q * q)) * std::sin(q * a); };
  const int n = 20000;
  for (auto f : {std::function<double(double)>(even), std::function<double(double)>(odd)}) {
    for (int i = 0; i < n; ++i) {
      double lo = qmax * i / n, hi = qmax * (i + 1) / n;
      if (f(lo) * f(hi) > 0 || f(lo) == 0) continue;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
      }
      const double q = 0.5 * (lo + hi);
      out.push_back(q * q - V0);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// classical RK4 for u'' = (V - z) u with a fixed number of steps
inline std::pair<cplx, cplx> rk4(const std::function<double(double)>& V, cplx z, double x0, double x1,
                                 cplx y, cplx dy, int steps) {
  const double h = (x1 - x0) / steps;
  auto f = [&](double x, cplx a, cplx b) { return std::make_pair(b, (V(x) - z) * a); };
  double x = x0;
  for (int i = 0; i < steps; ++i) {
    auto [k1a, k1b] = f(x, y, dy);
    auto [k2a, k2b] = f(x + h / 2, y + h / 2 * k1a, dy + h / 2 * k1b);
    auto [k3a, k3b] = f(x + h / 2, y + h / 2 * k2a, dy + h / 2 * k2b);
    auto [k4a, k4b] = f(x + h, y + h * k3a, dy + h * k3b);
    y += h / 6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    dy += h / 6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    x += h;
  }
  return {y, dy};
}

// ground energy of omega a*a + c :phi(v)^2: with phi = (a* + a)/sqrt(2), by Bogoliubov diagonalization
inline double bogoliubov_ground(double omega, double c, double v2) {
  return 0.5 * (std::sqrt(omega * omega + 2 * omega * c * v2) - omega - c * v2);
}

// minimum over real y of the Hermite quartic y^4 - 6 C y^2 + 3 C^2
inline double hermite_quartic_min(double C) {
  double best = 3 * C * C;
  for (int i = 0; i <= 200000; ++i) {
    const double y = 5.0 * i / 200000;
    best = std::min(best, y * y * y * y - 6 * C * y * y + 3 * C * C);
  }
  return best;
}

}  // namespace oracle
