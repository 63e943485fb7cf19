#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pphi2/core/error.hpp"

namespace pphi2 {

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

// Sorted sample points on the real line.
struct Grid {
  std::vector<double> x;

  static Grid uniform(double a, double b, std::size_t n) {
    if (n < 2 || !(b > a)) throw validation_error("BadGrid", "uniform grid needs n >= 2 and b > a");
    Grid g;
    g.x.resize(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.x[i] = a + h * static_cast<double>(i);
    g.x.back() = b;
    return g;
  }

  // uniform grid on [a, b] with spacing at most h
  static Grid uniform_step(double a, double b, double h) {
    const auto n = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-9)) + 1;
    return uniform(a, b, std::max<std::size_t>(n, 2));
  }

  std::size_t size() const noexcept { return x.size(); }
  double front() const { return x.front(); }
  double back() const { return x.back(); }
  double operator[](std::size_t i) const { return x[i]; }

  std::size_t nearest(double t) const {
    auto it = std::lower_bound(x.begin(), x.end(), t);
    if (it == x.end()) return x.size() - 1;
    auto i = static_cast<std::size_t>(it - x.begin());
    if (i > 0 && std::abs(x[i - 1] - t) < std::abs(x[i] - t)) --i;
    return i;
  }
};

// trapezoidal rule on arbitrary sorted nodes
template <class T>
T trapezoid(std::span<const double> x, std::span<const T> f) {
  T s{};
  for (std::size_t i = 1; i < x.size(); ++i) s += (f[i] + f[i - 1]) * (0.5 * (x[i] - x[i - 1]));
  return s;
}

template <class T>
T trapezoid(const Grid& g, const std::vector<T>& f) {
  return trapezoid<T>(std::span<const double>(g.x), std::span<const T>(f));
}

}  // namespace pphi2
