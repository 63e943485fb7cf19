#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace pphi2 {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1] (Golub-Welsch), cached per order.
inline const QuadratureRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = es.eigenvalues()(i);
    // polish the node with Newton on P_n
    for (int it = 0; it < 3; ++it) {
      double p0 = 1, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1);
      t -= p1 / dp;
    }
    double p0 = 1, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1);
    r.nodes[i] = t;
    r.weights[i] = 2.0 / ((1 - t * t) * dp * dp);
  }
  if (n == 1) r.weights[0] = 2.0;
  return cache.emplace(n, std::move(r)).first->second;
}

// fixed-order Gauss-Legendre on [a, b]
template <class F>
auto integrate_gl(F&& f, double a, double b, int n = 16) {
  const auto& r = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  decltype(f(a)) s{};
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

// adaptive Gauss-Kronrod on [a, b]; either bound may be infinite
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-13, double* err = nullptr) {
  if (a == b) return 0.0;
  if (a > b) return -integrate_adaptive(f, b, a, tol, err);
  double e = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, std::max(tol, 1e-14), &e);
  if (err) *err = e;
  return v;
}

// composite adaptive integral over [a, b] split at given interior points
template <class F>
double integrate_pieces(F&& f, double a, double b, const std::vector<double>& cuts, double tol = 1e-13) {
  double s = 0, lo = a;
  for (double c : cuts) {
    if (c <= lo || c >= b) continue;
    s += integrate_adaptive(f, lo, c, tol);
    lo = c;
  }
  return s + integrate_adaptive(f, lo, b, tol);
}

// int_a^inf f for algebraically or exponentially decaying f
template <class F>
double integrate_tail(F&& f, double a, double tol = 1e-13) {
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double t) { return f(a + t); }, 0.0, std::numeric_limits<double>::infinity(),
                      std::max(tol, 1e-14));
}

// int_a^b f where f may have integrable endpoint singularities
template <class F>
double integrate_singular(F&& f, double a, double b, double tol = 1e-13) {
  if (a == b) return 0.0;
  if (a > b) return -integrate_singular(f, b, a, tol);
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, std::max(tol, 1e-14));
}

}  // namespace pphi2
