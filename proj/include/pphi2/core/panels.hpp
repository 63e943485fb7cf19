#pragma once

#include <cmath>
#include <vector>

#include "pphi2/core/quadrature.hpp"

namespace pphi2 {

// Gauss-Legendre panel on [-1, 1] with spectral integration matrices of the nodal interpolant.
class SpectralPanel {
 public:
  static constexpr int n = 16;

  static const SpectralPanel& get() {
    static const SpectralPanel p;
    return p;
  }

  const std::vector<double>& nodes() const { return rule_.nodes; }
  const std::vector<double>& weights() const { return rule_.weights; }

  // int_{t}^{1} l_j(s) ds for the Lagrange basis l_j on the nodes
  std::vector<double> to_end(double t) const {
    std::vector<double> w(n, 0.0);
    const auto& g = gauss_legendre(n);
    const double c = 0.5 * (t + 1), h = 0.5 * (1 - t);
    for (int q = 0; q < n; ++q) {
      const double s = c + h * g.nodes[q];
      const auto l = basis(s);
      for (int j = 0; j < n; ++j) w[j] += h * g.weights[q] * l[j];
    }
    return w;
  }

  // R(i, j) = int_{t_i}^{1} l_j, row-major
  const std::vector<double>& right() const { return right_; }

  // Lagrange basis values at s (barycentric form)
  std::vector<double> basis(double s) const {
    std::vector<double> l(n);
    double den = 0;
    for (int j = 0; j < n; ++j) {
      const double d = s - rule_.nodes[j];
      if (d == 0) {
        std::fill(l.begin(), l.end(), 0.0);
        l[j] = 1;
        return l;
      }
      l[j] = bary_[j] / d;
      den += l[j];
    }
    for (double& v : l) v /= den;
    return l;
  }

 private:
  SpectralPanel() : rule_(gauss_legendre(n)) {
    bary_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double t = rule_.nodes[j];
      bary_[j] = (j % 2 ? -1.0 : 1.0) * std::sqrt((1 - t * t) * rule_.weights[j]);
    }
    right_.resize(n * n);
    for (int i = 0; i < n; ++i) {
      const auto w = to_end(rule_.nodes[i]);
      for (int j = 0; j < n; ++j) right_[i * n + j] = w[j];
    }
  }

  QuadratureRule rule_;
  std::vector<double> bary_, right_;
};

}  // namespace pphi2
