#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pphi2/core/error.hpp"

namespace pphi2 {

struct LineFit {
  double intercept = 0;
  double slope = 0;
  double residual = 0;  // sum of squared residuals
};

// least squares y = intercept + slope * x
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw validation_error("BadFit", "need at least two points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = x[static_cast<std::size_t>(i)];
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  return {c(0), c(1), (A * c - b).squaredNorm()};
}

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  return fit_line(std::span<const double>(x), std::span<const double>(y));
}

}  // namespace pphi2
