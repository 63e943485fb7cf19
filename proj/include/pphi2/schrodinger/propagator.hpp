#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "pphi2/core/error.hpp"

namespace pphi2 {

using cplx = std::complex<double>;

// solution value and derivative, with an optional log scale for growing solutions
struct OdeState {
  cplx y{};
  cplx dy{};
  double log_scale = 0;

  double norm() const { return std::abs(y) + std::abs(dy); }
};

inline cplx wronskian(const OdeState& f, const OdeState& g) { return f.dy * g.y - f.y * g.dy; }

struct Mat2 {
  cplx a, b, c, d;

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  OdeState apply(const OdeState& s) const { return {a * s.y + b * s.dy, c * s.y + d * s.dy, s.log_scale}; }
};

struct PropagatorOptions {
  double tol = 1e-13;       // local relative error per step
  double h_min = 1e-12;     // relative to the interval length scale
  double max_exponent = 30; // cap on |Re s| per step
};

// Adaptive fourth-order Magnus integrator for u'' = (V(x) - z) u.
// Each step is the exponential of a traceless 2x2 matrix, so the transfer
// matrix is unimodular and Wronskians are conserved to round-off.
class MagnusPropagator {
 public:
  MagnusPropagator(std::function<double(double)> V, cplx z, std::vector<double> breakpoints = {},
                   PropagatorOptions opt = {})
      : V_(std::move(V)), z_(z), breaks_(std::move(breakpoints)), opt_(opt) {
    std::sort(breaks_.begin(), breaks_.end());
  }

  // advance s from x0 to x1 (either direction)
  OdeState advance(OdeState s, double x0, double x1) {
    if (x0 == x1) return s;
    const double dir = x1 > x0 ? 1.0 : -1.0;
    double x = x0;
    while (x != x1) {
      double target = x1;
      for (double b : breaks_) {
        if (dir > 0 && b > x && b < target) target = b;
        if (dir < 0 && b < x && b > target) target = b;
      }
      s = advance_smooth(s, x, target);
      x = target;
    }
    return s;
  }

  // one Magnus step of length h (signed) starting at x
  Mat2 step(double x, double h) const {
    static const double c1 = 0.5 - std::sqrt(3.0) / 6, c2 = 0.5 + std::sqrt(3.0) / 6;
    const cplx q1 = V_(x + c1 * h) - z_;
    const cplx q2 = V_(x + c2 * h) - z_;
    const cplx alpha = (std::sqrt(3.0) / 12) * h * h * (q1 - q2);
    const cplx beta = h;
    const cplx gamma = 0.5 * h * (q1 + q2);
    return expm(alpha, beta, gamma);
  }

  std::size_t steps() const noexcept { return steps_; }

 private:
  // exp([[alpha, beta], [gamma, -alpha]])
  Mat2 expm(cplx alpha, cplx beta, cplx gamma) const {
    const cplx s2 = alpha * alpha + beta * gamma;
    const cplx s = std::sqrt(s2);
    cplx ch, sh;  // cosh(s), sinh(s)/s
    if (std::abs(s) < 1e-4) {
      ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0;
      sh = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
    } else {
      ch = std::cosh(s);
      sh = std::sinh(s) / s;
    }
    return {ch + sh * alpha, sh * beta, sh * gamma, ch - sh * alpha};
  }

  double exponent(double x, double h) const {
    const cplx q = V_(x + 0.5 * h) - z_;
    return std::abs(std::sqrt(q).real()) * std::abs(h);
  }

  OdeState advance_smooth(OdeState s, double x0, double x1) {
    const double len = std::abs(x1 - x0);
    const double dir = x1 > x0 ? 1.0 : -1.0;
    if (h_ <= 0) h_ = std::min(len, 0.05);
    const double hmin = opt_.h_min * std::max(1.0, len);
    double x = x0;
    while (x != x1) {
      const double rem = dir * (x1 - x);
      const bool clipped = h_ >= rem;
      double h = clipped ? rem : h_;
      for (;;) {
        while (exponent(x, dir * h) > opt_.max_exponent && h > hmin) h *= 0.5;
        const Mat2 full = step(x, dir * h);
        const Mat2 half = step(x + 0.5 * dir * h, 0.5 * dir * h) * step(x, 0.5 * dir * h);
        const OdeState a = full.apply(s), b = half.apply(s);
        const double scale = std::max(b.norm(), 1e-300);
        const double err = (std::abs(a.y - b.y) + std::abs(a.dy - b.dy)) / scale;
        const double grow = err > 0 ? 0.9 * std::pow(opt_.tol / err, 0.2) : 4.0;
        if (err <= opt_.tol) {
          s = b;
          x = h >= rem ? x1 : x + dir * h;
          ++steps_;
          const double next = h * std::clamp(grow, 0.2, 4.0);
          h_ = clipped ? std::max(h_, next) : next;
          renormalize(s);
          break;
        }
        if (h <= hmin)
          throw numerical_error("IntegratorDiverged", "step size underflow at x = " + std::to_string(x));
        h = std::max(hmin, h * std::clamp(grow, 0.1, 0.5));
      }
    }
    return s;
  }

  static void renormalize(OdeState& s) {
    const double n = s.norm();
    if (n > 1e100 || (n < 1e-100 && n > 0)) {
      s.y /= n;
      s.dy /= n;
      s.log_scale += std::log(n);
    }
  }

  std::function<double(double)> V_;
  cplx z_;
  std::vector<double> breaks_;
  PropagatorOptions opt_;
  double h_ = 0;
  std::size_t steps_ = 0;
};

// Samples of a solution on sorted nodes, integrating outward from (x_start, s_start).
// Values carry their own log scale.
inline std::vector<OdeState> propagate_to_nodes(MagnusPropagator& prop, const std::vector<double>& nodes,
                                                double x_start, const OdeState& s_start) {
  std::vector<OdeState> out(nodes.size());
  // first node at or above x_start
  const auto split = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), x_start) - nodes.begin());
  OdeState s = s_start;
  double x = x_start;
  for (std::size_t i = split; i < nodes.size(); ++i) {
    s = prop.advance(s, x, nodes[i]);
    x = nodes[i];
    out[i] = s;
  }
  s = s_start;
  x = x_start;
  for (std::size_t i = split; i-- > 0;) {
    s = prop.advance(s, x, nodes[i]);
    x = nodes[i];
    out[i] = s;
  }
  return out;
}

}  // namespace pphi2
