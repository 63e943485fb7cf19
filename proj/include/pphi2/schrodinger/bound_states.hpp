#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "pphi2/core/error.hpp"
#include "pphi2/core/grid.hpp"
#include "pphi2/potential.hpp"
#include "pphi2/schrodinger/propagator.hpp"

namespace pphi2 {

struct BoundState {
  double epsilon = 0;  // eigenvalue of D^2 + V + m_inf^2
  double lambda = 0;   // epsilon - m_inf^2 < 0
  std::vector<double> psi;
  std::size_t index = 0;
};

namespace detail {

// -u'' + V u on the grid nodes with Dirichlet ends, symmetrized by the node weights
struct FdOperator {
  std::vector<double> d, e;  // diagonal, off-diagonal of W^{-1/2} K W^{-1/2}

  FdOperator(const ReducedPotential& V, const Grid& g) {
    const std::size_t n = g.size() - 2;
    d.resize(n);
    e.resize(n > 0 ? n - 1 : 0);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (g[i + 2] - g[i]);
    for (std::size_t i = 0; i < n; ++i) {
      const double hl = g[i + 1] - g[i], hr = g[i + 2] - g[i + 1];
      d[i] = (1 / hl + 1 / hr) / w[i] + V(g[i + 1]);
      if (i + 1 < n) e[i] = -1 / (hr * std::sqrt(w[i] * w[i + 1]));
    }
  }

  // number of eigenvalues strictly below t
  std::size_t count_below(double t) const {
    std::size_t c = 0;
    double q = 1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      q = d[i] - t - (i > 0 ? e[i - 1] * e[i - 1] / q : 0.0);
      if (q == 0) q = -1e-300;
      if (q < 0) ++c;
    }
    return c;
  }

  // j-th eigenvalue (0-based) by bisection on the Sturm count
  double eigenvalue(std::size_t j, double lo, double hi) const {
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) > j ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

struct Shot {
  std::vector<OdeState> left, right;  // left valid for nodes <= match, right for nodes >= match
  double mismatch = 0;
};

// decaying solutions from both ends meeting at node `match`
inline Shot shoot(const ReducedPotential& V, const Grid& g, double lambda, std::size_t match, bool keep) {
  MagnusPropagator prop(V.V, lambda, V.breakpoints);
  const double kl = std::sqrt(std::max(V(g.front()) - lambda, 1e-300));
  const double kr = std::sqrt(std::max(V(g.back()) - lambda, 1e-300));
  Shot s;
  OdeState a{1.0, kl, 0}, b{1.0, -kr, 0};
  if (keep) {
    s.left.resize(match + 1);
    s.right.resize(g.size() - match);
    s.left[0] = a;
    for (std::size_t i = 1; i <= match; ++i) s.left[i] = a = prop.advance(a, g[i - 1], g[i]);
    s.right.back() = b;
    for (std::size_t i = g.size() - 1; i-- > match;) s.right[i - match] = b = prop.advance(b, g[i + 1], g[i]);
  } else {
    a = prop.advance(a, g.front(), g[match]);
    b = prop.advance(b, g.back(), g[match]);
  }
  s.mismatch = wronskian(a, b).real() / (a.norm() * b.norm());
  return s;
}

}  // namespace detail

// eigenvalues of D^2 + V + m_inf^2 below m_inf^2 with normalized eigenfunctions on the grid
inline std::vector<BoundState> bound_states(const ReducedPotential& V, const Grid& grid, double m_inf) {
  if (grid.size() < 5) throw validation_error("BadGrid", "bound_states needs at least 5 nodes", "grid");
  const detail::FdOperator fd(V, grid);
  const std::size_t count = fd.count_below(0.0);
  std::vector<BoundState> out;
  if (count == 0) return out;

  double vmin = 0;
  for (double v : fd.d) vmin = std::min(vmin, v);
  for (std::size_t i = 0; i < fd.e.size(); ++i) vmin = std::min(vmin, fd.d[i] - 2 * std::abs(fd.e[i]));
  std::vector<double> lam_fd(count);
  for (std::size_t j = 0; j < count; ++j) lam_fd[j] = fd.eigenvalue(j, vmin - 1, 0.0);

  for (std::size_t j = 0; j < count; ++j) {
    // bracket for the refined eigenvalue: halfway to neighbouring discrete levels
    const double lo = j == 0 ? vmin - 1 : 0.5 * (lam_fd[j - 1] + lam_fd[j]);
    const double hi = j + 1 < count ? 0.5 * (lam_fd[j] + lam_fd[j + 1]) : 0.5 * lam_fd[j];

    // match at the node of largest |psi| from one inverse-iteration sweep of the discrete problem
    std::size_t match = grid.size() / 2;
    {
      const std::size_t n = fd.d.size();
      std::vector<double> r(n, 1.0), diag(n);
      const double shift = lam_fd[j] + 1e-10 * std::max(1.0, std::abs(lam_fd[j]));
      for (int sweep = 0; sweep < 3; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) diag[i] = fd.d[i] - shift;
        for (std::size_t i = 1; i < n; ++i) {
          const double f = fd.e[i - 1] / diag[i - 1];
          diag[i] -= f * fd.e[i - 1];
          r[i] -= f * r[i - 1];
        }
        for (std::size_t i = n; i-- > 0;) r[i] = (r[i] - (i + 1 < n ? fd.e[i] * r[i + 1] : 0.0)) / diag[i];
        double mx = 0;
        for (double v : r) mx = std::max(mx, std::abs(v));
        for (double& v : r) v /= mx;
      }
      double best = -1;
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(r[i]) > best) best = std::abs(r[i]), match = i + 1;
    }

    auto f = [&](double l) { return detail::shoot(V, grid, l, match, false).mismatch; };
    // widen from the discrete eigenvalue until the mismatch changes sign
    double a = lam_fd[j], b = lam_fd[j];
    const double fa0 = f(a);
    double fa = fa0, fb = fa0;
    double step = 1e-6 * std::max(1.0, std::abs(lam_fd[j]));
    bool found = fa0 == 0;
    while (!found) {
      const double na = std::max(lo, lam_fd[j] - step), nb = std::min(hi, lam_fd[j] + step);
      const double fna = f(na), fnb = f(nb);
      if (fna * fa0 <= 0) {
        a = na, fa = fna, b = lam_fd[j], fb = fa0, found = true;
      } else if (fnb * fa0 <= 0) {
        a = lam_fd[j], fa = fa0, b = nb, fb = fnb, found = true;
      } else if (na == lo && nb == hi) {
        const double reach = std::sqrt(-lam_fd[j]) * std::min(grid[match] - grid.front(), grid.back() - grid[match]);
        if (reach < 14)
          throw numerical_error("GridTooNarrow", "level " + std::to_string(j) + " decays too slowly for the grid");
        throw numerical_error("BoundStateNotFound", "shooting could not bracket level " + std::to_string(j));
      }
      step *= 4;
    }
    double lambda = a;
    if (a != b) {
      std::uintmax_t iters = 100;
      auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)); };
      const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
      lambda = 0.5 * (r.first + r.second);
    }

    // assemble the eigenfunction from both decaying branches
    const auto shot = detail::shoot(V, grid, lambda, match, true);
    const OdeState& L = shot.left.back();
    const OdeState& R = shot.right.front();
    const double ratio = (L.y / R.y).real();
    std::vector<double> psi(grid.size());
    for (std::size_t i = 0; i <= match; ++i)
      psi[i] = shot.left[i].y.real() * std::exp(shot.left[i].log_scale - L.log_scale);
    for (std::size_t i = match; i < grid.size(); ++i)
      psi[i] = ratio * shot.right[i - match].y.real() * std::exp(shot.right[i - match].log_scale - R.log_scale);

    std::vector<double> sq(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) sq[i] = psi[i] * psi[i];
    const double nrm = std::sqrt(trapezoid(grid, sq));
    std::size_t imax = 0;
    for (std::size_t i = 0; i < psi.size(); ++i)
      if (std::abs(psi[i]) > std::abs(psi[imax]) * (1 + 1e-12)) imax = i;
    const double sgn = psi[imax] > 0 ? 1.0 : -1.0;
    for (double& v : psi) v *= sgn / nrm;

    if (std::abs(psi.front()) > 1e-6 || std::abs(psi.back()) > 1e-6)
      throw numerical_error("GridTooNarrow", "bound state " + std::to_string(j) + " does not decay inside the grid");
    std::size_t nodes = 0;
    double last = 0;
    for (double v : psi) {
      if (std::abs(v) < 1e-12) continue;
      if (last != 0 && (v > 0) != (last > 0)) ++nodes;
      last = v;
    }
    if (nodes != j)
      throw numerical_error("BoundStateNotFound", "level " + std::to_string(j) + " has " + std::to_string(nodes) + " nodes");

    BoundState bs;
    bs.lambda = lambda;
    bs.epsilon = lambda + m_inf * m_inf;
    bs.psi = std::move(psi);
    bs.index = j;
    out.push_back(std::move(bs));
  }
  return out;
}

// L2 norm of -u'' + (V - lambda) u with Richardson-corrected differences, skipping breakpoint neighbourhoods
inline double bound_state_residual(const ReducedPotential& V, const Grid& g, const BoundState& b) {
  std::vector<double> r2(g.size(), 0.0);
  for (std::size_t i = 2; i + 2 < g.size(); ++i) {
    const double h = g[i + 1] - g[i];
    if (std::abs((g[i] - g[i - 1]) - h) > 1e-9 * h || std::abs((g[i + 2] - g[i]) - 2 * h) > 1e-9 * h ||
        std::abs((g[i] - g[i - 2]) - 2 * h) > 1e-9 * h)
      continue;
    bool near = false;
    for (double bp : V.breakpoints) near |= std::abs(g[i] - bp) <= 2.5 * h;
    if (near) continue;
    const auto& u = b.psi;
    const double d1 = (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h);
    const double d2 = (u[i + 2] - 2 * u[i] + u[i - 2]) / (4 * h * h);
    const double res = -(4 * d1 - d2) / 3 + (V(g[i]) - b.lambda) * u[i];
    r2[i] = res * res;
  }
  return std::sqrt(trapezoid(g, r2));
}

}  // namespace pphi2
