#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pphi2/core/error.hpp"
#include "pphi2/schrodinger/bound_states.hpp"

namespace pphi2 {

struct Mode {
  enum class Kind { Bound, Cell } kind = Kind::Cell;
  std::size_t l = 0;  // bound index
  double gamma = 0;   // cell center in (1/nu) Z
  double omega = 0;

  std::string label() const {
    return kind == Kind::Bound ? "bound:" + std::to_string(l) : "cell:" + std::to_string(gamma);
  }
};

// Bound modes (l ascending) followed by lattice cells (gamma ascending).
struct ModeSet {
  double nu = 1, kappa = 0, m_inf = 1;
  std::vector<Mode> modes;

  std::size_t size() const noexcept { return modes.size(); }
  double cell_width() const { return 1.0 / nu; }
  std::vector<double> omegas() const {
    std::vector<double> w;
    for (const auto& m : modes) w.push_back(m.omega);
    return w;
  }
  std::size_t bound_count() const {
    std::size_t n = 0;
    for (const auto& m : modes) n += m.kind == Mode::Kind::Bound;
    return n;
  }
  // index of the cell centered at gamma, or size() when absent
  std::size_t find_cell(double gamma) const {
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (modes[i].kind == Mode::Kind::Cell && std::abs(modes[i].gamma - gamma) < 1e-9 / nu) return i;
    return modes.size();
  }
};

// T = {l in I : l <= kappa} together with {gamma in (1/nu) Z : |gamma| <= kappa}
inline ModeSet build_mode_set(const std::vector<BoundState>& bound, double nu, double kappa, double m_inf,
                              double k_range = std::numeric_limits<double>::infinity()) {
  if (!(nu >= 1)) throw validation_error("BadParams", "nu must be at least 1", "cutoffs.nu");
  if (!(kappa >= 0)) throw validation_error("BadParams", "kappa must be non-negative", "cutoffs.kappa");
  if (!(m_inf > 0)) throw validation_error("BadParams", "m_inf must be positive", "m_inf");
  if (kappa + 0.5 / nu > k_range * (1 + 1e-12))
    throw validation_error("CutoffExceedsBasis",
                           "cells up to kappa + 1/(2 nu) need momenta beyond the eigenbasis range", "cutoffs.kappa");
  ModeSet ms;
  ms.nu = nu;
  ms.kappa = kappa;
  ms.m_inf = m_inf;
  for (const auto& b : bound) {
    if (static_cast<double>(b.index) > kappa) continue;
    const double e = b.lambda + m_inf * m_inf;
    if (!(e > 0))
      throw validation_error("NonPositiveEnergy", "bound state " + std::to_string(b.index) + " has lambda + m_inf^2 <= 0",
                             "potential");
    ms.modes.push_back({Mode::Kind::Bound, b.index, 0, std::sqrt(e)});
  }
  const auto jmax = static_cast<long>(std::floor(kappa * nu + 1e-9));
  for (long j = -jmax; j <= jmax; ++j) {
    const double g = static_cast<double>(j) / nu;
    ms.modes.push_back({Mode::Kind::Cell, 0, g, std::sqrt(g * g + m_inf * m_inf)});
  }
  return ms;
}

}  // namespace pphi2
