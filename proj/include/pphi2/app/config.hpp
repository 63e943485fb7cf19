#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pphi2/core/error.hpp"

namespace pphi2::app {

// shortest text that reads back to the same double
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct ParamSpec {
  std::string section, key, fallback, doc;
};

// Every recognized parameter with its default. Polynomial coefficients a0..a<degree> are handled separately.
inline const std::vector<ParamSpec>& schema() {
  static const std::vector<ParamSpec> s{
      {"potential", "family", "Zero", "SquareWell | Gaussian | PowerTail | PoschlTeller | Zero"},
      {"potential", "params", "", "comma separated family parameters"},
      {"potential", "m_inf", "1", "mass at infinity"},
      {"potential", "a_expr", "", "metric coefficient a(x); with c_expr replaces family"},
      {"potential", "c_expr", "", "coefficient c(x)"},
      {"polynomial", "degree", "4", "degree of P in lambda"},
      {"coupling", "g", "0", "space cutoff g(x) >= 0"},
      {"coupling", "quadrature_tol", "1e-06", "relative change allowed when halving the x nodes"},
      {"cutoffs", "nu", "1", "cells per unit momentum"},
      {"cutoffs", "kappa", "1", "momentum cutoff"},
      {"cutoffs", "n_max", "4", "particle number cutoff"},
      {"cutoffs", "e_max", "inf", "free energy cutoff"},
      {"grids", "x_min", "-12", "x grid start"},
      {"grids", "x_max", "12", "x grid end"},
      {"grids", "x_step", "0.05", "x grid spacing"},
      {"grids", "scatter_k_min", "0.001", "smallest momentum of the scattering table"},
      {"grids", "scatter_k_max", "50", "largest momentum of the scattering table"},
      {"grids", "scatter_k_points", "60", "log-spaced momenta in the scattering table"},
      {"grids", "eps", "0.01", "lower momentum cutoff for slowly decaying potentials"},
      {"grids", "basis_k_max", "30", "momentum range of the completeness check"},
      {"grids", "basis_k_panel", "0.5", "Gauss-Legendre panel width in k"},
      {"grids", "basis_k_order", "8", "nodes per k panel"},
      {"grids", "cell_order", "8", "Gauss-Legendre nodes per lattice cell"},
      {"grids", "bm2_k_min", "0.0001", "smallest momentum of the small-k scan"},
      {"grids", "bm2_k_max", "10", "largest momentum of the small-k scan"},
      {"grids", "bm2_k_points", "40", "log-spaced momenta of the small-k scan"},
      {"grids", "parseval_sigma", "0.5", "width of the Gaussian completeness test pair"},
      {"probes", "weight", "one", "one | power:<alpha> | mu_quarter | window:<R>"},
      {"probes", "bm2_alpha", "0", "small-k exponent allowed by BM2 (0) or BM2' (< 1/2)"},
      {"probes", "tol_res", "0.0001", "zero-energy resonance tolerance"},
      {"probes", "q", "8", "number of eigenvalues reported by spectrum"},
      {"probes", "tol", "1e-08", "eigenpair residual certification"},
      {"probes", "dense_limit", "2000", "largest dimension diagonalized densely"},
      {"probes", "max_restarts", "500", "Lanczos restart budget"},
      {"probes", "hvz_nu", "1,2,4", "refinement schedule in nu"},
      {"probes", "hvz_kappa", "1.5", "momentum cutoff of the HVZ levels"},
      {"probes", "hvz_n_max", "4", "particle cutoff of the HVZ levels"},
      {"probes", "hvz_e_max", "inf", "energy cutoff of the HVZ levels"},
      {"probes", "ratio_lo", "1.6", "smallest accepted band ratio when nu doubles"},
      {"probes", "ratio_hi", "2.4", "largest accepted band ratio when nu doubles"},
      {"probes", "shift_tol", "0.001", "allowed move of a discrete eigenvalue"},
      {"probes", "hoe_n_max", "4,6,8", "truncation schedule of the higher-order probe"},
      {"probes", "alphas", "1,2", "powers of N probed"},
      {"probes", "plateau", "1.25", "largest accepted max/min ratio over the schedule"},
      {"output", "dir", "runs", "root of the per-config output directories"},
  };
  return s;
}

inline bool is_coefficient_key(const std::string& section, const std::string& key) {
  return section == "polynomial" && key.size() >= 2 && key[0] == 'a' &&
         std::all_of(key.begin() + 1, key.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline bool known_key(const std::string& section, const std::string& key) {
  if (is_coefficient_key(section, key)) return true;
  for (const auto& p : schema())
    if (p.section == section && p.key == key) return true;
  return false;
}

inline bool known_section(const std::string& section) {
  for (const auto& p : schema())
    if (p.section == section) return true;
  return false;
}

// Sectioned key = value configuration. Holds the explicitly given values; defaults come from schema().
class RunConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static RunConfig parse(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw validation_error("ConfigSyntax", e.message() + " at line " + std::to_string(e.line()), "config");
    }
    RunConfig c;
    for (const auto& [section, body] : tree) {
      if (body.empty())
        throw validation_error("ConfigSyntax", "key '" + section + "' is outside any section", section);
      for (const auto& [key, node] : body) c.set(section, key, node.get_value<std::string>());
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("ConfigMissing", "cannot read " + path, "config");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  // canonical text: sections and keys in sorted order
  std::string serialize(bool include_output = true) const {
    std::string out;
    for (const auto& [section, body] : values_) {
      if (!include_output && section == "output") continue;
      out += "[" + section + "]\n";
      for (const auto& [k, v] : body) out += k + " = " + v + "\n";
      out += "\n";
    }
    return out;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    if (!known_section(section)) throw validation_error("UnknownSection", "unknown section [" + section + "]", section);
    if (!known_key(section, key))
      throw validation_error("UnknownKey", "unknown key '" + key + "' in [" + section + "]", section + "." + key);
    values_[section][key] = trim(value);
  }

  // "section.key=value"
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw validation_error("BadOverride", "expected section.key=value, got '" + assignment + "'", "--set");
    set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)), assignment.substr(eq + 1));
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    return s != values_.end() && s->second.count(key);
  }

  // explicit value, else the schema default
  std::string text(const std::string& section, const std::string& key) const {
    if (has(section, key)) return values_.at(section).at(key);
    for (const auto& p : schema())
      if (p.section == section && p.key == key) return p.fallback;
    // unset coefficients vanish except the top one, so a bare degree means lambda^degree
    if (is_coefficient_key(section, key)) return std::stoi(key.substr(1)) == integer("polynomial", "degree") ? "1" : "0";
    throw validation_error("UnknownKey", "no parameter " + section + "." + key, section + "." + key);
  }

  double number(const std::string& section, const std::string& key) const {
    return to_number(text(section, key), section + "." + key);
  }

  int integer(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw validation_error("BadParams", "expected an integer", section + "." + key);
    return static_cast<int>(v);
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    const std::string t = text(section, key);
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_number(item, section + "." + key));
    }
    return out;
  }

  // all parameters in effect (schema defaults merged with explicit values), sorted
  std::map<std::string, std::string> effective(bool include_output = false) const {
    std::map<std::string, std::string> out;
    for (const auto& p : schema())
      if (include_output || p.section != "output") out[p.section + "." + p.key] = text(p.section, p.key);
    const int deg = has("polynomial", "degree") ? integer("polynomial", "degree") : 4;
    for (int p = 0; p <= std::max(deg, 0); ++p) {
      const std::string k = "a" + std::to_string(p);
      out["polynomial." + k] = text("polynomial", k);
    }
    for (const auto& [section, body] : values_)
      for (const auto& [k, v] : body)
        if (include_output || section != "output") out[section + "." + k] = v;
    return out;
  }

  std::string effective_text() const {
    std::string out;
    for (const auto& [k, v] : effective()) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, Section>& values() const { return values_; }
  bool operator==(const RunConfig& o) const { return values_ == o.values_; }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

 private:
  std::map<std::string, Section> values_;

  static double to_number(const std::string& t, const std::string& field) {
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (...) {
      used = 0;
    }
    if (used == 0 || used != t.size() || std::isnan(v))
      throw validation_error("BadNumber", "'" + t + "' is not a number", field);
    return v;
  }
};

}  // namespace pphi2::app
