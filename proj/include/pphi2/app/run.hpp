#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pphi2/app/config.hpp"
#include "pphi2/app/io.hpp"
#include "pphi2/app/model.hpp"
#include "pphi2/schrodinger/resonance.hpp"
#include "pphi2/spectral/probes.hpp"

namespace pphi2::app {

using nlohmann::json;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"scatter", "bound-states", "resonance", "eigenbasis", "check-bm",
                                          "build",   "spectrum",     "hvz-probe", "hoe-check",  "pipeline"};
  return s;
}

// Fixed internal tolerances; reported in every manifest next to the configurable ones.
inline json internal_tolerances() {
  const JostOptions jo;
  const KernelOptions ko;
  const WkbOptions wo;
  return {{"jost_tail_tol", jo.tail_tol},
          {"jost_x_cap", jo.x_cap},
          {"kernel_imag_tol", ko.imag_tol},
          {"kernel_nodes_per_period", ko.nodes_per_period},
          {"wkb_picard_tol", wo.picard_tol},
          {"cg_tol", 1e-10},
          {"ground_multiplet_tol", 1e-10},
          {"unitarity_tol", 1e-6},
          {"relative_unitarity_tol", 1e-10},
          {"bound_residual_tol", 1e-6},
          {"symmetrization_tol", 1e-8},
          {"parseval_tol", 1e-4},
          {"hvz_edge_tol", 1e-9},
          {"free_hoe_tol", 1e-9}};
}

struct RunContext {
  RunConfig config;
  std::vector<std::string> overrides;
  std::string hash;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  json artifacts = json::array();
  // lazily built objects shared between pipeline stages
  std::optional<Model> model;
  std::map<std::pair<double, double>, Discretization> disc;

  const Model& get_model() {
    if (!model) model = model_from(config, seed);
    return *model;
  }
  const Discretization& get_disc(double nu, double kappa) {
    const auto key = std::make_pair(nu, kappa);
    auto it = disc.find(key);
    if (it == disc.end()) it = disc.emplace(key, discretize(get_model(), nu, kappa)).first;
    return it->second;
  }
  void emit(const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    artifacts.push_back(name);
  }
  void emit_json(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }
};

// hash of every parameter in effect except the output location
inline RunContext make_context(RunConfig config, std::vector<std::string> overrides,
                               const std::optional<std::string>& out_root = std::nullopt) {
  RunContext ctx;
  for (const auto& o : overrides) config.apply_override(o);
  ctx.config = std::move(config);
  ctx.overrides = std::move(overrides);
  ctx.hash = sha256_hex(ctx.config.effective_text());
  ctx.seed = std::stoull(ctx.hash.substr(0, 16), nullptr, 16);
  const std::filesystem::path root = out_root ? *out_root : ctx.config.text("output", "dir");
  ctx.dir = root / ctx.hash.substr(0, 16);
  std::error_code ec;
  std::filesystem::create_directories(ctx.dir, ec);
  if (ec) throw validation_error("OutputUnwritable", "cannot create " + ctx.dir.string() + ": " + ec.message(), "output.dir");
  return ctx;
}

inline json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline bool slow(const ReducedPotential& V) { return V.profile != SignProfile::QuickDecay; }

inline std::vector<double> log_spaced(double a, double b, int n, const std::string& field) {
  if (!(a > 0) || !(b > a) || n < 2) throw validation_error("BadGrid", "need 0 < min < max and at least 2 points", field);
  std::vector<double> k(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = a * std::pow(b / a, double(j) / (n - 1));
  k.back() = b;
  return k;
}

inline json stage_scatter(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto& c = ctx.config;
  const auto ks = log_spaced(c.number("grids", "scatter_k_min"), c.number("grids", "scatter_k_max"),
                             c.integer("grids", "scatter_k_points"), "grids.scatter_k_min");
  const double eps = c.number("grids", "eps");
  if (slow(m.V) && ks.front() < eps)
    throw validation_error("ZetaTooSmall", "scattering momenta must not go below eps for a slowly decaying potential",
                           "grids.scatter_k_min");
  const auto sd = slow(m.V) ? wkb_scattering(m.V, ks, eps) : scattering_data(m.V, ks);
  CsvWriter csv({"k", "re_w", "im_w", "abs_m", "abs_m_pp", "unitarity_defect", "relative_unitarity_defect"});
  double worst = 0, worst_rel = 0;
  bool pass = true;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const double d = sd.unitarity_defect(j), r = sd.relative_unitarity_defect(j);
    csv.row({ks[j], sd.w[j].real(), sd.w[j].imag(), std::abs(sd.m[j]), std::abs(sd.m_pp[j]), d, r});
    worst = std::max(worst, d);
    worst_rel = std::max(worst_rel, r);
    // the absolute defect is resolvable only while |m|^2 is within double range of 1
    pass = pass && (std::norm(sd.m[j]) < 1e6 ? d < 1e-6 : r < 1e-10);
  }
  ctx.emit("scatter.csv", csv.str());
  json s{{"potential", m.V.name},
         {"profile", to_string(m.V.profile)},
         {"method", slow(m.V) ? "wkb" : "jost"},
         {"w0", complex_json(sd.w0)},
         {"resonance_flag", sd.resonance_flag},
         {"max_unitarity_defect", worst},
         {"max_relative_unitarity_defect", worst_rel},
         {"pass", pass}};
  if (std::isfinite(m.V.mu)) s["mu"] = m.V.mu;
  ctx.emit_json("scatter.json", s);
  return s;
}

inline json stage_bound_states(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto bs = bound_states(m.V, m.x, m.m_inf);
  CsvWriter csv({"index", "lambda", "epsilon", "residual"});
  bool pass = true;
  double worst = 0;
  for (const auto& b : bs) {
    const double r = bound_state_residual(m.V, m.x, b);
    worst = std::max(worst, r);
    pass = pass && r < 1e-6;
    csv.row({static_cast<long long>(b.index), b.lambda, b.epsilon, r});
  }
  ctx.emit("bound_states.csv", csv.str());
  json s{{"count", bs.size()}, {"max_residual", worst}, {"pass", pass}};
  ctx.emit_json("bound_states.json", s);
  return s;
}

struct ResonanceSummary {
  cplx w0{};
  bool is_resonance = false;
  json detail;
};

inline ResonanceSummary resonance_of(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const double tol = ctx.config.number("probes", "tol_res");
  ResonanceSummary r;
  if (slow(m.V)) {
    WkbResonanceOptions o;
    o.tol_res = tol;
    const auto w = wkb_resonance(m.V, m.x, o);
    r.w0 = w.m0;
    r.is_resonance = w.is_resonance;
    r.detail = {{"method", "wkb"}, {"m0", complex_json(w.m0)}, {"relative", w.relative}, {"spread", w.spread}};
  } else {
    ResonanceOptions o;
    o.tol_res = tol;
    const auto d = detect_resonance(m.V, o);
    r.w0 = d.w0;
    r.is_resonance = d.is_resonance;
    r.detail = {{"method", "jost"},
                {"w0_extrapolated", complex_json(d.w0_extrapolated)},
                {"w_ref", d.w_ref},
                {"picard_iterations", d.picard_iterations}};
  }
  return r;
}

inline json stage_resonance(RunContext& ctx) {
  const auto r = resonance_of(ctx);
  json s{{"w0", complex_json(r.w0)}, {"is_resonance", r.is_resonance}, {"detail", r.detail}, {"pass", true}};
  ctx.emit_json("resonance.json", s);
  return s;
}

inline Eigen::VectorXcd gaussian_on(const Grid& x, double c, double s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::exp(-0.5 * std::pow((x[i] - c) / s, 2));
  return v;
}

inline json stage_eigenbasis(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto& c = ctx.config;
  EigenbasisOptions opt;
  opt.eps = c.number("grids", "eps");
  // an attractive tail with mu < 2 has infinitely many levels; only the continuum is assembled
  opt.include_bound = m.V.profile != SignProfile::SlowNegative;
  const double kmax = c.number("grids", "basis_k_max");
  const auto kg = MomentumGrid::gauss(kmax, slow(m.V) ? opt.eps : 0.0, c.number("grids", "basis_k_panel"),
                                      c.integer("grids", "basis_k_order"));
  const auto raw = eigenbasis(m.V, m.m_inf, m.x, kg, opt);
  SymmetrizationReport rep;
  const auto sym = symmetrize_real(raw, &rep);
  const double sigma = c.number("grids", "parseval_sigma");
  const auto f = gaussian_on(m.x, 0, sigma), g = gaussian_on(m.x, 0.5 * sigma, sigma);
  const double pd = parseval_defect(sym, f, g), pd_half = parseval_defect(truncate_momenta(sym, 0.5 * kmax), f, g);
  CsvWriter csv({"k", "re_m", "im_m", "sup_psi", "sup_psi_symmetrized"});
  for (std::size_t j = 0; j < kg.half(); ++j) {
    double a = 0, b = 0;
    for (auto col : {kg.pos(j), kg.neg(j)}) {
      a = std::max(a, raw.continuum.col(static_cast<Eigen::Index>(col)).cwiseAbs().maxCoeff());
      b = std::max(b, sym.continuum.col(static_cast<Eigen::Index>(col)).cwiseAbs().maxCoeff());
    }
    csv.row({kg.k[kg.pos(j)], raw.m[j].real(), raw.m[j].imag(), a, b});
  }
  ctx.emit("eigenbasis.csv", csv.str());
  const bool pass = rep.reality_defect < 1e-8 && rep.a_unitarity < 1e-8 && pd < 1e-4;
  json s{{"bound_count", raw.bound.size()},
         {"continuum_nodes", kg.size()},
         {"s_unitarity", rep.s_unitarity},
         {"a_unitarity", rep.a_unitarity},
         {"reality_defect", rep.reality_defect},
         {"sup_ratio", rep.sup_ratio},
         {"parseval_defect", pd},
         {"parseval_defect_half_range", pd_half},
         {"bound_states_included", opt.include_bound},
         {"pass", pass}};
  ctx.emit_json("eigenbasis.json", s);
  return s;
}

inline json stage_check_bm(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto& c = ctx.config;
  const auto M = weight_from(c, m.V.mu);
  const auto res = resonance_of(ctx);
  const std::vector<BoundState> bound =
      m.V.profile == SignProfile::SlowNegative ? std::vector<BoundState>{} : bound_states(m.V, m.x, m.m_inf);
  const auto bm1 = check_bm1(bound, m.x, M);
  EigenbasisOptions opt;
  opt.eps = c.number("grids", "eps");
  opt.include_bound = false;
  const double kmin = std::max(c.number("grids", "bm2_k_min"), slow(m.V) ? opt.eps : 0.0);
  const auto kg = MomentumGrid::geometric(kmin, c.number("grids", "bm2_k_max"),
                                          static_cast<std::size_t>(c.integer("grids", "bm2_k_points")));
  const auto basis = symmetrize_real(eigenbasis(m.V, m.m_inf, m.x, kg, opt));
  const auto bm2 = check_bm2(basis, M, c.number("probes", "bm2_alpha"));
  const auto bm3 = check_bm3(m.P, M);
  json table = json::array();
  for (const auto& e : bm3.table)
    table.push_back({{"p", e.p}, {"s", e.s}, {"l2", e.l2}, {"l1", e.l1}, {"pass", e.pass()}});
  CsvWriter csv({"k", "sup_psi_over_M"});
  for (std::size_t j = 0; j < bm2.k.size(); ++j) csv.row({bm2.k[j], bm2.sup[j]});
  ctx.emit("bm2_profile.csv", csv.str());
  json s{{"w0", complex_json(res.w0)},
         {"is_resonance", res.is_resonance},
         {"bm1", {{"sum", bm1.sum}, {"summands", bm1.summands}, {"decay_slope", bm1.decay_slope}, {"pass", bm1.pass}}},
         {"bm2", {{"C", bm2.C}, {"alpha", bm2.alpha_fit}, {"caveats", bm2.caveats}, {"pass", bm2.pass}}},
         {"bm3", table},
         {"bm3_pass", bm3.pass},
         {"pass", bm1.pass && bm2.pass && bm3.pass}};
  ctx.emit_json("check_bm.json", s);
  return s;
}

struct Cutoffs {
  double nu, kappa, e_max;
  int n_max;
};

inline Cutoffs cutoffs(const RunConfig& c) {
  return {c.number("cutoffs", "nu"), c.number("cutoffs", "kappa"), c.number("cutoffs", "e_max"),
          c.integer("cutoffs", "n_max")};
}

inline json stage_build(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto cut = cutoffs(ctx.config);
  const auto& d = ctx.get_disc(cut.nu, cut.kappa);
  const auto t = truncate(m, d, cut.n_max, cut.e_max);
  const auto bundle = assemble_hamiltonian(d.modes, t.fock, t.V.V, m.spectrum, ctx.hash);
  std::ostringstream coo;
  bundle.H.write_coo(coo);
  ctx.emit("operator_H.coo", coo.str());
  ctx.emit_json("operator_H.json", bundle.H.header());
  json modes = json::array();
  for (const auto& md : d.modes.modes) modes.push_back({{"label", md.label()}, {"omega", md.omega}});
  json s{{"dim", t.fock.size()},
         {"modes", modes},
         {"nnz", bundle.H.m.nonZeros()},
         {"ground_energy", bundle.ground_energy},
         {"ground_multiplet", bundle.ground_multiplet},
         {"b", bundle.b},
         {"scalar", t.V.scalar},
         {"x_nodes", d.table.nodes()},
         {"quadrature_change", t.V.quadrature_change},
         {"kernel_imag_residue", d.table.imag_residue},
         {"top_band_fraction", t.V.top_band_fraction},
         {"warnings", t.V.warnings},
         {"provenance", bundle.provenance},
         {"pass", true}};
  ctx.emit_json("build.json", s);
  return s;
}

inline json stage_spectrum(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto cut = cutoffs(ctx.config);
  const auto& d = ctx.get_disc(cut.nu, cut.kappa);
  const auto t = truncate(m, d, cut.n_max, cut.e_max);
  const int q = ctx.config.integer("probes", "q");
  if (q < 1) throw validation_error("BadParams", "q must be positive", "probes.q");
  const auto r = low_spectrum(t.H, static_cast<std::size_t>(q), m.spectrum);
  CsvWriter csv({"index", "eigenvalue", "residual"});
  bool pass = true;
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    csv.row({static_cast<long long>(i), r.eigenvalues[i], r.residuals[i]});
    pass = pass && r.residuals[i] < m.spectrum.tol;
  }
  ctx.emit("spectrum.csv", csv.str());
  json s{{"method", r.method}, {"dim", r.dim},         {"nu", cut.nu},
         {"kappa", cut.kappa}, {"n_max", cut.n_max},   {"e_max", cut.e_max},
         {"E0", r.eigenvalues.front()}, {"pass", pass}};
  if (r.eigenvalues.size() > 1) s["gap"] = r.eigenvalues[1] - r.eigenvalues[0];
  ctx.emit_json("spectrum.json", s);
  return s;
}

inline json stage_hvz(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto& c = ctx.config;
  std::vector<RefinementLevel> levels;
  for (double nu : c.numbers("probes", "hvz_nu"))
    levels.push_back({nu, c.number("probes", "hvz_kappa"), c.integer("probes", "hvz_n_max"), c.number("probes", "hvz_e_max")});
  const LevelBuilder build = [&](const RefinementLevel& lv) {
    return truncate(m, ctx.get_disc(lv.nu, lv.kappa), lv.n_max, lv.e_max).H;
  };
  const auto r = hvz_probe(build, levels, m.m_inf, -1, m.spectrum, c.number("probes", "ratio_lo"),
                           c.number("probes", "ratio_hi"), c.number("probes", "shift_tol"));
  CsvWriter csv({"level", "nu", "kappa", "n_max", "dim", "E0", "E1", "band_count", "discrete_count"});
  json rows = json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    csv.row({static_cast<long long>(i), row.level.nu, row.level.kappa, static_cast<long long>(row.level.n_max),
             static_cast<long long>(row.dim), row.E0, row.E1, static_cast<long long>(row.band_count),
             static_cast<long long>(row.discrete.size())});
    rows.push_back({{"discrete", row.discrete}});
  }
  ctx.emit("hvz.csv", csv.str());
  json s{{"band_ratios", r.band_ratios}, {"discrete_shift", r.discrete_shift}, {"band_pass", r.band_pass},
         {"discrete_pass", r.discrete_pass}, {"ground_pass", r.ground_pass}, {"levels", rows},
         {"pass", r.pass()}};
  ctx.emit_json("hvz.json", s);
  return s;
}

inline bool zero_coupling(const Model& m) {
  for (double x : m.x.x)
    if (m.P.g(x) != 0) return false;
  return true;
}

inline json stage_hoe(RunContext& ctx) {
  const auto& m = ctx.get_model();
  const auto& c = ctx.config;
  const auto cut = cutoffs(c);
  const auto& d = ctx.get_disc(cut.nu, cut.kappa);
  std::vector<int> schedule;
  for (double v : c.numbers("probes", "hoe_n_max")) {
    if (v != std::floor(v) || v < 1) throw validation_error("BadParams", "truncations must be positive integers", "probes.hoe_n_max");
    schedule.push_back(static_cast<int>(v));
  }
  std::vector<int> alphas;
  for (double a : c.numbers("probes", "alphas")) alphas.push_back(static_cast<int>(a));
  // one shift b for the whole schedule: the largest one needed, from the lowest ground energy
  std::map<int, TruncatedModel> models;
  double b = 1;
  for (int nm : schedule) {
    auto t = truncate(m, d, nm, cut.e_max);
    const double e0 = low_spectrum(t.H, 1, m.spectrum).eigenvalues.front();
    b = std::max(b, shift_from_ground(e0));
    models[nm] = TruncatedModel{t.H, number_operator(t.fock), 1};
  }
  for (auto& [nm, tm] : models) tm.b = b;
  const auto r = higher_order_probe([&](int nm) { return models.at(nm); }, schedule, alphas, c.number("probes", "plateau"),
                                    m.spectrum);
  CsvWriter csv({"n_max", "alpha", "dim", "b", "norm_estimate", "mixed_estimate"});
  double free_max = 0;
  for (const auto& row : r.rows) {
    csv.row({static_cast<long long>(row.n_max), static_cast<long long>(row.alpha), static_cast<long long>(row.dim), row.b,
             row.norm, row.mixed});
    if (row.alpha == 1) free_max = std::max(free_max, row.norm);
  }
  ctx.emit("hoe.csv", csv.str());
  json s{{"alphas", r.alphas}, {"spread", r.spread}, {"mixed_spread", r.mixed_spread}, {"b", b}, {"pass", r.pass}};
  if (zero_coupling(m)) {
    // free field: ||N (H0 + b)^-1|| <= 1/m_inf
    s["free_alpha1_max"] = free_max;
    s["free_bound_pass"] = free_max <= 1 / m.m_inf + 1e-9;
    s["pass"] = r.pass && free_max <= 1 / m.m_inf + 1e-9;
  }
  ctx.emit_json("hoe.json", s);
  return s;
}

inline json run_stage(RunContext& ctx, const std::string& cmd) {
  if (cmd == "scatter") return stage_scatter(ctx);
  if (cmd == "bound-states") return stage_bound_states(ctx);
  if (cmd == "resonance") return stage_resonance(ctx);
  if (cmd == "eigenbasis") return stage_eigenbasis(ctx);
  if (cmd == "check-bm") return stage_check_bm(ctx);
  if (cmd == "build") return stage_build(ctx);
  if (cmd == "spectrum") return stage_spectrum(ctx);
  if (cmd == "hvz-probe") return stage_hvz(ctx);
  if (cmd == "hoe-check") return stage_hoe(ctx);
  if (cmd == "pipeline") {
    json stages = json::object();
    bool all = true;
    for (const auto& s : subcommands()) {
      if (s == "pipeline") continue;
      const auto r = run_stage(ctx, s);
      stages[s] = r;
      all = all && r.value("pass", false);
    }
    json s{{"stages", json::object()}, {"all_pass", all}};
    for (auto& [name, r] : stages.items()) s["stages"][name] = r.value("pass", false);
    if (stages["spectrum"].contains("gap")) s["gap"] = stages["spectrum"]["gap"];
    ctx.emit_json("pipeline.json", s);
    return s;
  }
  throw validation_error("UnknownCommand", "unknown subcommand '" + cmd + "'", "command");
}

// runs one subcommand and writes its manifest; returns the stage summary
inline json run(RunContext& ctx, const std::string& cmd) {
  auto summary = run_stage(ctx, cmd);
  json params = json::object();
  for (const auto& [k, v] : ctx.config.effective()) params[k] = v;
  json manifest{{"command", cmd},
                {"config_hash", ctx.hash},
                {"seed", ctx.seed},
                {"parameters", params},
                {"explicit", ctx.config.serialize(false)},
                {"overrides", ctx.overrides},
                {"internal_tolerances", internal_tolerances()},
                {"artifacts", ctx.artifacts},
                {"summary", summary}};
  write_json(ctx.dir / ("manifest-" + cmd + ".json"), manifest);
  return summary;
}

inline int exit_code(const Error& e) { return e.kind() == ErrorKind::validation ? 2 : 3; }

inline json error_record(const Error& e) {
  return {{"error", {{"code", e.code()}, {"kind", e.kind() == ErrorKind::validation ? "validation" : "numerical"},
                     {"field", e.field()}, {"message", e.what()}}}};
}

}  // namespace pphi2::app
