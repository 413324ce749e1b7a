#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "normcrit/asymptotics.hpp"
#include "normcrit/min_solver.hpp"
#include "normcrit/mp_solver.hpp"

namespace normcrit {

inline constexpr const char* kSchemaVersion = "normcrit-1";

/// 17 significant digits: exact binary round-trip through decimal.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline json to_json(const ProblemParams& p) {
  return {{"N", p.N},     {"a", p.a},         {"b", p.b},
          {"mu1", p.mu1}, {"mu2", p.mu2},     {"alpha", p.alpha},
          {"beta", p.beta}, {"nu", p.nu}};
}

inline json to_json(const DerivedConstants& c) {
  return {{"gamma", c.gamma},     {"two_star", c.two_star}, {"S", c.S},
          {"C_gn", c.C_gn},       {"A", c.A},               {"B", c.B},
          {"rho_nu", c.rho_nu},   {"nu_bar0", c.nu_bar0},   {"rho0", c.rho0},
          {"nu0", c.nu0},         {"k0", c.k0}};
}

inline json to_json(const MultiplierPair& m) {
  return {{"lambda1", m.lambda1}, {"lambda2", m.lambda2}};
}

inline json grid_to_json(const GridPtr& g) {
  return {{"N", g->dim()},
          {"R", g->radius()},
          {"M", g->size()},
          {"grading", g->grading() == Grading::graded ? "graded" : "uniform"}};
}

inline GridPtr grid_from_json(const json& j) {
  const std::string s = j.at("grading").get<std::string>();
  return build_grid(j.at("N").get<int>(), j.at("R").get<double>(),
                    j.at("M").get<std::size_t>(),
                    s == "graded" ? Grading::graded : Grading::uniform);
}

inline json state_to_json(const StatePair& s) {
  return {{"grid", grid_to_json(s.grid())},
          {"params", to_json(s.params)},
          {"u", s.u.values},
          {"v", s.v.values}};
}

inline ProblemParams params_from_json(const json& j) {
  ProblemParams p;
  p.N = j.at("N").get<int>();
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.mu1 = j.at("mu1").get<double>();
  p.mu2 = j.at("mu2").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.nu = j.at("nu").get<double>();
  return p;
}

inline StatePair state_from_json(const json& j) {
  GridPtr g = grid_from_json(j.at("grid"));
  RadialField u(g), v(g);
  const auto ju = j.at("u").get<std::vector<double>>();
  const auto jv = j.at("v").get<std::vector<double>>();
  if (ju.size() != g->size() || jv.size() != g->size())
    throw ConfigError("state field length does not match grid size");
  u.values = ju;
  v.values = jv;
  return StatePair(std::move(u), std::move(v), params_from_json(j.at("params")));
}

inline json result_to_json(const SolveResult& r) {
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = v;
  return {{"schema", kSchemaVersion},
          {"state", state_to_json(r.state)},
          {"params", to_json(r.state.params)},
          {"constants", to_json(r.constants)},
          {"level", r.level},
          {"multipliers", to_json(r.multipliers)},
          {"grad_residual", r.grad_residual},
          {"poho_residual", r.poho_residual},
          {"kinetic", r.kinetic},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"diagnostics", diag}};
}

inline json to_json(const BubbleOrderReport& rep) {
  json norms = json::array();
  for (const auto& b : rep.norms)
    norms.push_back({{"n", b.n},
                     {"mass_sq", b.mass_sq},
                     {"grad_sq", b.grad_sq},
                     {"crit_norm", b.crit_norm},
                     {"xi", b.xi_val}});
  return {{"schema", kSchemaVersion},
          {"norms", norms},
          {"grad_order", {{"slope", rep.grad_order.slope}, {"r2", rep.grad_order.r2}}},
          {"crit_order", {{"slope", rep.crit_order.slope}, {"r2", rep.crit_order.r2}}},
          {"mass_ratio_min", rep.mass_ratio_min},
          {"mass_ratio_max", rep.mass_ratio_max}};
}

inline json to_json(const LevelBoundSummary& s) {
  json reps = json::array();
  for (const auto& r : s.reports)
    reps.push_back({{"n", r.n},
                    {"t_max", r.t_max},
                    {"H_max", r.H_max},
                    {"bound", r.bound},
                    {"satisfied", r.satisfied},
                    {"cross_terms",
                     {{"linear", r.cross_linear}, {"critical", r.cross_critical}}}});
  return {{"schema", kSchemaVersion},
          {"reports", reps},
          {"cross_linear_slope", s.cross_linear_order.slope},
          {"cross_critical_slope", s.cross_critical_order.slope}};
}

/// Full run configuration: problem instance, grid, solver knobs, outputs.
struct RunSpec {
  ProblemParams params;
  int grid_M = 4000;
  double grid_R = 0.0;  // 0 -> dimension default
  Grading grading = Grading::graded;
  SolverOptions solver;
  MountainPassOptions mp;
  double nu0_fraction = 0.5;
  double C_gn = 0.0;  // 0 -> estimate
  int gn_trials = 12;
  std::uint64_t seed = 20240801;
  std::vector<double> nu_list;  // empty -> default ladder
  bool sweep_include_mp = true;

  GridPtr make_grid() const {
    const double R = grid_R > 0.0 ? grid_R : (params.N == 3 ? 100.0 : 60.0);
    return build_grid(params.N, R, static_cast<std::size_t>(grid_M), grading);
  }
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& keys,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunSpec spec_from_json(const json& j) {
  detail::reject_unknown(j, {"params", "grid", "solver", "mp", "nu0_fraction",
                             "C_gn", "gn_trials", "seed", "nu_list",
                             "sweep_include_mp"},
                         "config root");
  RunSpec spec;
  if (!j.contains("params")) throw ConfigError("config requires 'params'");
  {
    const json& p = j.at("params");
    detail::reject_unknown(p, {"N", "a", "b", "mu1", "mu2", "alpha", "beta", "nu"},
                           "params");
    detail::maybe(p, "N", spec.params.N);
    detail::maybe(p, "a", spec.params.a);
    detail::maybe(p, "b", spec.params.b);
    detail::maybe(p, "mu1", spec.params.mu1);
    detail::maybe(p, "mu2", spec.params.mu2);
    detail::maybe(p, "alpha", spec.params.alpha);
    detail::maybe(p, "beta", spec.params.beta);
    detail::maybe(p, "nu", spec.params.nu);
  }
  try {
    validate(spec.params);
  } catch (const ParamError& e) {
    throw ConfigError(std::string("invalid params: ") + e.what());
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    detail::reject_unknown(g, {"R", "M", "grading"}, "grid");
    detail::maybe(g, "R", spec.grid_R);
    detail::maybe(g, "M", spec.grid_M);
    if (g.contains("grading")) {
      const std::string s = g.at("grading").get<std::string>();
      if (s == "uniform")
        spec.grading = Grading::uniform;
      else if (s == "graded")
        spec.grading = Grading::graded;
      else
        throw ConfigError("grading must be 'uniform' or 'graded'");
    }
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::reject_unknown(s,
                           {"tol_grad", "tol_mass", "tol_poho", "max_iter",
                            "rearrange_every", "init_width", "t_min", "t_max"},
                           "solver");
    detail::maybe(s, "tol_grad", spec.solver.tol_grad);
    detail::maybe(s, "tol_mass", spec.solver.tol_mass);
    detail::maybe(s, "tol_poho", spec.solver.tol_poho);
    detail::maybe(s, "max_iter", spec.solver.max_iter);
    detail::maybe(s, "rearrange_every", spec.solver.rearrange_every);
    detail::maybe(s, "init_width", spec.solver.init_width);
    detail::maybe(s, "t_min", spec.solver.fiber_window.lo);
    detail::maybe(s, "t_max", spec.solver.fiber_window.hi);
  }
  if (j.contains("mp")) {
    const json& m = j.at("mp");
    detail::reject_unknown(m, {"path_K", "deform_max_iter", "deform_tol_grad",
                               "redistribute_every", "polish_max_iter",
                               "polish_tol_grad"},
                           "mp");
    std::size_t K = spec.mp.path_K;
    detail::maybe(m, "path_K", K);
    spec.mp.path_K = K;
    detail::maybe(m, "deform_max_iter", spec.mp.deform.max_iter);
    detail::maybe(m, "deform_tol_grad", spec.mp.deform.tol_grad);
    detail::maybe(m, "redistribute_every", spec.mp.deform.redistribute_every);
    detail::maybe(m, "polish_max_iter", spec.mp.polish.max_iter);
    detail::maybe(m, "polish_tol_grad", spec.mp.polish.tol_grad);
  }
  detail::maybe(j, "nu0_fraction", spec.nu0_fraction);
  detail::maybe(j, "C_gn", spec.C_gn);
  detail::maybe(j, "gn_trials", spec.gn_trials);
  detail::maybe(j, "seed", spec.seed);
  detail::maybe(j, "sweep_include_mp", spec.sweep_include_mp);
  if (j.contains("nu_list"))
    spec.nu_list = j.at("nu_list").get<std::vector<double>>();
  return spec;
}

/// Echo of every effective value; round-trips losslessly through
/// spec_from_json.
inline json spec_to_json(const RunSpec& spec) {
  json j;
  j["params"] = to_json(spec.params);
  j["grid"] = {{"R", spec.grid_R > 0.0 ? spec.grid_R
                                       : (spec.params.N == 3 ? 100.0 : 60.0)},
               {"M", spec.grid_M},
               {"grading", spec.grading == Grading::graded ? "graded" : "uniform"}};
  j["solver"] = {{"tol_grad", spec.solver.tol_grad},
                 {"tol_mass", spec.solver.tol_mass},
                 {"tol_poho", spec.solver.tol_poho},
                 {"max_iter", spec.solver.max_iter},
                 {"rearrange_every", spec.solver.rearrange_every},
                 {"init_width", spec.solver.init_width},
                 {"t_min", spec.solver.fiber_window.lo},
                 {"t_max", spec.solver.fiber_window.hi}};
  j["mp"] = {{"path_K", spec.mp.path_K},
             {"deform_max_iter", spec.mp.deform.max_iter},
             {"deform_tol_grad", spec.mp.deform.tol_grad},
             {"redistribute_every", spec.mp.deform.redistribute_every},
             {"polish_max_iter", spec.mp.polish.max_iter},
             {"polish_tol_grad", spec.mp.polish.tol_grad}};
  j["nu0_fraction"] = spec.nu0_fraction;
  j["C_gn"] = spec.C_gn;
  j["gn_trials"] = spec.gn_trials;
  j["seed"] = spec.seed;
  j["sweep_include_mp"] = spec.sweep_include_mp;
  if (!spec.nu_list.empty()) j["nu_list"] = spec.nu_list;
  return j;
}

inline RunSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return spec_from_json(j);
}

inline void write_field_csv(const std::string& path, const RadialField& f) {
  std::ofstream out(path);
  out << "r,value\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    out << fmt17(f.grid->node(i)) << ',' << fmt17(f[i]) << '\n';
}

inline void write_pair_csv(const std::string& path, const StatePair& s) {
  std::ofstream out(path);
  out << "r,u,v\n";
  for (std::size_t i = 0; i < s.u.size(); ++i)
    out << fmt17(s.grid()->node(i)) << ',' << fmt17(s.u[i]) << ','
        << fmt17(s.v[i]) << '\n';
}

inline void write_curve_csv(const std::string& path,
                            const std::vector<std::pair<double, double>>& curve) {
  std::ofstream out(path);
  out << "t,H\n";
  for (auto [t, H] : curve) out << fmt17(t) << ',' << fmt17(H) << '\n';
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "nu,m_level,mp_level,kinetic_min,kinetic_mp,lambda1,lambda2,"
         "lambda1_mp,lambda2_mp,supnorm_u,supnorm_v,t_nu,gs_distance,"
         "eps_nu,bubble_distance,converged_min,converged_mp\n";
  for (const auto& r : records) {
    out << fmt17(r.nu) << ',' << fmt17(r.m_level) << ',' << fmt17(r.mp_level)
        << ',' << fmt17(r.kinetic_min) << ',' << fmt17(r.kinetic_mp) << ','
        << fmt17(r.lambda1) << ',' << fmt17(r.lambda2) << ','
        << fmt17(r.lambda1_mp) << ',' << fmt17(r.lambda2_mp) << ','
        << fmt17(r.supnorm_u) << ',' << fmt17(r.supnorm_v) << ','
        << fmt17(r.t_nu) << ',' << fmt17(r.gs_distance) << ','
        << fmt17(r.eps_nu) << ',' << fmt17(r.bubble_distance) << ','
        << (r.converged_min ? 1 : 0) << ',' << (r.converged_mp ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace normcrit
