// Command-line front end: one subcommand per operation, JSON/CSV artifacts.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normcrit/io.hpp"

namespace {

using normcrit::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

normcrit::RunSpec load_or_default(const std::string& config_path) {
  if (config_path.empty()) return normcrit::RunSpec{};
  return normcrit::load_config(config_path);
}

void emit(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw normcrit::ConfigError("cannot write: " + out_path);
    out << text;
  }
}

double resolved_C_gn(const normcrit::RunSpec& spec, const normcrit::GridPtr& g) {
  if (spec.C_gn > 0.0) return spec.C_gn;
  return normcrit::gn_estimate(g, spec.params.alpha, spec.params.beta,
                               spec.gn_trials, spec.seed);
}

int effective_jobs(int jobs_flag) {
  if (const char* env = std::getenv("NORMCRIT_JOBS")) {
    try {
      jobs_flag = std::stoi(env);
    } catch (...) {
      throw normcrit::ConfigError("NORMCRIT_JOBS must be an integer");
    }
  }
  return jobs_flag < 1 ? 1 : jobs_flag;
}

int cmd_constants(const std::string& config_path, const std::string& out_path) {
  const normcrit::RunSpec spec = load_or_default(config_path);
  const normcrit::GridPtr g = spec.make_grid();
  const double C_gn = resolved_C_gn(spec, g);
  const normcrit::DerivedConstants c =
      normcrit::derive_constants(spec.params, C_gn, spec.nu0_fraction);
  json j = normcrit::to_json(c);
  j["schema"] = normcrit::kSchemaVersion;
  j["run_spec"] = normcrit::spec_to_json(spec);
  j["geometry_ok"] = normcrit::geometry_ok(spec.params, c);
  emit(j, out_path);
  return kExitOk;
}

int cmd_gn_estimate(const std::string& config_path, const std::string& out_path) {
  const normcrit::RunSpec spec = load_or_default(config_path);
  const normcrit::GridPtr g = spec.make_grid();
  const double C_gn = normcrit::gn_estimate(g, spec.params.alpha,
                                            spec.params.beta, spec.gn_trials,
                                            spec.seed);
  json j = {{"schema", normcrit::kSchemaVersion},
            {"C_gn", C_gn},
            {"trials", spec.gn_trials},
            {"seed", spec.seed},
            {"run_spec", normcrit::spec_to_json(spec)}};
  emit(j, out_path);
  return kExitOk;
}

int cmd_solve_min(const std::string& config_path, const std::string& out_path,
                  const std::string& fields_path) {
  const normcrit::RunSpec spec = load_or_default(config_path);
  const normcrit::GridPtr g = spec.make_grid();
  const double C_gn = resolved_C_gn(spec, g);
  const normcrit::DerivedConstants c =
      normcrit::derive_constants(spec.params, C_gn, spec.nu0_fraction);
  const normcrit::SolveResult res =
      normcrit::solve_local_min(spec.params, g, c, spec.solver);
  json j = normcrit::result_to_json(res);
  j["run_spec"] = normcrit::spec_to_json(spec);
  emit(j, out_path);
  if (!fields_path.empty()) normcrit::write_pair_csv(fields_path, res.state);
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_solve_mp(const std::string& config_path, const std::string& min_path,
                 const std::string& out_path, const std::string& fields_path) {
  const normcrit::RunSpec spec = load_or_default(config_path);
  std::ifstream in(min_path);
  if (!in) throw normcrit::ConfigError("cannot read minimizer result: " + min_path);
  const json jmin = json::parse(in);
  normcrit::SolveResult minimizer;
  minimizer.state = normcrit::state_from_json(jmin.at("state"));
  minimizer.level = jmin.at("level").get<double>();
  minimizer.kinetic = jmin.at("kinetic").get<double>();
  minimizer.converged = jmin.at("converged").get<bool>();
  {
    const json& jc = jmin.at("constants");
    normcrit::DerivedConstants& c = minimizer.constants;
    c.gamma = jc.at("gamma");
    c.two_star = jc.at("two_star");
    c.S = jc.at("S");
    c.C_gn = jc.at("C_gn");
    c.A = jc.at("A");
    c.B = jc.at("B");
    c.rho_nu = jc.at("rho_nu");
    c.nu_bar0 = jc.at("nu_bar0");
    c.rho0 = jc.at("rho0");
    c.nu0 = jc.at("nu0");
    c.k0 = jc.at("k0");
  }
  if (!minimizer.converged)
    throw normcrit::ConfigError("minimizer result is not converged");
  const normcrit::GridPtr g = minimizer.state.grid();
  const normcrit::SolveResult res = normcrit::solve_mountain_pass(
      minimizer.state.params, minimizer, g, spec.mp);
  json j = normcrit::result_to_json(res);
  j["run_spec"] = normcrit::spec_to_json(spec);
  emit(j, out_path);
  if (!fields_path.empty()) normcrit::write_pair_csv(fields_path, res.state);
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_level_bound(const std::string& min_path, const std::vector<int>& n_list,
                    const std::string& out_path, const std::string& curve_prefix) {
  std::ifstream in(min_path);
  if (!in) throw normcrit::ConfigError("cannot read minimizer result: " + min_path);
  const json jmin = json::parse(in);
  normcrit::SolveResult minimizer;
  minimizer.state = normcrit::state_from_json(jmin.at("state"));
  minimizer.level = jmin.at("level").get<double>();
  minimizer.converged = jmin.at("converged").get<bool>();
  if (!minimizer.converged)
    throw normcrit::ConfigError("minimizer result is not converged");
  const auto t_grid = normcrit::default_t_grid();
  const normcrit::LevelBoundSummary summary =
      normcrit::level_bound_check(minimizer, n_list, t_grid);
  json j = normcrit::to_json(summary);
  emit(j, out_path);
  if (!curve_prefix.empty()) {
    for (int n : n_list) {
      const auto curve = normcrit::level_bound_curve(minimizer, n, t_grid);
      normcrit::write_curve_csv(curve_prefix + std::to_string(n) + ".csv", curve);
    }
  }
  bool all_ok = !summary.reports.empty();
  for (const auto& r : summary.reports) all_ok = all_ok && r.satisfied;
  return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_bubble_orders(const std::string& config_path,
                      const std::vector<int>& n_list,
                      const std::string& out_path) {
  const normcrit::RunSpec spec = load_or_default(config_path);
  const normcrit::GridPtr g = spec.make_grid();
  const normcrit::BubbleOrderReport rep = normcrit::bubble_norm_orders(g, n_list);
  json j = normcrit::to_json(rep);
  j["run_spec"] = normcrit::spec_to_json(spec);
  emit(j, out_path);
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              int jobs) {
  if (config_path.empty())
    throw normcrit::ConfigError("sweep requires --config");
  const normcrit::RunSpec spec = normcrit::load_config(config_path);
  const normcrit::GridPtr g = spec.make_grid();
  (void)effective_jobs(jobs);  // warm-start chain is sequential by design
  normcrit::SweepOptions opts;
  opts.solver = spec.solver;
  opts.mp = spec.mp;
  opts.include_mp = spec.sweep_include_mp;
  opts.nu0_fraction = spec.nu0_fraction;
  opts.C_gn = spec.C_gn;
  opts.gn_trials = spec.gn_trials;
  opts.seed = spec.seed;
  std::vector<double> nus = spec.nu_list;
  if (nus.empty()) {
    const double C_gn = resolved_C_gn(spec, g);
    const normcrit::DerivedConstants c =
        normcrit::derive_constants(spec.params, C_gn, spec.nu0_fraction);
    nus = normcrit::default_nu_list(c.nu_bar0);
    opts.C_gn = C_gn;
  }
  const auto records = normcrit::sweep(spec.params, nus, g, opts);
  const std::string csv = normcrit::sweep_csv(records);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path);
    if (!out) throw normcrit::ConfigError("cannot write: " + out_path);
    out << csv;
  }
  bool all_ok = !records.empty();
  for (const auto& r : records)
    all_ok = all_ok && r.converged_min && (!opts.include_mp || r.converged_mp);
  return all_ok ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational solver for the mass-constrained critical coupled "
               "Schrodinger system"};
  app.require_subcommand(1);

  std::string config_path, out_path, fields_path, min_path, curve_prefix;
  std::vector<int> n_list = {4, 8, 16, 32};
  int jobs = 1;

  auto* c_const = app.add_subcommand("constants", "Derived geometry constants");
  c_const->add_option("--config", config_path, "JSON config file");
  c_const->add_option("--out", out_path, "output JSON (default stdout)");

  auto* c_gn = app.add_subcommand("gn-estimate",
                                  "Interaction Gagliardo-Nirenberg constant");
  c_gn->add_option("--config", config_path, "JSON config file");
  c_gn->add_option("--out", out_path, "output JSON (default stdout)");

  auto* c_min = app.add_subcommand("solve-min", "Local minimizer on the torus");
  c_min->add_option("--config", config_path, "JSON config file");
  c_min->add_option("--out", out_path, "result JSON (default stdout)");
  c_min->add_option("--fields", fields_path, "dump fields CSV (r,u,v)");

  auto* c_mp = app.add_subcommand("solve-mp", "Mountain-pass solution");
  c_mp->add_option("--config", config_path, "JSON config file");
  c_mp->add_option("--min", min_path, "solve-min result JSON")->required();
  c_mp->add_option("--out", out_path, "result JSON (default stdout)");
  c_mp->add_option("--fields", fields_path, "dump fields CSV (r,u,v)");

  auto* c_lb = app.add_subcommand("level-bound", "Bubble test-function level bound");
  c_lb->add_option("--min", min_path, "solve-min result JSON")->required();
  c_lb->add_option("--n", n_list, "truncation orders")->delimiter(',');
  c_lb->add_option("--out", out_path, "output JSON (default stdout)");
  c_lb->add_option("--curves", curve_prefix, "write H_n curves as <prefix><n>.csv");

  auto* c_bub = app.add_subcommand("bubble-orders",
                                   "Truncated-bubble norm expansion orders");
  c_bub->add_option("--config", config_path, "JSON config file");
  c_bub->add_option("--n", n_list, "truncation orders")->delimiter(',');
  c_bub->add_option("--out", out_path, "output JSON (default stdout)");

  auto* c_sweep = app.add_subcommand("sweep", "nu-ladder sweep to CSV");
  c_sweep->add_option("--config", config_path, "JSON config file")->required();
  c_sweep->add_option("--out", out_path, "output CSV (default stdout)");
  c_sweep->add_option("--jobs", jobs, "parallelism bound (NORMCRIT_JOBS overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_const) return cmd_constants(config_path, out_path);
    if (*c_gn) return cmd_gn_estimate(config_path, out_path);
    if (*c_min) return cmd_solve_min(config_path, out_path, fields_path);
    if (*c_mp) return cmd_solve_mp(config_path, min_path, out_path, fields_path);
    if (*c_lb) return cmd_level_bound(min_path, n_list, out_path, curve_prefix);
    if (*c_bub) return cmd_bubble_orders(config_path, n_list, out_path);
    if (*c_sweep) return cmd_sweep(config_path, out_path, jobs);
  } catch (const normcrit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const normcrit::ParamError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "json error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
