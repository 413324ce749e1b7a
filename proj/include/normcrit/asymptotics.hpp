#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "normcrit/bubbles.hpp"
#include "normcrit/min_solver.hpp"
#include "normcrit/mp_solver.hpp"

namespace normcrit {

/// Dilation scale matching the sup norm of f to the blow-up profile
/// mu^{-(N-2)/4} U (the positive solution of -Delta w = mu w^{2*-1});
/// a fixed point on exact bubbles.
inline double extract_epsilon(const RadialField& f, double mu) {
  const int N = f.grid->dim();
  const double sup = sup_norm(f);
  if (!(sup > 0.0)) throw ParamError("extract_epsilon: vanishing sup norm");
  const double target = std::pow(mu, (2.0 - N) / 4.0) * bubble_amplitude(N);
  return std::pow(target / sup, 2.0 / (N - 2.0));
}

/// Relative D^{1,2} distance of the sup-normalized dilation of f to the
/// blow-up profile mu^{-(N-2)/4} U.
inline double bubble_distance(const RadialField& f, double mu,
                              const ScaleWindow& win = {1e-9, 1e9}) {
  const int N = f.grid->dim();
  const double eps = extract_epsilon(f, mu);
  const RadialField g = dilate(f, eps, win);
  const double amp = std::pow(mu, (2.0 - N) / 4.0);
  RadialField diff(f.grid);
  RadialField ref = aubin_talenti(f.grid);
  for (std::size_t i = 0; i < diff.size(); ++i) {
    ref[i] *= amp;
    diff[i] = g[i] - ref[i];
  }
  return std::sqrt(grad_sq(diff) / grad_sq(ref));
}

/// Argmin over t of the E-norm distance || t*(u,v) - gs ||_E, found by
/// golden section on log t; returns (t_nu, distance).
inline std::pair<double, double> ground_state_distance(
    const StatePair& min_state, const StatePair& gs,
    const ScaleWindow& win = {1e-9, 1e9}) {
  if (mass_sq(gs.u) == 0.0 && mass_sq(gs.v) == 0.0)
    throw ParamError("ground_state_distance: trivial ground state");
  const auto dist_at = [&](double t) {
    StatePair scaled(fiber_scale(min_state.u, t, win),
                     fiber_scale(min_state.v, t, win), min_state.params);
    return detail::e_distance(scaled, gs);
  };
  // bracket by coarse scan, then golden section
  double best_t = 1.0, best_d = dist_at(1.0);
  for (int i = -40; i <= 40; ++i) {
    const double t = std::pow(10.0, i / 10.0);
    const double d = dist_at(t);
    if (d < best_d) { best_d = d; best_t = t; }
  }
  double a = std::log(best_t) - 0.3, b = std::log(best_t) + 0.3;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = dist_at(std::exp(x1)), f2 = dist_at(std::exp(x2));
  for (int it = 0; it < 50; ++it) {
    if (f1 > f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a);
      f2 = dist_at(std::exp(x2));
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a);
      f1 = dist_at(std::exp(x1));
    }
  }
  const double t = std::exp(0.5 * (a + b));
  return {t, dist_at(t)};
}

/// One row of a nu-sweep.
struct SweepRecord {
  double nu = 0.0;
  double m_level = 0.0;
  double mp_level = 0.0;
  double kinetic_min = 0.0;
  double kinetic_mp = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double lambda1_mp = 0.0, lambda2_mp = 0.0;
  double supnorm_u = 0.0, supnorm_v = 0.0;
  double t_nu = 0.0;
  double gs_distance = 0.0;
  double eps_nu = 0.0;
  double bubble_distance = 0.0;
  bool converged_min = false;
  bool converged_mp = false;
  double hysteresis = 0.0;  // cold-vs-warm level gap where a control ran
};

struct SweepOptions {
  SolverOptions solver;
  MountainPassOptions mp;
  bool include_mp = true;
  bool cold_start_controls = true;
  double nu0_fraction = 0.5;
  double C_gn = 0.0;  // 0 -> estimate from the grid
  int gn_trials = 12;
  std::uint64_t seed = 20240801;
};

/// Default nu ladder nu_bar0 * 2^{-k}, k = 3..8.
inline std::vector<double> default_nu_list(double nu_bar0) {
  std::vector<double> nus;
  for (int k = 3; k <= 8; ++k) nus.push_back(nu_bar0 * std::pow(2.0, -k));
  return nus;
}

/// Runs solve_local_min (and optionally solve_mountain_pass) along a
/// decreasing nu ladder with warm starts, recording the scaling-law
/// quantities per row.
inline std::vector<SweepRecord> sweep(const ProblemParams& base,
                                      const std::vector<double>& nu_list,
                                      const GridPtr& grid,
                                      const SweepOptions& opts = {}) {
  validate(base);
  const double C_gn = opts.C_gn > 0.0
                          ? opts.C_gn
                          : gn_estimate(grid, base.alpha, base.beta,
                                        opts.gn_trials, opts.seed);
  // the limit ground state is nu-independent; solve it once
  SolverOptions gs_opts = opts.solver;
  const SolveResult gs = solve_limit_ground_state(
      base.N, base.a, base.b, base.alpha, base.beta, grid, gs_opts);

  std::vector<SweepRecord> records;
  std::optional<StatePair> warm_min, warm_mp;
  const bool second_blows_up = base.mu2 >= base.mu1;
  for (std::size_t idx = 0; idx < nu_list.size(); ++idx) {
    const double nu = nu_list[idx];
    ProblemParams p = base;
    p.nu = nu;
    const DerivedConstants c = derive_constants(p, C_gn, opts.nu0_fraction);
    SweepRecord rec;
    rec.nu = nu;
    SolveResult mn = solve_local_min(p, grid, c, opts.solver,
                                     warm_min ? &*warm_min : nullptr);
    if (opts.cold_start_controls && warm_min &&
        (idx == 0 || idx + 1 == nu_list.size())) {
      SolveResult cold = solve_local_min(p, grid, c, opts.solver, nullptr);
      rec.hysteresis = std::abs(cold.level - mn.level) /
                       std::max(1e-300, std::abs(mn.level));
    }
    warm_min = mn.state;
    rec.m_level = mn.level;
    rec.kinetic_min = mn.kinetic;
    rec.lambda1 = mn.multipliers.lambda1;
    rec.lambda2 = mn.multipliers.lambda2;
    rec.supnorm_u = sup_norm(mn.state.u);
    rec.supnorm_v = sup_norm(mn.state.v);
    rec.converged_min = mn.converged;
    if (mn.converged) {
      const auto [t_match, dist] = ground_state_distance(mn.state, gs.state);
      // the concentration scale vanishes like nu^{1/(2-gamma)}; it is the
      // reciprocal of the fiber parameter that maps the minimizer onto the
      // limit ground state
      rec.t_nu = 1.0 / t_match;
      rec.gs_distance = dist;
    }
    if (opts.include_mp && mn.converged) {
      SolveResult mp = solve_mountain_pass(p, mn, grid, opts.mp,
                                           warm_mp ? &*warm_mp : nullptr);
      warm_mp = mp.state;
      rec.mp_level = mp.level;
      rec.kinetic_mp = mp.kinetic;
      rec.lambda1_mp = mp.multipliers.lambda1;
      rec.lambda2_mp = mp.multipliers.lambda2;
      rec.converged_mp = mp.converged;
      const RadialField& blow = second_blows_up ? mp.state.v : mp.state.u;
      const double mu = second_blows_up ? p.mu2 : p.mu1;
      if (sup_norm(blow) > 0.0) {
        rec.eps_nu = extract_epsilon(blow, mu);
        rec.bubble_distance = normcrit::bubble_distance(blow, mu);
      }
    }
    records.push_back(rec);
  }
  return records;
}

}  // namespace normcrit
