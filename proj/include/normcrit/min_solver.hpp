#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "normcrit/functional.hpp"
#include "normcrit/grid.hpp"
#include "normcrit/params.hpp"

namespace normcrit {

struct SolverOptions {
  double tol_grad = 1e-6;
  double tol_mass = 1e-10;
  double tol_poho = 1e-4;
  int max_iter = 20000;
  int rearrange_every = 25;   // 0 disables rearrangement steps
  double init_width = 1.0;    // width of the Gaussian initial profiles
  double shift_floor = 1e-3;  // preconditioner shift lower bound
  ScaleWindow fiber_window{};
};

struct SolveResult {
  StatePair state;
  double level = 0.0;
  MultiplierPair multipliers;
  double grad_residual = 0.0;
  double poho_residual = 0.0;
  double kinetic = 0.0;
  int iterations = 0;
  bool converged = false;
  DerivedConstants constants;
  std::map<std::string, double> diagnostics;
};

/// Strict ball membership: (|grad u|^2 + |grad v|^2)^{1/2} < rho0.
inline bool in_ball(const StatePair& s, const DerivedConstants& c) {
  return std::sqrt(grad_sq(s.u) + grad_sq(s.v)) < c.rho0;
}

namespace detail {

/// Rescales each component to its prescribed mass.
inline void mass_project(StatePair& s) {
  const double mu = std::sqrt(mass_sq(s.u));
  const double mv = std::sqrt(mass_sq(s.v));
  if (mu > 0.0)
    for (auto& x : s.u.values) x *= s.params.a / mu;
  if (mv > 0.0)
    for (auto& x : s.v.values) x *= s.params.b / mv;
}

/// Removes the components along u and v (tangent space of the torus).
inline void tangent_project(StatePair& g, const StatePair& s) {
  const auto& w = s.grid()->weights();
  double gu_u = 0.0, gv_v = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    gu_u += w[i] * g.u[i] * s.u[i];
    gv_v += w[i] * g.v[i] * s.v[i];
    uu += w[i] * s.u[i] * s.u[i];
    vv += w[i] * s.v[i] * s.v[i];
  }
  if (uu > 0.0)
    for (std::size_t i = 0; i < s.u.size(); ++i) g.u[i] -= gu_u / uu * s.u[i];
  if (vv > 0.0)
    for (std::size_t i = 0; i < s.v.size(); ++i) g.v[i] -= gv_v / vv * s.v[i];
}

/// Solves (shift*I - L) p = g where L is the radial Laplacian stencil;
/// Thomas algorithm on the tridiagonal system.
inline RadialField precondition(const RadialField& g, double shift) {
  const auto& r = g.grid->nodes();
  const std::size_t M = g.size();
  const int N = g.grid->dim();
  std::vector<double> sub(M, 0.0), diag(M, 0.0), sup(M, 0.0);
  diag[0] = shift + 2.0 * N / (r[1] * r[1]);
  sup[0] = -2.0 * N / (r[1] * r[1]);
  for (std::size_t i = 1; i + 1 < M; ++i) {
    const double hl = r[i] - r[i - 1], hr = r[i + 1] - r[i];
    const double lm = 2.0 / (hl * (hl + hr)) - (N - 1) / r[i] * hr / (hl * (hl + hr));
    const double lc = -2.0 / (hl * hr) + (N - 1) / r[i] * (hr - hl) / (hl * hr);
    const double lp = 2.0 / (hr * (hl + hr)) + (N - 1) / r[i] * hl / (hr * (hl + hr));
    sub[i] = -lm;
    diag[i] = shift - lc;
    sup[i] = -lp;
  }
  {
    const std::size_t i = M - 1;
    const double h = r[i] - r[i - 1];
    const double lm = 1.0 / (h * h) + (N - 1) / r[i] * (-1.0 / (2.0 * h));
    const double lc = -2.0 / (h * h);
    sub[i] = -lm;
    diag[i] = shift - lc;
  }
  std::vector<double> c(M, 0.0), d(M, 0.0);
  c[0] = sup[0] / diag[0];
  d[0] = g[0] / diag[0];
  for (std::size_t i = 1; i < M; ++i) {
    const double m = diag[i] - sub[i] * c[i - 1];
    c[i] = sup[i] / m;
    d[i] = (g[i] - sub[i] * d[i - 1]) / m;
  }
  RadialField p(g.grid);
  p[M - 1] = d[M - 1];
  for (std::size_t i = M - 1; i-- > 0;) p[i] = d[i] - c[i] * p[i + 1];
  return p;
}

inline double tangent_norm(const StatePair& g) {
  return std::sqrt(pair_inner(g, g));
}

struct DescentProblem {
  std::function<double(const StatePair&)> energy;
  std::function<StatePair(const StatePair&)> gradient;
  // optional hard constraint on the trial state (e.g. kinetic ball)
  std::function<bool(const StatePair&)> admissible = nullptr;
};

struct DescentStats {
  int iterations = 0;
  double grad_residual = 0.0;
  bool converged = false;
  int rearrangements = 0;
};

/// Banded Gaussian elimination with partial pivoting; band[kb + i - j][j]
/// holds A_ij on entry (half-bandwidth kb).  Solves in place for every
/// right-hand side.  Pivoting matters here: the quadrature weights entering
/// the KKT matrix span many orders of magnitude across a graded grid, and
/// elimination without row exchanges loses the small-residual digits.
inline void banded_solve(std::vector<std::vector<double>>& band, int kb,
                         std::vector<std::vector<double>>& rhs) {
  const std::size_t n = band[kb].size();
  // working layout with room for fill-in: a(i,j) at ab[j - i + kb][i],
  // valid for -kb <= j - i <= 2*kb
  std::vector<std::vector<double>> ab(3 * kb + 1,
                                      std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t ilo = j >= static_cast<std::size_t>(kb) ? j - kb : 0;
    const std::size_t ihi = std::min(n - 1, j + kb);
    for (std::size_t i = ilo; i <= ihi; ++i)
      ab[j - i + kb][i] = band[kb + i - j][j];
  }
  const auto at = [&](std::size_t i, std::size_t j) -> double& {
    return ab[j - i + kb][i];
  };
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(at(j, j)));
  const double floor = 1e-300 * std::max(scale, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t imax = std::min(n - 1, k + kb);
    const std::size_t jmax = std::min(n - 1, k + 2 * kb);
    std::size_t piv = k;
    for (std::size_t i = k + 1; i <= imax; ++i)
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = k; j <= jmax; ++j) {
        if (j + static_cast<std::size_t>(kb) < piv) continue;  // below band
        std::swap(at(k, j), at(piv, j));
      }
      for (auto& r : rhs) std::swap(r[k], r[piv]);
    }
    double pv = at(k, k);
    if (std::abs(pv) < floor) pv = (pv >= 0.0 ? floor : -floor);
    at(k, k) = pv;
    for (std::size_t i = k + 1; i <= imax; ++i) {
      const double l = at(i, k) / pv;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j <= jmax; ++j)
        at(i, j) -= l * at(k, j);
      for (auto& r : rhs) r[i] -= l * r[k];
    }
  }
  for (auto& r : rhs) {
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t jmax = std::min(n - 1, k + 2 * kb);
      double acc = r[k];
      for (std::size_t j = k + 1; j <= jmax; ++j) acc -= at(k, j) * r[j];
      r[k] = acc / at(k, k);
    }
  }
}

/// Scatters the stiffness matrix K = D^T W D (the weighted form of
/// kinetic_gradient) into the interleaved (u_0,v_0,u_1,v_1,...) band for
/// both components; K is pentadiagonal in the node index.
inline void scatter_stiffness(const GridPtr& grid,
                              std::vector<std::vector<double>>& band, int kb) {
  const auto& r = grid->nodes();
  const auto& w = grid->weights();
  const std::size_t M = r.size();
  double c[3];
  std::size_t j[3];
  const auto add_row = [&](std::size_t m, double wi) {
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = 0; q < m; ++q) {
        const double val = wi * c[p] * c[q];
        band[kb + 2 * (int)j[p] - 2 * (int)j[q]][2 * j[q]] += val;
        band[kb + 2 * (int)j[p] - 2 * (int)j[q]][2 * j[q] + 1] += val;
      }
  };
  {
    const double h = r[1] - r[0];
    c[0] = -1.0 / h; c[1] = 1.0 / h;
    j[0] = 0; j[1] = 1;
    add_row(2, w[0]);
  }
  for (std::size_t i = 1; i + 1 < M; ++i) {
    const double hl = r[i] - r[i - 1], hr = r[i + 1] - r[i];
    const double den = hl * hr * (hl + hr);
    c[0] = -hr * hr / den;
    c[1] = (hr * hr - hl * hl) / den;
    c[2] = hl * hl / den;
    j[0] = i - 1; j[1] = i; j[2] = i + 1;
    add_row(3, w[i]);
  }
  {
    const double h = r[M - 1] - r[M - 2];
    c[0] = -1.0 / h; c[1] = 1.0 / h;
    j[0] = M - 2; j[1] = M - 1;
    add_row(2, w[M - 1]);
  }
}

/// Newton refinement of the full constrained critical-point system
///   grad I(u,v) + lambda1 u = 0, grad I(u,v) + lambda2 v = 0,
///   ||u||_2 = a, ||v||_2 = b,
/// with the multipliers as bordered unknowns (2x2 Schur complement on the
/// banded KKT factorization).  Converges regardless of the Morse index, so
/// it is the endgame for saddle candidates once the merit descent has
/// entered the basin.  Returns true when the tangent-projected gradient
/// norm drops below tol_grad.  The Hessian of the |u|^alpha|v|^beta term is
/// unbounded where a component vanishes (alpha, beta < 2); those factors
/// are clamped, which only freezes energetically irrelevant tail nodes.
inline bool newton_refine_impl(StatePair& s, const SolverOptions& opts,
                               int max_newton, bool deflate) {
  const ProblemParams& p = s.params;
  const GridPtr grid = s.grid();
  const auto& w = grid->weights();
  const std::size_t M = s.u.size();
  const std::size_t n = 2 * M;
  const int kb = 4;
  const double ts = critical_exponent(p.N);

  mass_project(s);
  MultiplierPair la = multipliers_residual(s, 1e-6);

  const auto residual = [&](const StatePair& x, const MultiplierPair& l,
                            std::vector<double>& F1, std::vector<double>& F2,
                            double& c1, double& c2) {
    const StatePair g = gradient(x);
    double merit = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      F1[i] = g.u[i] + l.lambda1 * x.u[i];
      F2[i] = g.v[i] + l.lambda2 * x.v[i];
      merit += w[i] * (F1[i] * F1[i] + F2[i] * F2[i]);
    }
    c1 = 0.5 * (mass_sq(x.u) - p.a * p.a);
    c2 = 0.5 * (mass_sq(x.v) - p.b * p.b);
    return merit + c1 * c1 + c2 * c2;
  };

  std::vector<double> F1(M), F2(M);
  double c1 = 0.0, c2 = 0.0;
  double merit = residual(s, la, F1, F2, c1, c2);

  for (int it = 0; it < max_newton; ++it) {
    {  // convergence is measured exactly like everywhere else
      StatePair g = gradient(s);
      tangent_project(g, s);
      if (tangent_norm(g) <= opts.tol_grad &&
          std::abs(c1) <= opts.tol_mass && std::abs(c2) <= opts.tol_mass) {
        mass_project(s);
        return true;
      }
    }
    std::vector<std::vector<double>> band(2 * kb + 1,
                                          std::vector<double>(n, 0.0));
    scatter_stiffness(grid, band, kb);
    const double fl_u = 1e-8 * (1.0 + sup_norm(s.u));
    const double fl_v = 1e-8 * (1.0 + sup_norm(s.v));
    for (std::size_t i = 0; i < M; ++i) {
      const double au = std::abs(s.u[i]), av = std::abs(s.v[i]);
      const double duu =
          la.lambda1 - p.mu1 * (ts - 1.0) * std::pow(au, ts - 2.0) -
          p.nu * p.alpha * (p.alpha - 1.0) *
              std::pow(std::max(au, fl_u), p.alpha - 2.0) * std::pow(av, p.beta);
      const double dvv =
          la.lambda2 - p.mu2 * (ts - 1.0) * std::pow(av, ts - 2.0) -
          p.nu * p.beta * (p.beta - 1.0) * std::pow(au, p.alpha) *
              std::pow(std::max(av, fl_v), p.beta - 2.0);
      const double duv = -p.nu * p.alpha * p.beta *
                         signed_pow(s.u[i], p.alpha - 1.0) *
                         signed_pow(s.v[i], p.beta - 1.0);
      band[kb][2 * i] += w[i] * duu;
      band[kb][2 * i + 1] += w[i] * dvv;
      band[kb + 1][2 * i] += w[i] * duv;
      band[kb - 1][2 * i + 1] += w[i] * duv;
    }
    // optional extra borders: the per-component dilation tangents
    // (N/2) f + r f'.  These become almost-neutral directions of the
    // constrained Hessian when the coupling is weak; constraining the banded
    // step to their complement keeps the Newton system well-conditioned, and
    // the leftover soft components are handled by exact one-dimensional
    // searches afterwards.
    std::vector<double> qu(n, 0.0), qv(n, 0.0);
    if (deflate) {
      const auto du = derivative_samples(s.u);
      const auto dv = derivative_samples(s.v);
      const auto& rr = grid->nodes();
      for (std::size_t i = 0; i < M; ++i) {
        qu[2 * i] = w[i] * (0.5 * p.N * s.u[i] + rr[i] * du[i]);
        qv[2 * i + 1] = w[i] * (0.5 * p.N * s.v[i] + rr[i] * dv[i]);
      }
    }
    std::vector<double> cu(n, 0.0), cv(n, 0.0), g0(n, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
      cu[2 * i] = w[i] * s.u[i];
      cv[2 * i + 1] = w[i] * s.v[i];
      g0[2 * i] = -w[i] * F1[i];
      g0[2 * i + 1] = -w[i] * F2[i];
    }
    const auto dot = [&](const std::vector<double>& a,
                         const std::vector<double>& b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
      return acc;
    };
    for (auto* qq : {&qu, &qv}) {
      const double qn = std::sqrt(dot(*qq, *qq));
      if (qn > 0.0)
        for (auto& x : *qq) x /= qn;
    }
    const auto hmul = [&](const std::vector<double>& x) {
      std::vector<double> y(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t jlo = i >= static_cast<std::size_t>(kb) ? i - kb : 0;
        const std::size_t jhi = std::min(n - 1, i + kb);
        double acc = 0.0;
        for (std::size_t j = jlo; j <= jhi; ++j)
          acc += band[kb + i - j][j] * x[j];
        y[i] = acc;
      }
      return y;
    };
    // one bordered solve [[H, C], [C^T, 0]] [z; l] = [g; h] by block
    // elimination with the nb x nb Schur complement (banded_solve keeps the
    // band intact, so the factorization can be repeated per right side)
    const int nb = deflate ? 4 : 2;
    const std::vector<double>* cols[4] = {&cu, &cv, &qu, &qv};
    const auto solve_kkt = [&](const std::vector<double>& gv,
                               const double h[4], std::vector<double>& z,
                               double l[4]) {
      std::vector<std::vector<double>> rhs = {gv};
      for (int a = 0; a < nb; ++a) rhs.push_back(*cols[a]);
      banded_solve(band, kb, rhs);
      double sm[4][4], rv[4];
      for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) sm[a][b] = dot(*cols[a], rhs[b + 1]);
        rv[a] = dot(*cols[a], rhs[0]) - h[a];
      }
      // small dense solve with partial pivoting
      int perm[4];
      for (int k = 0; k < nb; ++k) perm[k] = k;
      for (int k = 0; k < nb; ++k) {
        int pv = k;
        for (int i = k + 1; i < nb; ++i)
          if (std::abs(sm[perm[i]][k]) > std::abs(sm[perm[pv]][k])) pv = i;
        std::swap(perm[k], perm[pv]);
        const double d = sm[perm[k]][k];
        if (d == 0.0) return false;
        for (int i = k + 1; i < nb; ++i) {
          const double f = sm[perm[i]][k] / d;
          for (int j = k + 1; j < nb; ++j) sm[perm[i]][j] -= f * sm[perm[k]][j];
          rv[perm[i]] -= f * rv[perm[k]];
        }
      }
      for (int k = nb; k-- > 0;) {
        double acc = rv[perm[k]];
        for (int j = k + 1; j < nb; ++j) acc -= sm[perm[k]][j] * l[j];
        l[k] = acc / sm[perm[k]][k];
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = rhs[0][i];
        for (int a = 0; a < nb; ++a) acc -= l[a] * rhs[a + 1][i];
        z[i] = acc;
      }
      return true;
    };
    // H is nearly singular near constrained critical points (the multiplier
    // sits next to an eigenvalue), which makes plain block elimination lose
    // most of the step accuracy to cancellation even though the bordered
    // matrix is fine; iterative refinement on the full system restores it
    std::vector<double> dz(n, 0.0), ez(n, 0.0);
    double dl[4] = {0.0, 0.0, 0.0, 0.0}, el[4] = {0.0, 0.0, 0.0, 0.0};
    const double h0[4] = {-c1, -c2, 0.0, 0.0};
    if (!solve_kkt(g0, h0, dz, dl)) return false;
    for (int ref = 0; ref < 2; ++ref) {
      std::vector<double> rg = hmul(dz);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = g0[i] - rg[i];
        for (int a = 0; a < nb; ++a) acc -= dl[a] * (*cols[a])[i];
        rg[i] = acc;
      }
      double rh[4] = {-c1 - dot(cu, dz), -c2 - dot(cv, dz), 0.0, 0.0};
      if (deflate) {
        rh[2] = -dot(qu, dz);
        rh[3] = -dot(qv, dz);
      }
      if (!solve_kkt(rg, rh, ez, el)) break;
      for (std::size_t i = 0; i < n; ++i) dz[i] += ez[i];
      for (int a = 0; a < nb; ++a) dl[a] += el[a];
    }
    const double dl1 = dl[0], dl2 = dl[1];

    std::vector<double> F1c(M), F2c(M);
    double theta = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 24; ++bt) {
      StatePair cand = s;
      for (std::size_t i = 0; i < M; ++i) {
        cand.u[i] += theta * dz[2 * i];
        cand.v[i] += theta * dz[2 * i + 1];
      }
      MultiplierPair lc{la.lambda1 + theta * dl1, la.lambda2 + theta * dl2};
      double c1c = 0.0, c2c = 0.0;
      const double mc = residual(cand, lc, F1c, F2c, c1c, c2c);
      if (mc < merit * (1.0 - 1e-4 * theta)) {
        s = std::move(cand);
        la = lc;
        F1.swap(F1c);
        F2.swap(F2c);
        c1 = c1c;
        c2 = c2c;
        merit = mc;
        accepted = true;
        break;
      }
      theta *= 0.5;
    }
    // scalar searches along the soft dilation directions the bordered step
    // was constrained to avoid: they are the directions where the quadratic
    // model is unreliable, and being one-dimensional they can be minimized
    // exactly on the merit itself (they also rescue a failed banded step)
    bool soft_gain = false;
    for (int comp = 0; deflate && comp < 2; ++comp) {
      const RadialField& f = comp == 0 ? s.u : s.v;
      const auto df = derivative_samples(f);
      const auto& rr = grid->nodes();
      std::vector<double> zf(M);
      double zn2 = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        zf[i] = 0.5 * p.N * f[i] + rr[i] * df[i];
        zn2 += w[i] * zf[i] * zf[i];
      }
      const double zn = std::sqrt(zn2);
      if (!(zn > 0.0)) continue;
      double sc1 = 0.0, sc2 = 0.0;
      const auto make_cand = [&](double tau) {
        StatePair cand = s;
        RadialField& g = comp == 0 ? cand.u : cand.v;
        for (std::size_t i = 0; i < M; ++i) g[i] += tau / zn * zf[i];
        return cand;
      };
      const auto merit_at = [&](double tau) {
        const StatePair cand = make_cand(tau);
        return residual(cand, la, F1c, F2c, sc1, sc2);
      };
      double best_tau = 0.0, best_m = merit;
      const double smax = 0.1 * (comp == 0 ? p.a : p.b);
      for (int j = 0; j < 30; ++j) {
        const double t = smax * std::pow(0.5, j);
        for (const double tau : {t, -t}) {
          const double m = merit_at(tau);
          if (m < best_m) { best_m = m; best_tau = tau; }
        }
      }
      if (best_tau == 0.0) continue;
      double lo = 0.5 * best_tau, hi = 2.0 * best_tau;
      for (int gs = 0; gs < 20; ++gs) {
        const double t1 = lo + (hi - lo) / 3.0;
        const double t2 = hi - (hi - lo) / 3.0;
        if (merit_at(t1) < merit_at(t2)) hi = t2; else lo = t1;
      }
      const double tau = 0.5 * (lo + hi);
      StatePair cand = make_cand(tau);
      const double mc = residual(cand, la, F1c, F2c, sc1, sc2);
      if (mc < merit) {
        s = std::move(cand);
        F1.swap(F1c);
        F2.swap(F2c);
        c1 = sc1;
        c2 = sc2;
        if (mc < merit * (1.0 - 1e-4)) soft_gain = true;
        merit = mc;
      }
    }
    if (!accepted && !soft_gain) return false;
  }
  {
    StatePair g = gradient(s);
    tangent_project(g, s);
    if (tangent_norm(g) <= opts.tol_grad &&
        std::abs(c1) <= opts.tol_mass && std::abs(c2) <= opts.tol_mass) {
      mass_project(s);
      return true;
    }
  }
  return false;
}

/// Bordered Newton polish of the constrained Euler-Lagrange system.  A plain
/// two-border (mass constraints only) pass handles well-conditioned states;
/// if its line search stalls, the pass is repeated with the per-component
/// dilation tangents deflated, which rescues the weak-coupling regime where
/// those directions are almost neutral.
inline bool newton_refine(StatePair& s, const SolverOptions& opts,
                          int max_newton = 50) {
  if (newton_refine_impl(s, opts, max_newton, false)) return true;
  return newton_refine_impl(s, opts, max_newton, true);
}

/// Preconditioned projected descent on the torus with adaptive steps and
/// optional periodic rearrangement.  Energy is nonincreasing across
/// accepted iterations.
inline DescentStats projected_descent(StatePair& s, const DescentProblem& prob,
                                      const SolverOptions& opts,
                                      double shift_hint = 1.0) {
  mass_project(s);
  double E = prob.energy(s);
  double eta = 1.0;
  DescentStats stats;
  for (int it = 0; it < opts.max_iter; ++it) {
    StatePair g = prob.gradient(s);
    tangent_project(g, s);
    stats.grad_residual = tangent_norm(g);
    stats.iterations = it;
    if (stats.grad_residual <= opts.tol_grad) {
      stats.converged = true;
      break;
    }
    const double shift = std::max(opts.shift_floor, shift_hint);
    StatePair d(precondition(g.u, shift), precondition(g.v, shift), s.params);
    tangent_project(d, s);
    const double slope = pair_inner(g, d);  // positive: d is a descent dir
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      StatePair cand = s;
      for (std::size_t i = 0; i < s.u.size(); ++i) {
        cand.u[i] -= eta * d.u[i];
        cand.v[i] -= eta * d.v[i];
      }
      mass_project(cand);
      if (prob.admissible && !prob.admissible(cand)) {
        eta *= 0.5;
        continue;
      }
      const double Ec = prob.energy(cand);
      if (Ec <= E - 1e-4 * eta * slope) {
        s = std::move(cand);
        E = Ec;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      // step collapsed; gradient tolerance not reachable from here
      break;
    }
    eta = std::min(eta * 1.5, 1e6);
    if (opts.rearrange_every > 0 && (it + 1) % opts.rearrange_every == 0) {
      StatePair cand(schwartz_rearrange(s.u), schwartz_rearrange(s.v), s.params);
      mass_project(cand);
      if (!prob.admissible || prob.admissible(cand)) {
        const double Ec = prob.energy(cand);
        if (Ec <= E + 1e-6 * std::abs(E)) {
          s = std::move(cand);
          E = Ec;
          ++stats.rearrangements;
        }
      }
    }
  }
  return stats;
}

/// Gaussian pair scaled to the masses; nonzero interaction by construction.
inline StatePair gaussian_init(const GridPtr& g, const ProblemParams& p,
                               double width) {
  RadialField u = sample(g, [&](double r) { return std::exp(-(r * r) / (width * width)); });
  RadialField v = u;
  StatePair s(std::move(u), std::move(v), p);
  mass_project(s);
  return s;
}

inline double tail_mass_fraction(const RadialField& f) {
  const double half = 0.5 * f.grid->radius();
  const auto& w = f.grid->weights();
  double tail = 0.0, total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double m = w[i] * f[i] * f[i];
    total += m;
    if (f.grid->node(i) > half) tail += m;
  }
  return total > 0.0 ? tail / total : 0.0;
}

inline void fill_result_diagnostics(SolveResult& res) {
  res.diagnostics["tail_mass_u"] = tail_mass_fraction(res.state.u);
  res.diagnostics["tail_mass_v"] = tail_mass_fraction(res.state.v);
  res.diagnostics["supnorm_u"] = sup_norm(res.state.u);
  res.diagnostics["supnorm_v"] = sup_norm(res.state.v);
}

}  // namespace detail

/// Local minimizer of I_nu on T(a,b) inside the kinetic ball V_rho0.
inline SolveResult solve_local_min(const ProblemParams& raw, const GridPtr& grid,
                                   const DerivedConstants& c,
                                   const SolverOptions& opts = {},
                                   const StatePair* warm_start = nullptr) {
  const ProblemParams p = validate(raw);
  SolveResult res;
  res.constants = c;

  StatePair s = warm_start ? *warm_start
                           : detail::gaussian_init(grid, p, opts.init_width);
  s.params = p;
  detail::mass_project(s);
  // bring the iterate strictly inside the ball before descending
  double kin = grad_sq(s.u) + grad_sq(s.v);
  if (kin >= c.rho0 * c.rho0) {
    const double t = 0.5 * c.rho0 / std::sqrt(kin);
    s = StatePair(fiber_scale(s.u, t, opts.fiber_window),
                  fiber_scale(s.v, t, opts.fiber_window), p);
    detail::mass_project(s);
  }

  if (p.nu == 0.0) {
    // decoupled critical problem: the infimum 0 over the ball is not attained
    res.state = s;
    res.level = energy(s);
    res.kinetic = grad_sq(s.u) + grad_sq(s.v);
    res.converged = false;
    res.diagnostics["geometry_violation"] = 1.0;
    detail::fill_result_diagnostics(res);
    return res;
  }

  detail::DescentProblem prob;
  prob.energy = [](const StatePair& x) { return energy(x); };
  prob.gradient = [](const StatePair& x) { return gradient(x); };
  const double rho0_sq = c.rho0 * c.rho0;
  prob.admissible = [rho0_sq](const StatePair& x) {
    return grad_sq(x.u) + grad_sq(x.v) < rho0_sq;
  };

  auto stats = detail::projected_descent(s, prob, opts, 1.0);
  if (!stats.converged) {
    // descent can stall just above tight tolerances on fine grids; finish
    // with the bordered Newton endgame, guarded by the ball constraint
    StatePair trial = s;
    if (detail::newton_refine(trial, opts) && prob.admissible(trial) &&
        energy(trial) < 0.0) {
      s = std::move(trial);
      StatePair g = gradient(s);
      detail::tangent_project(g, s);
      stats.grad_residual = detail::tangent_norm(g);
      stats.converged = stats.grad_residual <= opts.tol_grad;
    }
  }

  res.state = s;
  res.level = energy(s);
  res.kinetic = grad_sq(s.u) + grad_sq(s.v);
  res.grad_residual = stats.grad_residual;
  res.iterations = stats.iterations;
  res.multipliers = multipliers_residual(s, 1e-6);
  const double poho = pohozaev(s);
  res.poho_residual = std::abs(poho) / std::max(1.0, res.kinetic);
  res.converged = stats.converged && res.level < 0.0 && res.kinetic < rho0_sq;
  if (!(res.level < 0.0)) res.diagnostics["geometry_violation"] = 1.0;
  res.diagnostics["rearrangements"] = stats.rearrangements;
  detail::fill_result_diagnostics(res);
  return res;
}

/// Normalized ground state of the limit system (interaction term only,
/// coefficient 1): global minimization of J on T(a,b), mass-subcritical.
inline SolveResult solve_limit_ground_state(int N, double a, double b,
                                            double alpha, double beta,
                                            const GridPtr& grid,
                                            const SolverOptions& opts = {}) {
  ProblemParams p;
  p.N = N;
  p.a = a;
  p.b = b;
  p.alpha = alpha;
  p.beta = beta;
  p.mu1 = 1.0;  // unused by J, kept for record
  p.mu2 = 1.0;
  p.nu = 1.0;
  validate(p);

  const auto J = [](const StatePair& x) {
    return 0.5 * (grad_sq(x.u) + grad_sq(x.v)) -
           interaction(x.u, x.v, x.params.alpha, x.params.beta);
  };
  const auto dJ = [](const StatePair& x) {
    const ProblemParams& q = x.params;
    RadialField gu = kinetic_gradient(x.u);
    RadialField gv = kinetic_gradient(x.v);
    for (std::size_t i = 0; i < x.u.size(); ++i) {
      const double au = std::abs(x.u[i]), av = std::abs(x.v[i]);
      if (av != 0.0)
        gu[i] -= q.alpha * signed_pow(x.u[i], q.alpha - 1.0) * std::pow(av, q.beta);
      if (au != 0.0)
        gv[i] -= q.beta * std::pow(au, q.alpha) * signed_pow(x.v[i], q.beta - 1.0);
    }
    return StatePair(std::move(gu), std::move(gv), q);
  };

  StatePair s = detail::gaussian_init(grid, p, opts.init_width);
  detail::DescentProblem prob;
  prob.energy = J;
  prob.gradient = dJ;
  const auto stats = detail::projected_descent(s, prob, opts, 1.0);

  SolveResult res;
  res.state = s;
  res.level = J(s);
  res.kinetic = grad_sq(s.u) + grad_sq(s.v);
  res.grad_residual = stats.grad_residual;
  res.iterations = stats.iterations;
  res.converged = stats.converged;
  {
    // multipliers of the limit system from constrained stationarity
    const StatePair g = dJ(s);
    const auto& w = s.grid()->weights();
    double gu_u = 0.0, gv_v = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      gu_u += w[i] * g.u[i] * s.u[i];
      gv_v += w[i] * g.v[i] * s.v[i];
    }
    res.multipliers = {-gu_u / (a * a), -gv_v / (b * b)};
  }
  res.diagnostics["rearrangements"] = stats.rearrangements;
  detail::fill_result_diagnostics(res);
  return res;
}

}  // namespace normcrit
