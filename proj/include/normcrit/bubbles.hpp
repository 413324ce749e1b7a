#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "normcrit/grid.hpp"
#include "normcrit/params.hpp"

namespace normcrit {

/// A_N = [N(N-2)]^{(N-2)/4}, the amplitude of the extremal profile.
inline double bubble_amplitude(int N) {
  return std::pow(N * (N - 2.0), (N - 2.0) / 4.0);
}

/// Closed-form extremal profile U(r) = A_N (1+r^2)^{-(N-2)/2}, the unique
/// positive radial solution of -Du = u^{2*-1}.
inline RadialField aubin_talenti(const GridPtr& g) {
  const int N = g->dim();
  const double A = bubble_amplitude(N);
  return sample(g, [&](double r) {
    return A * std::pow(1.0 + r * r, -(N - 2.0) / 2.0);
  });
}

/// Truncated bubble Theta_n: rescaled bubble on [0,1), linear ramp to zero
/// on [1,2), zero beyond.
inline RadialField truncated_bubble(const GridPtr& g, int n) {
  if (n < 1) throw ParamError("truncated_bubble: n must be >= 1");
  if (g->radius() < 2.0) throw ParamError("truncated_bubble: grid must cover r=2");
  const int N = g->dim();
  const double A = bubble_amplitude(N);
  const double ramp = A * std::pow(n / (1.0 + double(n) * n), (N - 2.0) / 2.0);
  return sample(g, [&](double r) {
    if (r < 1.0)
      return A * std::pow(n / (1.0 + double(n) * n * r * r), (N - 2.0) / 2.0);
    if (r < 2.0) return ramp * (2.0 - r);
    return 0.0;
  });
}

/// xi(n) = int_0^n s^{N-1}/(1+s^2)^{N-2} ds, by the antiderivative.
inline double xi(int N, double n) {
  if (!(n >= 1.0)) throw ParamError("xi: n must be >= 1");
  if (N == 3) return n - std::atan(n);
  if (N == 4)
    return 0.5 * (std::log(1.0 + n * n) + 1.0 / (1.0 + n * n) - 1.0);
  throw ParamError("xi: N must be 3 or 4");
}

struct BubbleNorms {
  int n = 0;
  double mass_sq = 0.0;
  double grad_sq = 0.0;
  double crit_norm = 0.0;  // ||U_n||_{2*}^{2*}
  double xi_val = 0.0;
};

namespace detail {

template <class F>
double simpson_panel(const F& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

template <class F>
double adaptive_panel(const F& f, double a, double b, double whole, double tol,
                      int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson_panel(f, a, m);
  const double right = simpson_panel(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_panel(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_panel(f, m, b, right, 0.5 * tol, depth - 1);
}

/// Panelized adaptive Simpson; panels guard against missing narrow peaks.
template <class F>
double quad(const F& f, double a, double b, double tol = 1e-13) {
  constexpr int panels = 32;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double x0 = a + k * h, x1 = x0 + h;
    total += adaptive_panel(f, x0, x1, simpson_panel(f, x0, x1), tol / panels, 36);
  }
  return total;
}

}  // namespace detail

/// Norms of Theta_n from the closed form.  The bubble branch reduces under
/// s = n r to smooth integrals over [0, n]; the O(n^{-N}) expansion deficits
/// are far below grid-quadrature accuracy, so these are evaluated by
/// adaptive quadrature rather than grid weights.  The grid only gates the
/// resolvable range of n for the sampled companion field.
inline BubbleNorms bubble_norms(const GridPtr& g, int n) {
  const int N = g->dim();
  const double A = bubble_amplitude(N);
  const double wN = RadialGrid::solid_angle(N);
  const double ts = critical_exponent(N);
  const double ramp = A * std::pow(n / (1.0 + double(n) * n), (N - 2.0) / 2.0);

  BubbleNorms b;
  b.n = n;
  b.xi_val = xi(N, n);

  // bubble branch, s = n r on [0, n]
  const double nn = n;
  b.mass_sq = wN * A * A / (nn * nn) * b.xi_val;
  b.grad_sq = wN * A * A * (N - 2.0) * (N - 2.0) *
              detail::quad(
                  [N](double s) {
                    return std::pow(s, N + 1.0) / std::pow(1.0 + s * s, N);
                  },
                  0.0, nn);
  b.crit_norm = wN * std::pow(A, ts) *
                detail::quad(
                    [N](double s) {
                      return std::pow(s, N - 1.0) / std::pow(1.0 + s * s, N);
                    },
                    0.0, nn);

  // linear ramp on [1, 2]
  b.mass_sq += wN * ramp * ramp *
               detail::quad(
                   [N](double r) {
                     return (2.0 - r) * (2.0 - r) * std::pow(r, N - 1.0);
                   },
                   1.0, 2.0);
  b.grad_sq += wN * ramp * ramp *
               detail::quad([N](double r) { return std::pow(r, N - 1.0); },
                            1.0, 2.0);
  b.crit_norm += wN * std::pow(ramp, ts) *
                 detail::quad(
                     [N, ts](double r) {
                       return std::pow(2.0 - r, ts) * std::pow(r, N - 1.0);
                     },
                     1.0, 2.0);
  return b;
}

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares on (log x, log y); all inputs must be positive.
inline LogLogFit fit_exponent(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) throw ParamError("fit_exponent: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0))
      throw ParamError("fit_exponent: data must be positive");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; syy += ly * ly;
  }
  const double m = static_cast<double>(pts.size());
  const double den = m * sxx - sx * sx;
  LogLogFit fit;
  fit.slope = (m * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / m;
  const double ss_tot = syy - sy * sy / m;
  double ss_res = 0.0;
  for (auto [x, y] : pts) {
    const double e = std::log(y) - (fit.intercept + fit.slope * std::log(x));
    ss_res += e * e;
  }
  fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

struct BubbleOrderReport {
  std::vector<BubbleNorms> norms;
  LogLogFit grad_order;   // |grad_sq - S^{N/2}| ~ n^{-(N-2)}
  LogLogFit crit_order;   // |crit_norm - S^{N/2}| ~ n^{-N}
  double mass_ratio_min = 0.0;  // bounds of mass_sq / (xi(n)/n^2)
  double mass_ratio_max = 0.0;
};

/// Checks the grid resolves the 1/n core scale: at least `density` nodes
/// inside [0, 1/n].
inline bool resolves_scale(const GridPtr& g, int n, int density = 8) {
  int count = 0;
  for (std::size_t i = 0; i < g->size() && g->node(i) <= 1.0 / n; ++i) ++count;
  return count >= density;
}

inline BubbleOrderReport bubble_norm_orders(const GridPtr& g,
                                            const std::vector<int>& n_list) {
  if (n_list.size() < 3)
    throw ParamError("bubble_norm_orders: need at least 3 values of n");
  const double SN2 = std::pow(sobolev_constant(g->dim()), g->dim() / 2.0);
  BubbleOrderReport rep;
  std::vector<std::pair<double, double>> grad_pts, crit_pts;
  rep.mass_ratio_min = std::numeric_limits<double>::infinity();
  rep.mass_ratio_max = 0.0;
  for (int n : n_list) {
    if (!resolves_scale(g, n))
      throw ParamError("bubble_norm_orders: grid too coarse for n=" +
                       std::to_string(n));
    BubbleNorms b = bubble_norms(g, n);
    rep.norms.push_back(b);
    grad_pts.emplace_back(n, std::abs(b.grad_sq - SN2));
    crit_pts.emplace_back(n, std::abs(b.crit_norm - SN2));
    const double ratio = b.mass_sq / (b.xi_val / (double(n) * n));
    rep.mass_ratio_min = std::min(rep.mass_ratio_min, ratio);
    rep.mass_ratio_max = std::max(rep.mass_ratio_max, ratio);
  }
  rep.grad_order = fit_exponent(grad_pts);
  rep.crit_order = fit_exponent(crit_pts);
  return rep;
}

}  // namespace normcrit
