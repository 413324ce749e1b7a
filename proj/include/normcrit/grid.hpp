#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "normcrit/params.hpp"

namespace normcrit {

enum class Grading { uniform, graded };

/// Radial discretization of R^N on [0,R]: strictly increasing nodes with
/// r_0 = 0, r_{M-1} = R, and quadrature weights for integrals
/// int_0^R f(r) omega_N r^{N-1} dr.  Per cell the weights integrate the
/// local quadratic interpolant (averaged over the two bracketing stencils)
/// against the exact measure, so polynomials up to degree 2 -- constants in
/// particular (ball volume) -- are integrated exactly.
class RadialGrid {
 public:
  RadialGrid(int N, double R, std::size_t M, Grading grading)
      : N_(N), R_(R), grading_(grading) {
    if (N != 3 && N != 4) throw ParamError("RadialGrid: N must be 3 or 4");
    if (!(R > 0.0)) throw ParamError("RadialGrid: R must be positive");
    if (M < 16) throw ParamError("RadialGrid: M must be at least 16");
    nodes_.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(M - 1);
      nodes_[i] = (grading == Grading::graded) ? R * s * s : R * s;
    }
    weights_.assign(M, 0.0);
    const double wN = solid_angle(N);
    // exact moments of the measure over one cell
    const auto moment = [&](double rl, double rr, int k) {
      return wN * (std::pow(rr, N + k) - std::pow(rl, N + k)) / (N + k);
    };
    // scatter int_cell L_j dmu for the quadratic Lagrange basis on the
    // stencil (a, b, c), scaled by `frac`
    const auto add_stencil = [&](std::size_t cell, std::size_t j0, double frac) {
      const double rl = nodes_[cell], rr = nodes_[cell + 1];
      const double P0 = moment(rl, rr, 0), P1 = moment(rl, rr, 1),
                   P2 = moment(rl, rr, 2);
      const double x[3] = {nodes_[j0], nodes_[j0 + 1], nodes_[j0 + 2]};
      for (int j = 0; j < 3; ++j) {
        const double p = x[(j + 1) % 3], q = x[(j + 2) % 3];
        const double den = (x[j] - p) * (x[j] - q);
        weights_[j0 + j] += frac * (P2 - (p + q) * P1 + p * q * P0) / den;
      }
    };
    // near the origin the quadratic basis can integrate to a (tiny) negative
    // value against the vanishing measure; such cells fall back to the
    // linear rule, which has positive weights.  Both rules integrate
    // constants and linears exactly per cell, so the fallback keeps the sum
    // of weights equal to the ball volume.
    std::vector<bool> use_linear(M - 1, false);
    for (;;) {
      std::fill(weights_.begin(), weights_.end(), 0.0);
      for (std::size_t i = 0; i + 1 < M; ++i) {
        if (use_linear[i]) {
          const double rl = nodes_[i], rr = nodes_[i + 1];
          const double m0 = moment(rl, rr, 0), m1 = moment(rl, rr, 1);
          weights_[i] += (rr * m0 - m1) / (rr - rl);
          weights_[i + 1] += (m1 - rl * m0) / (rr - rl);
        } else if (i == 0) {
          add_stencil(i, 0, 1.0);
        } else if (i + 2 == M) {
          add_stencil(i, M - 3, 1.0);
        } else {
          add_stencil(i, i - 1, 0.5);
          add_stencil(i, i, 0.5);
        }
      }
      bool changed = false;
      for (std::size_t i = 0; i < M; ++i) {
        if (weights_[i] > 0.0) continue;
        const std::size_t lo = (i >= 2) ? i - 2 : 0;
        const std::size_t hi = std::min(i + 1, M - 2);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (!use_linear[c]) {
            use_linear[c] = true;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
  }

  static double solid_angle(int N) {
    using std::numbers::pi;
    return (N == 3) ? 4.0 * pi : 2.0 * pi * pi;
  }

  int dim() const { return N_; }
  double radius() const { return R_; }
  std::size_t size() const { return nodes_.size(); }
  Grading grading() const { return grading_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  double ball_volume() const {
    return solid_angle(N_) * std::pow(R_, N_) / N_;
  }

 private:
  int N_;
  double R_;
  Grading grading_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr build_grid(int N, double R, std::size_t M,
                          Grading grading = Grading::graded) {
  return std::make_shared<const RadialGrid>(N, R, M, grading);
}

/// Default truncation radii: bubbles decay like r^{-(N-2)}, slow in N=3.
inline GridPtr default_grid(int N, std::size_t M = 4000) {
  return build_grid(N, N == 3 ? 100.0 : 60.0, M, Grading::graded);
}

/// Samples of a radially symmetric function at the grid nodes.
struct RadialField {
  GridPtr grid;
  std::vector<double> values;

  RadialField() = default;
  explicit RadialField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  RadialField(GridPtr g, std::vector<double> v)
      : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size())
      throw ParamError("RadialField: value count does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

inline void require_same_grid(const RadialField& f, const RadialField& g) {
  if (f.grid.get() != g.grid.get())
    throw ParamError("fields do not share a grid");
}

template <class F>
RadialField sample(const GridPtr& g, F&& fn) {
  RadialField f(g);
  for (std::size_t i = 0; i < g->size(); ++i) f[i] = fn(g->node(i));
  return f;
}

inline double integrate(const RadialField& f) {
  const auto& w = f.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

/// Nonuniform three-point first derivative; one-sided at both ends.
inline std::vector<double> derivative_samples(const RadialField& f) {
  const auto& r = f.grid->nodes();
  const std::size_t M = f.size();
  std::vector<double> d(M);
  d[0] = (f[1] - f[0]) / (r[1] - r[0]);
  d[M - 1] = (f[M - 1] - f[M - 2]) / (r[M - 1] - r[M - 2]);
  for (std::size_t i = 1; i + 1 < M; ++i) {
    const double hl = r[i] - r[i - 1];
    const double hr = r[i + 1] - r[i];
    d[i] = (f[i + 1] * hl * hl - f[i - 1] * hr * hr +
            f[i] * (hr * hr - hl * hl)) /
           (hl * hr * (hl + hr));
  }
  return d;
}

struct FieldNorms {
  double mass_sq = 0.0;
  double grad_sq = 0.0;
};

inline double mass_sq(const RadialField& f) {
  const auto& w = f.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * f[i];
  return s;
}

inline double grad_sq(const RadialField& f) {
  const auto d = derivative_samples(f);
  const auto& w = f.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * d[i] * d[i];
  return s;
}

inline double lp_norm_pow(const RadialField& f, double p) {
  const auto& w = f.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += w[i] * std::pow(std::abs(f[i]), p);
  return s;
}

inline double sup_norm(const RadialField& f) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  return s;
}

/// int |u|^alpha |v|^beta by the grid quadrature.
inline double interaction(const RadialField& u, const RadialField& v,
                          double alpha, double beta) {
  require_same_grid(u, v);
  const auto& w = u.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0 || v[i] == 0.0) continue;
    s += w[i] * std::pow(std::abs(u[i]), alpha) * std::pow(std::abs(v[i]), beta);
  }
  return s;
}

/// Radial Laplacian f'' + (N-1) f'/r via nonuniform three-point stencils.
/// At r=0 the symmetry limit N f''(0) (with f'(0)=0); at r=R a homogeneous
/// Dirichlet ghost node.
inline RadialField laplacian(const RadialField& f) {
  const auto& r = f.grid->nodes();
  const std::size_t M = f.size();
  if (M < 3) throw ParamError("laplacian: need at least 3 nodes");
  const int N = f.grid->dim();
  RadialField out(f.grid);
  out[0] = N * 2.0 * (f[1] - f[0]) / (r[1] * r[1]);
  for (std::size_t i = 1; i + 1 < M; ++i) {
    const double hl = r[i] - r[i - 1];
    const double hr = r[i + 1] - r[i];
    const double fpp =
        2.0 * (f[i - 1] * hr - f[i] * (hl + hr) + f[i + 1] * hl) /
        (hl * hr * (hl + hr));
    const double fp = (f[i + 1] * hl * hl - f[i - 1] * hr * hr +
                       f[i] * (hr * hr - hl * hl)) /
                      (hl * hr * (hl + hr));
    out[i] = fpp + (N - 1) * fp / r[i];
  }
  {
    const std::size_t i = M - 1;
    const double hl = r[i] - r[i - 1];
    const double hr = hl;  // ghost spacing
    const double fghost = 0.0;
    const double fpp = 2.0 * (f[i - 1] * hr - f[i] * (hl + hr) + fghost * hl) /
                       (hl * hr * (hl + hr));
    const double fp = (fghost * hl * hl - f[i - 1] * hr * hr +
                       f[i] * (hr * hr - hl * hl)) /
                      (hl * hr * (hl + hr));
    out[i] = fpp + (N - 1) * fp / r[i];
  }
  return out;
}

/// Gradient of the discrete Dirichlet form: applies W^{-1} D^T W D where D
/// is the derivative stencil and W the quadrature weights.  This is the
/// exact variational counterpart of grad_sq, so d/du [1/2 grad_sq(u)] h
/// equals the weighted pairing <kinetic_gradient(u), h> to roundoff.
inline RadialField kinetic_gradient(const RadialField& f) {
  const auto d = derivative_samples(f);
  const auto& r = f.grid->nodes();
  const auto& w = f.grid->weights();
  const std::size_t M = f.size();
  std::vector<double> wd(M);
  for (std::size_t i = 0; i < M; ++i) wd[i] = w[i] * d[i];
  RadialField out(f.grid);
  // Adjoint of the stencil: scatter each row's coefficients.
  {
    const double h = r[1] - r[0];
    out[0] += -wd[0] / h;
    out[1] += wd[0] / h;
  }
  {
    const std::size_t i = M - 1;
    const double h = r[i] - r[i - 1];
    out[i - 1] += -wd[i] / h;
    out[i] += wd[i] / h;
  }
  for (std::size_t i = 1; i + 1 < M; ++i) {
    const double hl = r[i] - r[i - 1];
    const double hr = r[i + 1] - r[i];
    const double den = hl * hr * (hl + hr);
    out[i - 1] += -hr * hr / den * wd[i];
    out[i] += (hr * hr - hl * hl) / den * wd[i];
    out[i + 1] += hl * hl / den * wd[i];
  }
  for (std::size_t i = 0; i < M; ++i) out[i] /= w[i];
  return out;
}

namespace detail {

/// Monotone cubic Hermite interpolation (Fritsch-Carlson slopes) of grid
/// samples; evaluates at a query radius, zero beyond R.
class MonotoneCubic {
 public:
  explicit MonotoneCubic(const RadialField& f)
      : r_(f.grid->nodes()), y_(f.values), m_(f.size(), 0.0) {
    const std::size_t M = y_.size();
    std::vector<double> delta(M - 1);
    for (std::size_t i = 0; i + 1 < M; ++i)
      delta[i] = (y_[i + 1] - y_[i]) / (r_[i + 1] - r_[i]);
    m_[0] = delta[0];
    m_[M - 1] = delta[M - 2];
    for (std::size_t i = 1; i + 1 < M; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0)
        m_[i] = 0.0;
      else {
        const double hl = r_[i] - r_[i - 1], hr = r_[i + 1] - r_[i];
        // weighted harmonic mean keeps the interpolant monotone
        const double w1 = 2.0 * hr + hl, w2 = hr + 2.0 * hl;
        m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    for (std::size_t i = 0; i + 1 < M; ++i) {
      if (delta[i] == 0.0) { m_[i] = 0.0; m_[i + 1] = 0.0; continue; }
      const double a = m_[i] / delta[i], b = m_[i + 1] / delta[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double t = 3.0 / std::sqrt(s);
        m_[i] = t * a * delta[i];
        m_[i + 1] = t * b * delta[i];
      }
    }
  }

  double operator()(double x) const {
    if (x <= r_.front()) return y_.front();
    if (x >= r_.back()) return 0.0;
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(r_.begin(), r_.end(), x) - r_.begin());
    const std::size_t lo = hi - 1;
    const double h = r_[hi] - r_[lo];
    const double t = (x - r_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[lo] * (2 * t3 - 3 * t2 + 1) + h * m_[lo] * (t3 - 2 * t2 + t) +
           y_[hi] * (-2 * t3 + 3 * t2) + h * m_[hi] * (t3 - t2);
  }

 private:
  const std::vector<double>& r_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace detail

struct ScaleWindow {
  double lo = 1e-6;
  double hi = 1e6;
};

/// Mass-preserving fiber dilation t * f = t^{N/2} f(t r), resampled onto
/// the same grid by monotone cubic interpolation with zero extension.
inline RadialField fiber_scale(const RadialField& f, double t,
                               const ScaleWindow& win = {}) {
  if (!(t >= win.lo && t <= win.hi))
    throw ParamError("fiber_scale: t outside the configured window");
  if (t == 1.0) return f;
  detail::MonotoneCubic interp(f);
  const int N = f.grid->dim();
  const double amp = std::pow(t, N / 2.0);
  RadialField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i)
    out[i] = amp * interp(t * f.grid->node(i));
  return out;
}

/// D^{1,2}-invariant dilation eps^{(N-2)/2} f(eps r).
inline RadialField dilate(const RadialField& f, double eps,
                          const ScaleWindow& win = {}) {
  if (!(eps >= win.lo && eps <= win.hi))
    throw ParamError("dilate: eps outside the configured window");
  if (eps == 1.0) return f;
  detail::MonotoneCubic interp(f);
  const int N = f.grid->dim();
  const double amp = std::pow(eps, (N - 2) / 2.0);
  RadialField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i)
    out[i] = amp * interp(eps * f.grid->node(i));
  return out;
}

/// Monotone cubic transfer of a field onto another grid (zero beyond the
/// source radius).
inline RadialField resample(const RadialField& f, const GridPtr& target) {
  if (f.grid == target) return f;
  if (f.grid->dim() != target->dim())
    throw ParamError("resample: dimension mismatch");
  detail::MonotoneCubic interp(f);
  RadialField out(target);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = interp(target->node(i));
  return out;
}

/// Discrete equimeasurable decreasing rearrangement.  The multiset of
/// (value, cell volume) pairs is sorted by value and re-deposited onto the
/// grid cells from r=0 outward; each target cell receives the volume-
/// weighted mean of the layer-cake step function over its volume bracket.
/// Negative inputs are clamped to zero.
inline RadialField schwartz_rearrange(const RadialField& f) {
  const std::size_t M = f.size();
  const auto& w = f.grid->weights();
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> vals(M);
  for (std::size_t i = 0; i < M; ++i) vals[i] = std::max(f[i], 0.0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return vals[i] > vals[j]; });
  RadialField out(f.grid);
  std::size_t k = 0;                 // index into the sorted source cells
  double src_left = w[order[0]];     // volume remaining in source cell k
  for (std::size_t i = 0; i < M; ++i) {
    double need = w[i];
    double acc = 0.0;
    while (need > 0.0 && k < M) {
      const double take = std::min(need, src_left);
      acc += take * vals[order[k]];
      need -= take;
      src_left -= take;
      if (src_left <= 0.0 && k + 1 < M) {
        ++k;
        src_left = w[order[k]];
      } else if (src_left <= 0.0) {
        ++k;  // exhausted
        break;
      }
    }
    // zero-volume cells carry no mass; give them the current front value so
    // the output stays monotone
    out[i] = (w[i] > 0.0) ? acc / w[i] : (k < M ? vals[order[k]] : 0.0);
  }
  return out;
}

}  // namespace normcrit
