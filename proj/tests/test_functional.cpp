#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "normcrit/functional.hpp"
#include "oracle.hpp"

using namespace normcrit;

namespace {

StatePair gaussian_pair(const GridPtr& g, const ProblemParams& p,
                        double w1 = 1.0, double w2 = 1.5) {
  RadialField u = sample(g, [=](double r) { return std::exp(-r * r / (w1 * w1)); });
  RadialField v = sample(g, [=](double r) { return std::exp(-r * r / (w2 * w2)); });
  return StatePair(std::move(u), std::move(v), p);
}

}  // namespace

TEST_CASE("energy matches an adaptive-quadrature recomputation") {
  ProblemParams p;
  p.nu = 0.3;
  p.mu1 = 1.0;
  p.mu2 = 2.0;
  const GridPtr g = build_grid(3, 20.0, 4000, Grading::graded);
  const StatePair s = gaussian_pair(g, p);
  const double R = g->radius();
  const auto fu = [](double r) { return std::exp(-r * r); };
  const auto fv = [](double r) { return std::exp(-r * r / 2.25); };
  const double ku = oracle::radial_integral(
      3, [&](double r) { double d = -2.0 * r * fu(r); return d * d; }, R);
  const double kv = oracle::radial_integral(
      3, [&](double r) { double d = -2.0 * r / 2.25 * fv(r); return d * d; }, R);
  const double cu = oracle::radial_integral(
      3, [&](double r) { return std::pow(fu(r), 6.0); }, R);
  const double cv = oracle::radial_integral(
      3, [&](double r) { return std::pow(fv(r), 6.0); }, R);
  const double inter = oracle::radial_integral(
      3, [&](double r) { return std::pow(fu(r), 1.2) * std::pow(fv(r), 1.2); },
      R);
  const double expected = 0.5 * (ku + kv) - p.mu1 / 6.0 * cu -
                          p.mu2 / 6.0 * cv - p.nu * inter;
  CHECK(energy(s) == Catch::Approx(expected).epsilon(1e-5));
}

TEST_CASE("gradient matches central finite differences of the energy") {
  ProblemParams p;
  p.nu = 0.2;
  p.mu2 = 1.5;
  p.alpha = 1.1;
  p.beta = 1.4;
  const GridPtr g = build_grid(3, 30.0, 1000, Grading::graded);
  std::mt19937_64 rng(3);
  // pedestal keeps the fields strictly positive along the FD segment: the
  // |u|^alpha interaction is not twice differentiable where a component
  // vanishes, which would cap the FD order
  const RadialField floor_field =
      sample(g, [](double r) { return 0.5 * std::exp(-r * r / 400.0); });
  for (int trial = 0; trial < 10; ++trial) {
    RadialField u = random_smooth_field(g, rng);
    RadialField v = random_smooth_field(g, rng);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += floor_field[i];
      v[i] += floor_field[i];
    }
    StatePair s(std::move(u), std::move(v), p);
    StatePair h(random_smooth_field(g, rng), random_smooth_field(g, rng), p);
    const StatePair grad = gradient(s);
    const double pairing = pair_inner(grad, h);
    const double eps = 1e-5;
    StatePair sp = s, sm = s;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      sp.u[i] += eps * h.u[i];
      sp.v[i] += eps * h.v[i];
      sm.u[i] -= eps * h.u[i];
      sm.v[i] -= eps * h.v[i];
    }
    const double fd = (energy(sp) - energy(sm)) / (2.0 * eps);
    // scale by |g||h| so near-cancellation of the directional derivative
    // does not inflate the relative error
    const double scale = std::sqrt(pair_inner(grad, grad) * pair_inner(h, h));
    CHECK(std::abs(pairing - fd) / scale < 1e-5);
  }
}

TEST_CASE("Pohozaev functional equals the fiber derivative at sigma = 0") {
  ProblemParams p;
  p.nu = 0.25;
  p.mu2 = 2.0;
  const GridPtr g = default_grid(3, 2000);
  const StatePair s = gaussian_pair(g, p);
  const double eps = 1e-6;
  const double fd = (aux_energy(eps, s) - aux_energy(-eps, s)) / (2.0 * eps);
  CHECK(pohozaev(s) == Catch::Approx(fd).margin(1e-8));
}

TEST_CASE("closed fiber energy matches the direct rescaled evaluation") {
  ProblemParams p;
  p.nu = 0.15;
  const GridPtr g = default_grid(3, 4000);
  const StatePair s = gaussian_pair(g, p);
  for (double t : {0.5, 0.8, 1.0, 1.4, 2.0}) {
    StatePair st(fiber_scale(s.u, t), fiber_scale(s.v, t), p);
    const double direct = energy(st);
    const double closed = fiber_energy_closed(s, t);
    CHECK(closed == Catch::Approx(direct).epsilon(1e-3));
  }
}

TEST_CASE("aux_energy respects the fiber window") {
  ProblemParams p;
  const GridPtr g = build_grid(3, 20.0, 200, Grading::graded);
  const StatePair s = gaussian_pair(g, p);
  CHECK_THROWS_AS(aux_energy(15.0, s), ParamError);
}

TEST_CASE("multiplier formulas require a torus state") {
  ProblemParams p;
  const GridPtr g = build_grid(3, 20.0, 300, Grading::graded);
  StatePair s = gaussian_pair(g, p);  // masses far from (a, b)
  CHECK_THROWS_AS(multipliers_residual(s), ParamError);
  CHECK_THROWS_AS(multipliers_pohozaev(s), ParamError);
}

TEST_CASE("multiplier formulas agree on manufactured critical directions") {
  // On the torus, rescale the pair so both formulas can be evaluated; they
  // agree exactly only at critical points, but both must be finite and
  // deterministic here.
  ProblemParams p;
  const GridPtr g = build_grid(3, 20.0, 500, Grading::graded);
  StatePair s = gaussian_pair(g, p);
  const double mu = std::sqrt(mass_sq(s.u)), mv = std::sqrt(mass_sq(s.v));
  for (auto& x : s.u.values) x *= p.a / mu;
  for (auto& x : s.v.values) x *= p.b / mv;
  const MultiplierPair m1 = multipliers_residual(s);
  const MultiplierPair m2 = multipliers_pohozaev(s);
  CHECK(std::isfinite(m1.lambda1));
  CHECK(std::isfinite(m1.lambda2));
  CHECK(std::isfinite(m2.lambda1));
  CHECK(std::isfinite(m2.lambda2));
}

TEST_CASE("gn_ratio is invariant under the fiber dilation") {
  ProblemParams p;
  p.alpha = 1.2;
  p.beta = 1.3;
  const GridPtr g = default_grid(3, 4000);
  const StatePair s = gaussian_pair(g, p);
  const double base = gn_ratio(s);
  for (double t : {0.8, 1.25}) {
    StatePair st(fiber_scale(s.u, t), fiber_scale(s.v, t), p);
    CHECK(gn_ratio(st) == Catch::Approx(base).epsilon(1e-3));
  }
}

TEST_CASE("gn_ratio rejects degenerate states") {
  ProblemParams p;
  const GridPtr g = build_grid(3, 10.0, 100, Grading::graded);
  RadialField zero(g);
  StatePair s(zero, zero, p);
  CHECK_THROWS_AS(gn_ratio(s), ParamError);
}

TEST_CASE("gn_estimate is deterministic and bounded by the sharp inequality") {
  const GridPtr g = build_grid(3, 40.0, 800, Grading::graded);
  const double c1 = gn_estimate(g, 1.2, 1.2, 4, 99);
  const double c2 = gn_estimate(g, 1.2, 1.2, 4, 99);
  CHECK(c1 == c2);
  CHECK(c1 > 0.0);
  // every evaluated ratio is a lower bound of the supremum; a random state
  // must not beat the ascent output by a wide margin
  std::mt19937_64 rng(5);
  ProblemParams p;
  p.alpha = 1.2;
  p.beta = 1.2;
  StatePair s(random_smooth_field(g, rng), random_smooth_field(g, rng), p);
  CHECK(gn_ratio(s) <= c1 * (1.0 + 1e-9));
}

TEST_CASE("signed_pow covers the singular exponents") {
  CHECK(signed_pow(0.0, 0.2) == 0.0);
  CHECK(signed_pow(4.0, 0.5) == Catch::Approx(2.0));
  CHECK(signed_pow(-4.0, 0.5) == Catch::Approx(-2.0));
}
