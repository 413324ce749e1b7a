#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "normcrit/params.hpp"

using namespace normcrit;

TEST_CASE("exponent helpers") {
  CHECK(mass_critical_exponent(3) == Catch::Approx(2.0 + 4.0 / 3.0));
  CHECK(mass_critical_exponent(4) == Catch::Approx(3.0));
  CHECK(critical_exponent(3) == Catch::Approx(6.0));
  CHECK(critical_exponent(4) == Catch::Approx(4.0));
  CHECK(gamma_exponent(3, 1.2, 1.2) == Catch::Approx(0.6));
  CHECK(gamma_exponent(4, 1.1, 1.3) == Catch::Approx(0.8));
}

TEST_CASE("validate accepts the default instance") {
  ProblemParams p;
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("validate names the violated constraint") {
  ProblemParams p;
  p.N = 5;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("N"));
  p = ProblemParams{};
  p.a = 0.0;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("a must"));
  p = ProblemParams{};
  p.mu2 = -1.0;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("mu2"));
  p = ProblemParams{};
  p.alpha = 1.0;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("alpha"));
  p = ProblemParams{};
  p.beta = 0.9;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("beta"));
  p = ProblemParams{};
  p.alpha = 1.7;
  p.beta = 1.7;  // sum 3.4 > 2 + 4/3
  CHECK_THROWS_WITH(validate(p),
                    Catch::Matchers::ContainsSubstring("mass critical"));
  p = ProblemParams{};
  p.nu = -0.1;
  CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("nu"));
}

TEST_CASE("sobolev constant matches the Gamma-function closed form") {
  // S = pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}
  for (int N : {3, 4}) {
    const double expected =
        std::numbers::pi * N * (N - 2) *
        std::pow(std::exp(std::lgamma(N / 2.0) - std::lgamma(double(N))),
                 2.0 / N);
    CHECK(sobolev_constant(N) == Catch::Approx(expected).epsilon(1e-12));
  }
  CHECK(sobolev_constant(3) == Catch::Approx(5.4779).epsilon(1e-4));
  CHECK(sobolev_constant(4) == Catch::Approx(10.2604).epsilon(1e-4));
  CHECK_THROWS_AS(sobolev_constant(5), ParamError);
}

TEST_CASE("derived constants satisfy their defining identities") {
  ProblemParams p;
  p.nu = 0.01;
  const double C_gn = 0.5;  // any positive pin works for the identities
  const DerivedConstants c = derive_constants(p, C_gn);

  CHECK(c.gamma > 0.0);
  CHECK(c.gamma < 2.0);
  CHECK(c.two_star == Catch::Approx(6.0));
  CHECK(c.A == Catch::Approx(C_gn * std::pow(2.0, (2.4 - c.gamma) / 2.0)));
  CHECK(c.B ==
        Catch::Approx(std::pow(c.S, -3.0) / 6.0 * std::max(p.mu1, p.mu2)));

  // rho_nu is the stationary point of h_nu
  const double h0 = h_profile(c, p.nu, c.rho_nu);
  CHECK(h0 > h_profile(c, p.nu, c.rho_nu * 1.01));
  CHECK(h0 > h_profile(c, p.nu, c.rho_nu * 0.99));

  // at nu = nu_bar0 the maximum of h touches zero at rho0
  const double rho_bar = std::pow(c.nu_bar0, 1.0 / (c.two_star - c.gamma)) *
                         c.rho_nu / std::pow(p.nu, 1.0 / (c.two_star - c.gamma));
  CHECK(rho_bar == Catch::Approx(c.rho0).epsilon(1e-12));
  CHECK(h_profile(c, c.nu_bar0, c.rho0) == Catch::Approx(0.0).margin(1e-12));

  // nu0 strictly inside (0, nu_bar0) and k0 = rho0^2 h_{nu0}(rho0) > 0
  CHECK(c.nu0 > 0.0);
  CHECK(c.nu0 < c.nu_bar0);
  CHECK(c.k0 == Catch::Approx(c.rho0 * c.rho0 * h_profile(c, c.nu0, c.rho0)));
  CHECK(c.k0 > 0.0);

  CHECK(geometry_ok(p, c) == (p.nu < c.nu_bar0));
}

TEST_CASE("rho_nu obeys the power-law scaling in nu") {
  ProblemParams p;
  const double C_gn = 0.5;
  p.nu = 0.02;
  const DerivedConstants c1 = derive_constants(p, C_gn);
  p.nu = 0.005;
  const DerivedConstants c2 = derive_constants(p, C_gn);
  const double expo = 1.0 / (c1.two_star - c1.gamma);
  CHECK(c1.rho_nu / c2.rho_nu ==
        Catch::Approx(std::pow(0.02 / 0.005, expo)).epsilon(1e-12));
}

TEST_CASE("derive_constants rejects bad pins") {
  ProblemParams p;
  CHECK_THROWS_AS(derive_constants(p, 0.0), ParamError);
  CHECK_THROWS_AS(derive_constants(p, 0.5, 0.0), ParamError);
  CHECK_THROWS_AS(derive_constants(p, 0.5, 1.0), ParamError);
  const DerivedConstants c = derive_constants(p, 0.5);
  CHECK_THROWS_AS(h_profile(c, 0.1, 0.0), ParamError);
}
