#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace normcrit {

/// One problem instance of the coupled critical system on the mass torus
/// T(a,b).  Exponents alpha, beta live in the mass-mixed regime
/// alpha, beta > 1, alpha + beta < 2 + 4/N with N in {3,4}.
struct ProblemParams {
  int N = 3;
  double a = 1.0;
  double b = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double alpha = 1.2;
  double beta = 1.2;
  double nu = 0.01;
};

/// Closed-form constants of the local-minimum geometry: the dilation
/// exponent gamma, the critical exponent 2*, the Sobolev constant S,
/// the interaction Gagliardo-Nirenberg constant estimate C_gn, and the
/// ball radii / thresholds (rho_nu, nu_bar0, rho0, nu0, k0).
struct DerivedConstants {
  double gamma = 0.0;
  double two_star = 0.0;
  double S = 0.0;
  double C_gn = 0.0;
  double A = 0.0;
  double B = 0.0;
  double rho_nu = 0.0;
  double nu_bar0 = 0.0;
  double rho0 = 0.0;
  double nu0 = 0.0;
  double k0 = 0.0;
};

class ParamError : public std::runtime_error {
 public:
  explicit ParamError(const std::string& what) : std::runtime_error(what) {}
};

inline double mass_critical_exponent(int N) { return 2.0 + 4.0 / N; }

inline double critical_exponent(int N) { return 2.0 * N / (N - 2.0); }

/// gamma_{alpha+beta} = N(alpha+beta-2)/2, the fiber-dilation exponent of
/// the interaction term.
inline double gamma_exponent(int N, double alpha, double beta) {
  return N * (alpha + beta - 2.0) / 2.0;
}

/// Checks every structural constraint of the instance and returns it
/// unchanged.  Throws ParamError naming the violated constraint.
inline ProblemParams validate(const ProblemParams& p) {
  if (p.N != 3 && p.N != 4)
    throw ParamError("N must be 3 or 4, got " + std::to_string(p.N));
  if (!(p.a > 0.0)) throw ParamError("a must be positive");
  if (!(p.b > 0.0)) throw ParamError("b must be positive");
  if (!(p.mu1 > 0.0)) throw ParamError("mu1 must be positive");
  if (!(p.mu2 > 0.0)) throw ParamError("mu2 must be positive");
  if (!(p.nu >= 0.0)) throw ParamError("nu must be nonnegative");
  if (!(p.alpha > 1.0)) throw ParamError("alpha must exceed 1");
  if (!(p.beta > 1.0)) throw ParamError("beta must exceed 1");
  if (!(p.alpha + p.beta < mass_critical_exponent(p.N)))
    throw ParamError("alpha+beta must be below the mass critical exponent 2+4/N");
  return p;
}

/// Sharp Sobolev embedding constant for D^{1,2} -> L^{2*}, hard-coded per
/// dimension.  The values agree with the closed form
/// pi*N*(N-2)*(Gamma(N/2)/Gamma(N))^{2/N} and with the Rayleigh quotient of
/// the explicit extremal profile on a fine radial grid.
inline double sobolev_constant(int N) {
  using std::numbers::pi;
  switch (N) {
    case 3:
      // 3*pi*(sqrt(pi)/4)^{2/3}
      return 3.0 * pi * std::pow(std::sqrt(pi) / 4.0, 2.0 / 3.0);
    case 4:
      // 8*pi/sqrt(6)
      return 8.0 * pi / std::sqrt(6.0);
    default:
      throw ParamError("sobolev_constant: N must be 3 or 4");
  }
}

/// h_nu(rho) = 1/2 - nu*A*rho^{gamma-2} - B*rho^{2*-2}, the lower envelope
/// of the energy on the kinetic sphere of radius rho.
inline double h_profile(const DerivedConstants& c, double nu, double rho) {
  if (!(rho > 0.0)) throw ParamError("h_profile: rho must be positive");
  return 0.5 - nu * c.A * std::pow(rho, c.gamma - 2.0) -
         c.B * std::pow(rho, c.two_star - 2.0);
}

/// Fills every derived constant from a validated instance and a pinned
/// interaction GN constant.  nu0_fraction places nu0 strictly inside
/// (0, nu_bar0).  If p.nu >= nu_bar0 the geometry is not guaranteed; the
/// caller should check geometry_ok(p, c).
inline DerivedConstants derive_constants(const ProblemParams& p, double C_gn,
                                         double nu0_fraction = 0.5) {
  if (!(C_gn > 0.0)) throw ParamError("derive_constants: C_gn must be positive");
  if (!(nu0_fraction > 0.0 && nu0_fraction < 1.0))
    throw ParamError("derive_constants: nu0_fraction must lie in (0,1)");
  DerivedConstants c;
  c.gamma = gamma_exponent(p.N, p.alpha, p.beta);
  c.two_star = critical_exponent(p.N);
  c.S = sobolev_constant(p.N);
  c.C_gn = C_gn;
  c.A = C_gn * std::pow(p.a * p.a + p.b * p.b,
                        (p.alpha + p.beta - c.gamma) / 2.0);
  c.B = (1.0 / c.two_star) * std::pow(c.S, -c.two_star / 2.0) *
        std::max(p.mu1, p.mu2);
  // Stationary point of h_nu: rho_nu = nu^{1/(2*-gamma)} * C1.
  const double C1 = std::pow(c.A * (2.0 - c.gamma) / (c.B * (c.two_star - 2.0)),
                             1.0 / (c.two_star - c.gamma));
  c.rho_nu = std::pow(p.nu, 1.0 / (c.two_star - c.gamma)) * C1;
  // max_rho h_nu(rho) = 0 exactly at nu = nu_bar0.
  const double denom = c.A * std::pow(C1, c.gamma - 2.0) +
                       c.B * std::pow(C1, c.two_star - 2.0);
  c.nu_bar0 = std::pow(1.0 / (2.0 * denom),
                       (c.two_star - c.gamma) / (c.two_star - 2.0));
  c.rho0 = std::pow(c.nu_bar0, 1.0 / (c.two_star - c.gamma)) * C1;
  c.nu0 = nu0_fraction * c.nu_bar0;
  c.k0 = c.rho0 * c.rho0 * h_profile(c, c.nu0, c.rho0);
  return c;
}

inline bool geometry_ok(const ProblemParams& p, const DerivedConstants& c) {
  return p.nu < c.nu_bar0;
}

}  // namespace normcrit
