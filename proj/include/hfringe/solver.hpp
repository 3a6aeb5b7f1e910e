#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "hfringe/core.hpp"
#include "hfringe/errors.hpp"
#include "hfringe/profile.hpp"
#include "hfringe/quadrature.hpp"

namespace hfringe {

// Windowed perturbation integrals of one two-slit configuration. z1, z2 run
// over the full d-dependent windows; z10, z20 are their principal values on
// the fixed window [xi0, x_star]. rho0 folds the initial 2P amplitude into
// the same bookkeeping: z1 + rho0 = z10 + delta1 and z2 = z20 + delta2.
struct PerturbationIntegrals {
  Complex z1{0.0, 0.0};
  Complex z2{0.0, 0.0};
  Complex z10{0.0, 0.0};
  Complex z20{0.0, 0.0};
  Complex rho0{0.0, 0.0};
  double alpha10 = 0.0;  // arg(z10)
  double alpha20 = 0.0;  // arg(z20)
};

// Window-overlap corrections and the small parameters they induce.
// delta10/delta20 are the linear-in-d tail estimates per unit displacement.
struct OverlapCorrections {
  Complex delta1{0.0, 0.0};
  Complex delta2{0.0, 0.0};
  Complex delta10_per_d{0.0, 0.0};
  Complex delta20_per_d{0.0, 0.0};
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  // |delta_n|^2 / |z_n0|^2; the linearized intensity is trustworthy while
  // these stay well below one.
  double ratio1 = 0.0;
  double ratio2 = 0.0;
  bool corrections_small = true;
};

// First-order 2P amplitude at x_star for a total perturbation phi(x) with
// initial amplitudes A_s(x0) = s0, A_p(x0) = p0:
//   A_p = i*s0*exp[(i-beta)x_star] * Int_{x0}^{x_star} exp[(beta-i)x] phi(x) dx
//         + p0*exp[(i-beta)(x_star-x0)].
template <class Phi>
Complex first_order_amplitude(Phi&& phi, Complex s0, Complex p0, double x0, double x_star,
                              double beta, std::span<const double> cuts = {},
                              const QuadratureOptions& opt = {}) {
  if (!(x0 < x_star)) throw ValidationError("first_order_amplitude: x0 must be below x_star");
  if (!(beta > 0.0)) throw ValidationError("first_order_amplitude: beta must be positive");
  const Complex i_unit(0.0, 1.0);
  const Complex kernel_sum = kernel_integral(phi, x0, x_star, beta, cuts, opt);
  return i_unit * s0 * std::exp(Complex(-beta, 1.0) * x_star) * kernel_sum +
         p0 * std::exp(Complex(-beta, 1.0) * (x_star - x0));
}

inline Complex first_order_amplitude(const CompositePerturbation& phi, Complex s0, Complex p0,
                                     double x0, double x_star, double beta,
                                     const QuadratureOptions& opt = {}) {
  return first_order_amplitude([&phi](double x) { return phi(x); }, s0, p0, x0, x_star, beta,
                               phi.breakpoints(), opt);
}

// Kernel integral of a single profile over [lower, upper].
inline Complex kernel_integral(const PerturbationProfile& profile, double lower, double upper,
                               double beta, const QuadratureOptions& opt = {}) {
  const auto [lo, hi] = profile.support();
  const double a = std::max(lower, lo);
  const double b = std::min(upper, hi);
  if (!(lower <= upper)) throw ValidationError("kernel_integral: lower > upper");
  if (a >= b) return Complex(0.0, 0.0);
  return kernel_integral([&profile](double x) { return profile(x); }, a, b, beta,
                         profile.breakpoints(), opt);
}

inline PerturbationIntegrals compute_integrals(const PerturbationProfile& p1,
                                               const PerturbationProfile& p2,
                                               const ExperimentGeometry& geom, double d,
                                               Complex s0, Complex p0, double beta,
                                               const QuadratureOptions& opt = {}) {
  geom.validate();
  if (!(d >= 0.0)) throw ValidationError("compute_integrals: separation d must be >= 0");
  if (s0 == Complex(0.0, 0.0))
    throw ValidationError("compute_integrals: s0 = 0 leaves the relative initial amplitude undefined");

  PerturbationIntegrals out;
  out.z1 = kernel_integral(p1, geom.xi0, geom.x_star + d, beta, opt);
  out.z2 = kernel_integral(p2, geom.xi0 - d, geom.x_star, beta, opt);
  out.z10 = kernel_integral(p1, geom.xi0, geom.x_star, beta, opt);
  out.z20 = kernel_integral(p2, geom.xi0, geom.x_star, beta, opt);
  out.rho0 = Complex(0.0, -1.0) * (p0 / s0) * std::exp(Complex(beta, -1.0) * geom.xi0);
  out.alpha10 = std::arg(out.z10);
  out.alpha20 = std::arg(out.z20);
  return out;
}

inline OverlapCorrections compute_corrections(const PerturbationProfile& p1,
                                              const PerturbationProfile& p2,
                                              const ExperimentGeometry& geom, double d,
                                              Complex rho0, double beta,
                                              const PerturbationIntegrals& integrals,
                                              const QuadratureOptions& opt = {}) {
  geom.validate();
  if (!(d >= 0.0)) throw ValidationError("compute_corrections: separation d must be >= 0");
  const double z10_mod = std::abs(integrals.z10);
  const double z20_mod = std::abs(integrals.z20);
  if (z10_mod == 0.0 || z20_mod == 0.0)
    throw ValidationError("compute_corrections: principal values vanish, small parameters undefined");

  OverlapCorrections out;
  out.delta1 = kernel_integral(p1, geom.x_star, geom.x_star + d, beta, opt) + rho0;
  out.delta2 = kernel_integral(p2, geom.xi0 - d, geom.xi0, beta, opt);
  out.delta10_per_d = std::exp(Complex(beta, -1.0) * geom.x_star) * p1(geom.x_star);
  out.delta20_per_d = std::exp(Complex(beta, -1.0) * geom.xi0) * p2(geom.xi0);

  out.eps0 = std::abs(rho0) * std::cos(integrals.alpha10 - std::arg(rho0)) / z10_mod;
  if (rho0 == Complex(0.0, 0.0)) out.eps0 = 0.0;  // arg(0) is arbitrary
  out.eps1 = std::exp(beta * geom.x_star) * p1(geom.x_star) *
             std::cos(integrals.alpha10 + geom.x_star) / z10_mod;
  out.eps2 = std::exp(beta * geom.xi0) * p2(geom.xi0) *
             std::cos(integrals.alpha20 + geom.xi0) / z20_mod;

  out.ratio1 = std::norm(out.delta1) / std::norm(integrals.z10);
  out.ratio2 = std::norm(out.delta2) / std::norm(integrals.z20);
  out.corrections_small = out.ratio1 < 0.01 && out.ratio2 < 0.01;
  return out;
}

// Collimator placement check: the initial 2P admixture is negligible once
// |xi0| exceeds (1/beta)*ln(2/|z10|) by a comfortable margin.
struct CollimatorCheck {
  bool satisfied = false;
  double threshold = 0.0;
  double margin_factor = 3.0;
};

inline CollimatorCheck check_collimator_distance(double xi0, double beta, double z10_mod,
                                                 double margin_factor = 3.0) {
  if (!(beta > 0.0)) throw ValidationError("check_collimator_distance: beta must be positive");
  if (!(z10_mod > 0.0)) throw ValidationError("check_collimator_distance: |z10| must be positive");
  CollimatorCheck out;
  out.threshold = std::log(2.0 / z10_mod) / beta;
  out.margin_factor = margin_factor;
  out.satisfied = std::abs(xi0) >= margin_factor * out.threshold;
  return out;
}

}  // namespace hfringe
