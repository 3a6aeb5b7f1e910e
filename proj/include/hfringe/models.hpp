#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "hfringe/core.hpp"
#include "hfringe/errors.hpp"

namespace hfringe {

// Closed-form count-rate models. ell is the variable part of the slit
// separation d = d0 + ell; all coordinates dimensionless.

// Standard interferogram: a10*e^{-2*beta*ell} + a20*e^{-beta*ell}*cos(ell + a30) + a40.
inline double standard_model_I0(double a10, double a20, double a30, double a40, double beta,
                                double ell) {
  const double damp = std::exp(-beta * ell);
  return a10 * damp * damp + a20 * damp * std::cos(ell + a30) + a40;
}

struct StandardCoeffs {
  double a10 = 0.0;
  double a20 = 0.0;
  double a30 = 0.0;
  double a40 = 0.0;
};

// Coefficients of the standard interferogram in terms of the windowed
// integral moduli/phases and the constant displacement d0. The pedestal obeys
// a40 = a20^2/(4*a10) by construction.
inline StandardCoeffs standard_coeffs(double k_factor, double z10_mod, double z20_mod,
                                      double alpha10, double alpha20, double d0, double beta) {
  if (!(k_factor > 0.0)) throw ValidationError("standard_coeffs: K must be positive");
  StandardCoeffs c;
  const double damp0 = std::exp(-beta * d0);
  c.a10 = k_factor * z10_mod * z10_mod * damp0 * damp0;
  c.a20 = 2.0 * k_factor * z10_mod * z20_mod * damp0;
  c.a30 = d0 + alpha10 - alpha20;
  c.a40 = k_factor * z20_mod * z20_mod;
  return c;
}

// Model parameters of the linear-in-d corrected interferogram.
struct CorrectedModelParams {
  double k_factor = 1.0;
  double z10_mod = 0.0;
  double z20_mod = 0.0;
  double alpha10 = 0.0;
  double alpha20 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double d0 = 0.0;
};

// Corrected interferogram with window-overlap terms kept to linear order in
// d = d0 + ell.
inline double corrected_model_I1(const CorrectedModelParams& m, double beta, double ell) {
  if (!(m.k_factor > 0.0)) throw ValidationError("corrected_model_I1: K must be positive");
  const double d = m.d0 + ell;
  const double damp0 = std::exp(-beta * m.d0);
  const double damp = std::exp(-beta * ell);
  const double head = m.k_factor * m.z10_mod * m.z10_mod * damp0 * damp0 *
                      (1.0 + 2.0 * m.eps1 * d) * damp * damp;
  const double cross = 2.0 * m.k_factor * m.z10_mod * m.z20_mod * damp0 *
                       (1.0 + (m.eps1 + m.eps2) * d) * damp *
                       std::cos(ell + m.d0 + m.alpha10 - m.alpha20);
  const double tail = m.k_factor * m.z20_mod * m.z20_mod * (1.0 + 2.0 * m.eps2 * d);
  return head + cross + tail;
}

// Empirical 8-parameter form fitted to measured interferograms:
//   F1 = a1[1 + 2(a5 + a6 l)]e^{-2bl} + a2[1 + a5 + a7 + (a6 + a8)l]e^{-bl}cos(l + a3)
//        + a4[1 + 2(a7 + a8 l)].
inline double corrected_fit_model_F1(const std::array<double, 8>& a, double beta, double ell) {
  const double damp = std::exp(-beta * ell);
  return a[0] * (1.0 + 2.0 * (a[4] + a[5] * ell)) * damp * damp +
         a[1] * (1.0 + a[4] + a[6] + (a[5] + a[7]) * ell) * damp * std::cos(ell + a[2]) +
         a[3] * (1.0 + 2.0 * (a[6] + a[7] * ell));
}

// Mapping from model parameters to the empirical a1..a8.
inline std::array<double, 8> f1_parameters(const CorrectedModelParams& m, double beta) {
  const double damp0 = std::exp(-beta * m.d0);
  return {m.k_factor * m.z10_mod * m.z10_mod * damp0 * damp0,
          2.0 * m.k_factor * m.z10_mod * m.z20_mod * damp0,
          m.d0 + m.alpha10 - m.alpha20,
          m.k_factor * m.z20_mod * m.z20_mod,
          m.eps1 * m.d0,
          m.eps1,
          m.eps2 * m.d0,
          m.eps2};
}

// Fit function of the electrostatic-exciter era; L and the range R share one
// length unit and the oscillation period a3 is free.
inline double legacy_model_F(const std::array<double, 5>& a, double range, double L) {
  if (!(range > 0.0)) throw ValidationError("legacy_model_F: range must be positive");
  if (a[2] == 0.0) throw ValidationError("legacy_model_F: zero period");
  return a[0] * std::exp(-L / range) +
         a[1] * std::exp(-L / (2.0 * range)) * std::cos(2.0 * std::numbers::pi * L / a[2] + a[3]) +
         a[4];
}

// Percentage modulation mu = a20/a10 = 2(|z20|/|z10|)e^{beta*d0}; equals
// 2e^{beta*d0} for identical slits irrespective of the profile shapes.
inline double modulation(double z10_mod, double z20_mod, double beta, double d0) {
  if (!(z10_mod > 0.0)) throw ValidationError("modulation: |z10| must be positive");
  return 2.0 * (z20_mod / z10_mod) * std::exp(beta * d0);
}

inline double identical_slit_modulation(double beta, double d0) {
  return 2.0 * std::exp(beta * d0);
}

// Quadratic response of the count rate to the dimensionless voltage u at
// fixed separation d: I(u) = b0 + b1*u + b2*u^2.
struct VoltageScanCoeffs {
  double b0 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
};

inline VoltageScanCoeffs voltage_scan_coeffs(Complex z10, Complex z20, Complex zeta0, double d,
                                             double beta, double k_factor) {
  if (!(k_factor > 0.0)) throw ValidationError("voltage_scan_coeffs: K must be positive");
  const double z10_mod = std::abs(z10), z20_mod = std::abs(z20), zeta_mod = std::abs(zeta0);
  const double alpha10 = std::arg(z10), alpha20 = std::arg(z20), alpha_e0 = std::arg(zeta0);
  const double damp = std::exp(-beta * d);
  VoltageScanCoeffs c;
  c.b0 = k_factor * (z10_mod * z10_mod * damp * damp +
                     2.0 * z10_mod * z20_mod * damp * std::cos(d + alpha10 - alpha20) +
                     z20_mod * z20_mod);
  c.b1 = 2.0 * k_factor * zeta_mod *
         (z10_mod * damp * std::cos(d + alpha10 - alpha_e0) +
          z20_mod * std::cos(alpha20 - alpha_e0));
  c.b2 = k_factor * zeta_mod * zeta_mod;
  return c;
}

// Geometry function linking the scan coefficient ratio b0/b2 to |z|^2 for
// identical slits: G(d) = [1 + 2e^{-beta*d}cos d + e^{-2*beta*d}] / |zeta0|^2.
inline double g_factor(double d, double beta, double zeta0_mod2) {
  if (!(zeta0_mod2 > 0.0)) throw ValidationError("g_factor: |zeta0|^2 must be positive");
  const double damp = std::exp(-beta * d);
  return (1.0 + 2.0 * damp * std::cos(d) + damp * damp) / zeta0_mod2;
}

// Closed forms for the uniform-gap field shape psi = 1/d on [-d, 0].
inline Complex uniform_gap_zeta0(double d, double beta) {
  if (!(d > 0.0)) throw ValidationError("uniform_gap_zeta0: d must be positive");
  const Complex k(beta, -1.0);
  return (1.0 - std::exp(-k * d)) / (k * d);
}

inline double uniform_gap_zeta0_mod2(double d, double beta) {
  if (!(d > 0.0)) throw ValidationError("uniform_gap_zeta0_mod2: d must be positive");
  const double damp = std::exp(-beta * d);
  return (1.0 - 2.0 * damp * std::cos(d) + damp * damp) / ((1.0 + beta * beta) * d * d);
}

// Uniform-gap G(d) in the small-beta convention that drops the (1 + beta^2)
// normalization of uniform_gap_zeta0_mod2; its d -> 0 limit is 4/(1 + beta^2).
// g_factor(d, beta, uniform_gap_zeta0_mod2(d, beta)) carries the full factor
// and tends to 4 instead.
inline double uniform_gap_g_small_beta(double d, double beta) {
  if (!(d > 0.0)) throw ValidationError("uniform_gap_g_small_beta: d must be positive");
  const double damp = std::exp(-beta * d);
  const double cos_d = std::cos(d);
  const double denominator = 1.0 - 2.0 * damp * cos_d + damp * damp;
  if (denominator == 0.0) throw DegenerateError("uniform_gap_g_small_beta: response node");
  return d * d * (1.0 + 2.0 * damp * cos_d + damp * damp) / denominator;
}

}  // namespace hfringe
