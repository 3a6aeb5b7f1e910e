#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "hfringe/errors.hpp"

namespace hfringe {

using Complex = std::complex<double>;

inline constexpr double speed_of_light = 299792458.0;  // m/s

// 2S(F=0) - 2P(F=1) transition frequency and 2P lifetime. Overridable per run.
inline constexpr double default_transition_frequency_hz = 909.89e6;
inline constexpr double default_upper_lifetime_s = 1.5962e-9;

// Beam inputs in SI units. Everything downstream works in the dimensionless
// coordinate x = k0*z; conversion happens only at I/O boundaries.
struct BeamParameters {
  double v_a = 0.0;                               // atom speed, m/s
  double nu0 = default_transition_frequency_hz;   // transition frequency, Hz
  double tau = default_upper_lifetime_s;          // 2P lifetime, s
};

struct DimensionlessConstants {
  double k0 = 0.0;    // transition wavenumber seen by the moving atom, 1/m
  double beta = 0.0;  // damping-to-oscillation ratio 1/(2*omega0*tau)
  double range = 0.0; // 2P range R = tau*v_a, m
};

// State amplitudes of the metastable (2S) and decaying (2P) levels.
struct AmplitudePair {
  Complex a_s{0.0, 0.0};
  Complex a_p{0.0, 0.0};

  double norm_sq() const { return std::norm(a_s) + std::norm(a_p); }
};

// Throws on hard violations; returns human-readable warnings otherwise.
inline std::vector<std::string> validate(const BeamParameters& beam) {
  if (!(beam.v_a > 0.0)) throw ValidationError("beam: v_a must be positive");
  if (!(beam.nu0 > 0.0)) throw ValidationError("beam: nu0 must be positive");
  if (!(beam.tau > 0.0)) throw ValidationError("beam: tau must be positive");
  const double ratio = beam.v_a / speed_of_light;
  if (ratio > 0.02)
    throw ValidationError("beam: v_a/c exceeds 0.02; the straight-line z = v_a*t kinematics no longer apply");
  std::vector<std::string> warnings;
  if (ratio > 0.01)
    warnings.push_back("beam: v_a/c above 0.01; kinematic corrections approach the percent level");
  return warnings;
}

inline DimensionlessConstants derive_constants(const BeamParameters& beam) {
  validate(beam);
  const double omega0 = 2.0 * std::numbers::pi * beam.nu0;
  DimensionlessConstants c;
  c.k0 = omega0 / beam.v_a;
  c.beta = 1.0 / (2.0 * omega0 * beam.tau);
  c.range = beam.tau * beam.v_a;
  return c;
}

inline double to_dimensionless(double z_m, const DimensionlessConstants& c) {
  return c.k0 * z_m;
}

inline double from_dimensionless(double x, const DimensionlessConstants& c) {
  return x / c.k0;
}

}  // namespace hfringe
