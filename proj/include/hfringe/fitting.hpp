#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfringe/errors.hpp"
#include "hfringe/interferogram.hpp"
#include "hfringe/least_squares.hpp"
#include "hfringe/linalg.hpp"
#include "hfringe/models.hpp"

namespace hfringe {

enum class Weighting { Poisson, None };

namespace detail {

inline std::vector<double> fit_weights(std::span<const double> counts, Weighting weighting) {
  std::vector<double> w;
  if (weighting == Weighting::None) return w;
  w.reserve(counts.size());
  for (double c : counts) w.push_back(1.0 / std::max(c, 1.0));
  return w;
}

inline void require_oscillatory(std::span<const double> counts) {
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  if (*hi - *lo <= 1e-12 * std::max(scale, 1.0))
    throw ValidationError("fit: no oscillatory component (constant counts)");
}

inline double wrap_phase(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline double weighted_ssr(std::span<const double> y, std::span<const double> f,
                           std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - f[i];
    s += (w.empty() ? 1.0 : w[i]) * r * r;
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standard interferogram fit
//   F0(l) = a1 e^{-2 b l} + a2 e^{-b l} cos(l + a3) + a2^2/(4 a1) + b
// The pedestal is a hard reparameterization, never a free parameter; the
// background b absorbs the constant offset. Gauge: a2 >= 0, a3 in (-pi, pi].
// ---------------------------------------------------------------------------

struct StandardFitOptions {
  Weighting weighting = Weighting::Poisson;
  bool constrain_pedestal = true;
  bool fix_background = false;  // force b = 0 (misfit diagnosis mode)
};

struct FitResultF0 {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double b = 0.0;
  std::vector<double> covariance;  // 4x4 row-major, order (a1, a2, a3, b)
  double residual_norm = 0.0;      // sqrt of weighted SSR
  double reduced_chi2 = 0.0;
  ConvergenceReport report;

  double pedestal() const { return a2 * a2 / (4.0 * a1); }
  double mu() const { return a2 / a1; }
  double sigma(std::size_t i) const { return std::sqrt(std::max(covariance[i * 4 + i], 0.0)); }
};

inline FitResultF0 fit_standard(const Interferogram& data, double beta,
                                const StandardFitOptions& options = {}) {
  data.validate();
  if (!(beta > 0.0)) throw ValidationError("fit_standard: beta must be positive");
  const std::size_t n = data.ell.size();
  if (n < 8) throw ValidationError("fit_standard: need at least 8 points");
  if (data.ell.back() - data.ell.front() < 2.0 * std::numbers::pi - 1e-9)
    throw ValidationError("fit_standard: data must span at least one oscillation period");
  detail::require_oscillatory(data.counts);

  const std::vector<double> w = detail::fit_weights(data.counts, options.weighting);

  // The model is linear in (a1, a2 cos a3, -a2 sin a3, const), so the global
  // optimum comes from one weighted linear solve; the damped polish below
  // only confirms it and supplies the convergence report.
  std::vector<double> basis(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = data.ell[i];
    const double damp = std::exp(-beta * l);
    basis[i * 4 + 0] = damp * damp;
    basis[i * 4 + 1] = damp * std::cos(l);
    basis[i * 4 + 2] = damp * std::sin(l);
    basis[i * 4 + 3] = 1.0;
  }
  std::vector<double> lin_cov;
  std::vector<double> v = detail::weighted_lls(basis, data.counts, w, n, 4, &lin_cov);

  FitResultF0 out;
  out.a1 = v[0];
  out.a2 = std::hypot(v[1], v[2]);
  out.a3 = out.a2 > 0.0 ? std::atan2(-v[2], v[1]) : 0.0;
  if (out.a1 <= 0.0) {
    out.report.warnings.push_back("leading exponential amplitude a1 came out non-positive");
    out.a1 = std::max(out.a1, 1e-12 * (*std::max_element(data.counts.begin(), data.counts.end()) + 1.0));
  }
  out.b = v[3] - out.pedestal();

  if (options.fix_background) {
    // b pinned to zero makes the pedestal constraint bite; polish the three
    // remaining parameters with damped least squares.
    std::vector<double> params{out.a1, out.a2, out.a3};
    auto model = [&](std::span<const double> p, std::span<double> f, double* jac) {
      const double a1 = std::max(p[0], 1e-300), a2 = p[1], a3 = p[2];
      for (std::size_t i = 0; i < n; ++i) {
        const double l = data.ell[i];
        const double damp = std::exp(-beta * l);
        const double c = std::cos(l + a3);
        f[i] = a1 * damp * damp + a2 * damp * c + a2 * a2 / (4.0 * a1);
        if (jac) {
          jac[i * 3 + 0] = damp * damp - a2 * a2 / (4.0 * a1 * a1);
          jac[i * 3 + 1] = damp * c + a2 / (2.0 * a1);
          jac[i * 3 + 2] = -a2 * damp * std::sin(l + a3);
        }
      }
    };
    std::vector<double> cov3;
    out.report = detail::lm_fit(model, params, data.counts, w, &cov3);
    out.a1 = params[0];
    out.a2 = params[1];
    out.a3 = params[2];
    out.b = 0.0;
    out.covariance.assign(16, 0.0);
    if (cov3.size() == 9)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.covariance[r * 4 + c] = cov3[r * 3 + c];
  } else {
    std::vector<double> params{out.a1, out.a2, out.a3, out.b};
    const bool pedestal_free = !options.constrain_pedestal;
    auto model = [&](std::span<const double> p, std::span<double> f, double* jac) {
      const double a1 = std::max(p[0], 1e-300), a2 = p[1], a3 = p[2], bg = p[3];
      const double ped = pedestal_free ? 0.0 : a2 * a2 / (4.0 * a1);
      for (std::size_t i = 0; i < n; ++i) {
        const double l = data.ell[i];
        const double damp = std::exp(-beta * l);
        const double c = std::cos(l + a3);
        f[i] = a1 * damp * damp + a2 * damp * c + ped + bg;
        if (jac) {
          jac[i * 4 + 0] = damp * damp - (pedestal_free ? 0.0 : a2 * a2 / (4.0 * a1 * a1));
          jac[i * 4 + 1] = damp * c + (pedestal_free ? 0.0 : a2 / (2.0 * a1));
          jac[i * 4 + 2] = -a2 * damp * std::sin(l + a3);
          jac[i * 4 + 3] = 1.0;
        }
      }
    };
    if (out.a2 > 1e-14 * (std::abs(v[3]) + std::abs(v[0]) + 1.0)) {
      out.report = detail::lm_fit(model, params, data.counts, w, nullptr);
      out.a1 = params[0];
      out.a2 = params[1];
      out.a3 = params[2];
      out.b = params[3];
    } else {
      out.report.converged = true;
      out.report.message = "oscillation amplitude at noise floor; linear solution kept";
      out.report.warnings.push_back("phase a3 is unconstrained at a2 = 0");
    }

    // Covariance propagated from the well-behaved linear basis; stays finite
    // for a2 -> 0 where the (a2, a3) parameterization itself degenerates.
    const double a2s = std::max(out.a2, 1e-300);
    const double ux = out.a2 > 0.0 ? v[1] / a2s : 1.0;
    const double uy = out.a2 > 0.0 ? v[2] / a2s : 0.0;
    const double jmap[16] = {
        1.0, 0.0, 0.0, 0.0,
        0.0, ux, uy, 0.0,
        0.0, uy / a2s, -ux / a2s, 0.0,
        out.a2 * out.a2 / (4.0 * out.a1 * out.a1), -v[1] / (2.0 * out.a1), -v[2] / (2.0 * out.a1), 1.0};
    out.covariance.assign(16, 0.0);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k)
          for (int m = 0; m < 4; ++m) s += jmap[r * 4 + k] * lin_cov[k * 4 + m] * jmap[c * 4 + m];
        out.covariance[r * 4 + c] = s;
      }
  }

  if (out.a2 < 0.0) {
    out.a2 = -out.a2;
    out.a3 += std::numbers::pi;
  }
  out.a3 = detail::wrap_phase(out.a3);

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double damp = std::exp(-beta * data.ell[i]);
    const double ped = options.constrain_pedestal ? out.pedestal() : 0.0;
    f[i] = out.a1 * damp * damp + out.a2 * damp * std::cos(data.ell[i] + out.a3) + ped + out.b;
  }
  const double ssr = detail::weighted_ssr(data.counts, f, w);
  out.residual_norm = std::sqrt(ssr);
  const std::size_t n_params = options.fix_background ? 3 : 4;
  const std::size_t dof = n > n_params ? n - n_params : 1;
  out.reduced_chi2 = ssr / static_cast<double>(dof);
  if (options.weighting == Weighting::None) {
    const double scale = ssr / static_cast<double>(dof);
    for (double& c : out.covariance) c *= scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corrected interferogram fit (8 parameters a1..a8).
//
// F1 depends on its parameters only through six linear coefficients plus the
// phase:
//   c1 = a1(1+2a5)   c2 = 2a1a6    [e^{-2bl}, l e^{-2bl}]
//   c3 = a2(1+a5+a7) c4 = a2(a6+a8)[e^{-bl}cos(l+a3), l e^{-bl}cos(l+a3)]
//   c5 = a4(1+2a7)   c6 = 2a4a8    [1, l]
// so one direction of the 8-parameter space is exactly unidentifiable. The
// fit therefore estimates (c1..c6, a3) and closes the gauge with the model's
// own ratio relation a5/a6 = a7/a8, which yields the closed form
//   r = [S-(P+Q)] / [S(P+Q)-4PQ],  P = c2/2c1, Q = c6/2c5, S = c4/c3,
// with r the common ratio. The pedestal relation a4 = a2^2/(4a1) is NOT
// imposed and remains an independent quality check.
// ---------------------------------------------------------------------------

struct FitResultF1 {
  std::array<double, 8> a{};
  std::array<double, 6> c{};       // identifiable linear coefficients
  std::vector<double> covariance;  // 8x8 row-major for a1..a8
  double residual_norm = 0.0;
  double reduced_chi2 = 0.0;
  bool gauge_resolved = true;  // false when the ratio relation was degenerate
  ConvergenceReport report;

  double sigma(std::size_t i) const { return std::sqrt(std::max(covariance[i * 8 + i], 0.0)); }
};

namespace detail {

struct F1Gauge {
  std::array<double, 8> a{};
  bool resolved = true;
  std::string note;
};

inline F1Gauge f1_gauge_map(const std::array<double, 6>& c, double a3) {
  F1Gauge out;
  const double c1 = c[0], c2 = c[1], c3 = c[2], c4 = c[3], c5 = c[4], c6 = c[5];
  const double p = c1 != 0.0 ? c2 / (2.0 * c1) : 0.0;
  const double q = c5 != 0.0 ? c6 / (2.0 * c5) : 0.0;
  const double s = c3 != 0.0 ? c4 / c3 : 0.0;

  const double numerator = s - (p + q);
  const double denominator = s * (p + q) - 4.0 * p * q;
  const double den_scale = std::abs(s * (p + q)) + std::abs(4.0 * p * q);
  double r = 0.0;
  if (den_scale == 0.0 || std::abs(denominator) <= 1e-9 * den_scale) {
    out.resolved = false;
    out.note = "linear-in-separation terms do not fix the displacement gauge";
  } else {
    r = numerator / denominator;
  }
  if (std::abs(2.0 * r * p) >= 0.5 || std::abs(2.0 * r * q) >= 0.5) {
    out.resolved = false;
    out.note = "gauge solution outside the small-correction regime";
    r = 0.0;
  }
  const double a5 = r * p / (1.0 - 2.0 * r * p);
  const double a7 = r * q / (1.0 - 2.0 * r * q);
  out.a = {c1 / (1.0 + 2.0 * a5),
           c3 / (1.0 + a5 + a7),
           a3,
           c5 / (1.0 + 2.0 * a7),
           a5,
           p * (1.0 + 2.0 * a5),
           a7,
           q * (1.0 + 2.0 * a7)};
  return out;
}

}  // namespace detail

inline FitResultF1 fit_corrected(const Interferogram& data, double beta,
                                 Weighting weighting = Weighting::Poisson) {
  data.validate();
  if (!(beta > 0.0)) throw ValidationError("fit_corrected: beta must be positive");
  const std::size_t n = data.ell.size();
  if (n < 10) throw ValidationError("fit_corrected: need at least 10 points");
  const double span = data.ell.back() - data.ell.front();
  if (span < 2.0 * std::numbers::pi - 1e-9)
    throw ValidationError("fit_corrected: data must span at least one oscillation period");
  detail::require_oscillatory(data.counts);

  FitResultF1 out;
  if (span < 6.0 * std::numbers::pi)
    out.report.warnings.push_back(
        "ell range below three oscillation periods; linear-in-ell terms are weakly identified");

  const std::vector<double> w = detail::fit_weights(data.counts, weighting);

  // Unrestricted 8-column linear stage (cos/sin expanded), then the common
  // phase of the two cosine pairs.
  std::vector<double> basis(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = data.ell[i];
    const double damp = std::exp(-beta * l);
    basis[i * 8 + 0] = damp * damp;
    basis[i * 8 + 1] = l * damp * damp;
    basis[i * 8 + 2] = damp * std::cos(l);
    basis[i * 8 + 3] = damp * std::sin(l);
    basis[i * 8 + 4] = l * damp * std::cos(l);
    basis[i * 8 + 5] = l * damp * std::sin(l);
    basis[i * 8 + 6] = 1.0;
    basis[i * 8 + 7] = l;
  }
  const std::vector<double> v = detail::weighted_lls(basis, data.counts, w, n, 8);

  const double mxx = v[2] * v[2] + v[4] * v[4];
  const double myy = v[3] * v[3] + v[5] * v[5];
  const double mxy = v[2] * v[3] + v[4] * v[5];
  const double phi = 0.5 * std::atan2(2.0 * mxy, mxx - myy);
  double a3 = std::atan2(-std::sin(phi), std::cos(phi));
  std::array<double, 6> c{v[0], v[1],
                          v[2] * std::cos(phi) + v[3] * std::sin(phi),
                          v[4] * std::cos(phi) + v[5] * std::sin(phi),
                          v[6], v[7]};

  // Damped polish of the identifiable parameterization (full rank in
  // general position, unlike the raw a1..a8 system).
  std::vector<double> params{c[0], c[1], c[2], c[3], c[4], c[5], a3};
  auto model = [&](std::span<const double> p, std::span<double> f, double* jac) {
    for (std::size_t i = 0; i < n; ++i) {
      const double l = data.ell[i];
      const double damp = std::exp(-beta * l);
      const double cosl = std::cos(l + p[6]);
      const double sinl = std::sin(l + p[6]);
      f[i] = p[0] * damp * damp + p[1] * l * damp * damp + (p[2] + p[3] * l) * damp * cosl +
             p[4] + p[5] * l;
      if (jac) {
        jac[i * 7 + 0] = damp * damp;
        jac[i * 7 + 1] = l * damp * damp;
        jac[i * 7 + 2] = damp * cosl;
        jac[i * 7 + 3] = l * damp * cosl;
        jac[i * 7 + 4] = 1.0;
        jac[i * 7 + 5] = l;
        jac[i * 7 + 6] = -(p[2] + p[3] * l) * damp * sinl;
      }
    }
  };
  std::vector<double> cov7;
  out.report = detail::lm_fit(model, params, data.counts, w, &cov7);
  for (int i = 0; i < 6; ++i) c[i] = params[i];
  a3 = params[6];

  if (out.report.condition_number > 1e12)
    out.report.warnings.push_back("ill-conditioned normal equations; corrected fit is unreliable");

  // Canonical oscillation gauge before the parameter map.
  if (c[2] < 0.0) {
    c[2] = -c[2];
    c[3] = -c[3];
    a3 = detail::wrap_phase(a3 + std::numbers::pi);
    if (cov7.size() == 49) {
      for (int k = 0; k < 7; ++k) {
        cov7[2 * 7 + k] = -cov7[2 * 7 + k];
        cov7[3 * 7 + k] = -cov7[3 * 7 + k];
      }
      for (int k = 0; k < 7; ++k) {
        cov7[k * 7 + 2] = -cov7[k * 7 + 2];
        cov7[k * 7 + 3] = -cov7[k * 7 + 3];
      }
    }
  } else {
    a3 = detail::wrap_phase(a3);
  }

  detail::F1Gauge gauge = detail::f1_gauge_map(c, a3);
  out.a = gauge.a;
  out.c = c;
  out.gauge_resolved = gauge.resolved;
  if (!gauge.resolved) out.report.warnings.push_back(gauge.note);

  // Covariance of a1..a8 by propagating the (c, a3) covariance through the
  // gauge map (central differences; the map is smooth algebra).
  out.covariance.assign(64, std::numeric_limits<double>::quiet_NaN());
  if (cov7.size() == 49 && std::isfinite(cov7[0])) {
    std::array<std::array<double, 7>, 8> gmap{};
    for (int j = 0; j < 7; ++j) {
      std::array<double, 6> cp = c, cm = c;
      double a3p = a3, a3m = a3;
      const double base = j < 6 ? c[j] : a3;
      const double h = 1e-7 * (1.0 + std::abs(base));
      if (j < 6) {
        cp[j] += h;
        cm[j] -= h;
      } else {
        a3p += h;
        a3m -= h;
      }
      const auto up = detail::f1_gauge_map(cp, a3p);
      const auto um = detail::f1_gauge_map(cm, a3m);
      for (int i = 0; i < 8; ++i) gmap[i][j] = (up.a[i] - um.a[i]) / (2.0 * h);
    }
    for (int r = 0; r < 8; ++r)
      for (int s = 0; s < 8; ++s) {
        double acc = 0.0;
        for (int k = 0; k < 7; ++k)
          for (int m = 0; m < 7; ++m) acc += gmap[r][k] * cov7[k * 7 + m] * gmap[s][m];
        out.covariance[r * 8 + s] = acc;
      }
  }

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = corrected_fit_model_F1(out.a, beta, data.ell[i]);
  const double ssr = detail::weighted_ssr(data.counts, f, w);
  out.residual_norm = std::sqrt(ssr);
  const std::size_t dof = n > 8 ? n - 8 : 1;
  out.reduced_chi2 = ssr / static_cast<double>(dof);
  if (weighting == Weighting::None && !out.covariance.empty() && std::isfinite(out.covariance[0])) {
    const double scale = ssr / static_cast<double>(dof);
    for (double& cc : out.covariance) cc *= scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Electrostatic-exciter era fit: free oscillation period, shared length unit
// between L and the range R.
// ---------------------------------------------------------------------------

struct FitResultLegacy {
  std::array<double, 5> a{};       // amplitude, modulation, period, phase, offset
  std::vector<double> covariance;  // 5x5
  double residual_norm = 0.0;
  double reduced_chi2 = 0.0;
  bool period_identifiable = true;
  ConvergenceReport report;
};

inline FitResultLegacy fit_legacy(std::span<const double> distance, std::span<const double> counts,
                                  double range, Weighting weighting = Weighting::Poisson) {
  if (distance.size() != counts.size()) throw ValidationError("fit_legacy: array size mismatch");
  const std::size_t n = distance.size();
  if (n < 8) throw ValidationError("fit_legacy: need at least 8 points");
  if (!(range > 0.0)) throw ValidationError("fit_legacy: range must be positive");
  detail::require_oscillatory(counts);

  const std::vector<double> w = detail::fit_weights(counts, weighting);
  const double span = distance.back() - distance.front();
  double min_gap = span;
  for (std::size_t i = 1; i < n; ++i) min_gap = std::min(min_gap, distance[i] - distance[i - 1]);

  // Period scan: linear solve of the remaining amplitudes per candidate.
  auto linear_at_period = [&](double period, std::vector<double>* sol) {
    std::vector<double> basis(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      const double L = distance[i];
      const double arg = 2.0 * std::numbers::pi * L / period;
      basis[i * 4 + 0] = std::exp(-L / range);
      basis[i * 4 + 1] = std::exp(-L / (2.0 * range)) * std::cos(arg);
      basis[i * 4 + 2] = std::exp(-L / (2.0 * range)) * std::sin(arg);
      basis[i * 4 + 3] = 1.0;
    }
    std::vector<double> x = detail::weighted_lls(basis, {counts.begin(), counts.end()}, w, n, 4);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i)
      f[i] = basis[i * 4] * x[0] + basis[i * 4 + 1] * x[1] + basis[i * 4 + 2] * x[2] + x[3];
    if (sol) *sol = x;
    return detail::weighted_ssr(counts, f, w);
  };

  const double t_lo = std::max(2.5 * min_gap, span / 64.0);
  const double t_hi = 2.0 * span;
  double best_period = t_lo, best_ssr = std::numeric_limits<double>::infinity();
  const int scan = 256;
  for (int k = 0; k <= scan; ++k) {
    const double period = t_lo * std::pow(t_hi / t_lo, static_cast<double>(k) / scan);
    const double ssr = linear_at_period(period, nullptr);
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best_period = period;
    }
  }

  std::vector<double> lin;
  linear_at_period(best_period, &lin);
  std::vector<double> params{lin[0], std::hypot(lin[1], lin[2]),
                             best_period, std::atan2(-lin[2], lin[1]), lin[3]};

  auto model = [&](std::span<const double> p, std::span<double> f, double* jac) {
    const double period = p[2] != 0.0 ? p[2] : 1e-300;
    for (std::size_t i = 0; i < n; ++i) {
      const double L = distance[i];
      const double e1 = std::exp(-L / range);
      const double e2 = std::exp(-L / (2.0 * range));
      const double arg = 2.0 * std::numbers::pi * L / period + p[3];
      f[i] = p[0] * e1 + p[1] * e2 * std::cos(arg) + p[4];
      if (jac) {
        jac[i * 5 + 0] = e1;
        jac[i * 5 + 1] = e2 * std::cos(arg);
        jac[i * 5 + 2] = p[1] * e2 * std::sin(arg) * 2.0 * std::numbers::pi * L / (period * period);
        jac[i * 5 + 3] = -p[1] * e2 * std::sin(arg);
        jac[i * 5 + 4] = 1.0;
      }
    }
  };

  FitResultLegacy out;
  out.report = detail::lm_fit(model, params, counts, w, &out.covariance);
  if (params[1] < 0.0) {
    params[1] = -params[1];
    params[3] += std::numbers::pi;
  }
  params[3] = detail::wrap_phase(params[3]);
  std::copy(params.begin(), params.end(), out.a.begin());

  std::vector<double> f(n);
  model(params, f, nullptr);
  const double ssr = detail::weighted_ssr(counts, f, w);
  out.residual_norm = std::sqrt(ssr);
  const std::size_t dof = n > 5 ? n - 5 : 1;
  out.reduced_chi2 = ssr / static_cast<double>(dof);
  if (weighting == Weighting::None && !out.covariance.empty() && std::isfinite(out.covariance[0])) {
    const double scale = ssr / static_cast<double>(dof);
    for (double& cc : out.covariance) cc *= scale;
  }

  const double sigma_a2 =
      out.covariance.size() == 25 ? std::sqrt(std::max(out.covariance[6], 0.0)) : 0.0;
  if (!(out.a[1] > 3.0 * sigma_a2) || out.a[1] == 0.0) {
    out.period_identifiable = false;
    out.report.warnings.push_back("modulation consistent with zero; period is unidentifiable");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Voltage-scan quadratic fit and the stray-field inversion.
// ---------------------------------------------------------------------------

struct QuadraticFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  std::vector<double> covariance;  // 3x3
  double residual_norm = 0.0;
  double reduced_chi2 = 0.0;
  bool curvature_nonnegative = true;

  double sigma(std::size_t i) const { return std::sqrt(std::max(covariance[i * 3 + i], 0.0)); }
};

inline QuadraticFit fit_voltage_scan(const VoltageScan& data, Weighting weighting = Weighting::None) {
  data.validate();
  const std::size_t n = data.u_e.size();
  std::vector<double> sorted = data.u_e;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3) throw ValidationError("fit_voltage_scan: need at least 3 distinct voltages");

  const std::vector<double> w = detail::fit_weights(data.counts, weighting);
  std::vector<double> basis(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    basis[i * 3 + 0] = 1.0;
    basis[i * 3 + 1] = data.u_e[i];
    basis[i * 3 + 2] = data.u_e[i] * data.u_e[i];
  }
  QuadraticFit out;
  const std::vector<double> v = detail::weighted_lls(basis, data.counts, w, n, 3, &out.covariance);
  out.c0 = v[0];
  out.c1 = v[1];
  out.c2 = v[2];

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = out.c0 + out.c1 * data.u_e[i] + out.c2 * data.u_e[i] * data.u_e[i];
  const double ssr = detail::weighted_ssr(data.counts, f, w);
  out.residual_norm = std::sqrt(ssr);
  const std::size_t dof = n > 3 ? n - 3 : 1;
  out.reduced_chi2 = ssr / static_cast<double>(dof);
  if (weighting == Weighting::None) {
    const double scale = ssr / static_cast<double>(dof);
    for (double& cc : out.covariance) cc *= scale;
  }
  // Soft physical constraint: the u^2 coefficient is a squared modulus.
  out.curvature_nonnegative = out.c2 >= -3.0 * out.sigma(2);
  return out;
}

// Model parameters recovered from a corrected fit, with the two internal
// consistency relations reported as relative residuals.
struct ExtractedParams {
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::optional<double> d0;
  std::string d0_note;
  std::optional<double> z_ratio;  // |z10|/|z20|
  double pedestal_residual = 0.0;
  double eps_ratio_residual = 0.0;
};

inline ExtractedParams extract(const FitResultF1& fit, double beta) {
  if (!(beta > 0.0)) throw ValidationError("extract: beta must be positive");
  const auto& a = fit.a;
  ExtractedParams out;
  out.eps1 = a[5];
  out.eps2 = a[7];

  double noise_floor = 0.0;
  if (fit.covariance.size() == 64 && std::isfinite(fit.covariance[5 * 8 + 5]) &&
      std::isfinite(fit.covariance[7 * 8 + 7])) {
    const double var = fit.covariance[5 * 8 + 5] + fit.covariance[7 * 8 + 7] -
                       2.0 * fit.covariance[5 * 8 + 7];
    noise_floor = 3.0 * std::sqrt(std::max(var, 0.0));
  }
  const double denom = a[5] - a[7];
  const double abs_floor = 1e-12 * (std::abs(a[5]) + std::abs(a[7]) + 1e-300);
  if (std::abs(denom) <= std::max(noise_floor, abs_floor)) {
    out.d0_note = "boundary slopes eps1 and eps2 coincide within noise; displacement d0 is undefined";
  } else {
    out.d0 = (a[4] - a[6]) / denom;
    if (a[1] > 0.0) out.z_ratio = (2.0 * a[0] / a[1]) * std::exp(beta * *out.d0);
  }

  const double ped = a[1] * a[1] / (4.0 * a[0]);
  out.pedestal_residual = std::abs(a[3] - ped) / std::max({std::abs(a[3]), std::abs(ped), 1e-300});
  const double cross1 = a[4] * a[7], cross2 = a[5] * a[6];
  out.eps_ratio_residual =
      std::abs(cross1 - cross2) / std::max({std::abs(cross1), std::abs(cross2), 1e-300});
  if (cross1 == 0.0 && cross2 == 0.0) out.eps_ratio_residual = 0.0;
  return out;
}

// Two-run inversion for the internal voltage and the common slit integral:
//   c0/c2 - (c1/c2) u_i + u_i^2 = |z|^2 G(d)   at two separations.
struct FcfSolution {
  struct Root {
    double u_i = 0.0;
    double z_mod2 = 0.0;
    double residual = 0.0;  // worst relative defect in the two input equations
  };
  std::vector<Root> admissible;  // all real roots with |z|^2 > 0
  int root_multiplicity = 0;
};

inline FcfSolution solve_fcf(const QuadraticFit& run1, double g1, const QuadraticFit& run2,
                             double g2) {
  if (!(run1.c2 > 0.0) || !(run2.c2 > 0.0))
    throw ValidationError("solve_fcf: both scans need positive curvature c2");
  if (!(g1 > 0.0) || !(g2 > 0.0)) throw ValidationError("solve_fcf: geometry factors must be positive");
  if (std::abs(g1 - g2) <= 1e-9 * std::max(g1, g2))
    throw DegenerateError("solve_fcf: equal geometry factors; the two runs are degenerate");

  const double A1 = run1.c0 / run1.c2, B1 = run1.c1 / run1.c2;
  const double A2 = run2.c0 / run2.c2, B2 = run2.c1 / run2.c2;

  // Eliminating |z|^2 leaves a quadratic in u_i.
  const double qa = g2 - g1;
  const double qb = -(B1 * g2 - B2 * g1);
  const double qc = A1 * g2 - A2 * g1;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0)
    throw DegenerateError("solve_fcf: no real internal voltage satisfies both scans (model mismatch)");

  const double sq = std::sqrt(disc);
  const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
  std::vector<double> roots;
  if (q != 0.0) {
    roots.push_back(q / qa);
    roots.push_back(qc / q);
  } else {
    roots.push_back(0.0);
    if (qa != 0.0) roots.push_back(-qb / qa);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + std::abs(x)); }),
              roots.end());

  FcfSolution out;
  for (double u : roots) {
    const double lhs1 = A1 - B1 * u + u * u;
    const double lhs2 = A2 - B2 * u + u * u;
    const double z2 = lhs1 / g1;
    if (!(z2 > 0.0)) continue;
    const double r1 = std::abs(lhs1 - z2 * g1) / std::max(std::abs(lhs1), 1e-300);
    const double r2 = std::abs(lhs2 - z2 * g2) / std::max(std::abs(lhs2), 1e-300);
    out.admissible.push_back({u, z2, std::max(r1, r2)});
  }
  out.root_multiplicity = static_cast<int>(out.admissible.size());
  if (out.admissible.empty())
    throw DegenerateError("solve_fcf: no admissible root with |z|^2 > 0 (model mismatch)");
  return out;
}

// Single-scan shortcut valid only when the internal voltage is known absent.
inline double recover_slit_integral(const QuadraticFit& fit, double g, bool assume_ui_zero = true) {
  if (!assume_ui_zero)
    throw ValidationError("recover_slit_integral: internal voltage unknown; use the two-run inversion");
  if (!(fit.c2 > 0.0)) throw ValidationError("recover_slit_integral: curvature c2 must be positive");
  if (!(g > 1e-300)) throw ValidationError("recover_slit_integral: geometry factor vanishes");
  return fit.c0 / (fit.c2 * g);
}

}  // namespace hfringe
