#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "hfringe/core.hpp"
#include "hfringe/errors.hpp"
#include "hfringe/models.hpp"
#include "hfringe/profile.hpp"
#include "hfringe/solver.hpp"

namespace hfringe {

struct NoiseSpec {
  enum class Kind { None, Poisson };
  Kind kind = Kind::None;
  std::uint64_t seed = 0;
  double exposure = 1.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec poisson(std::uint64_t seed, double exposure = 1.0) {
    if (!(exposure > 0.0)) throw ValidationError("noise: exposure must be positive");
    return NoiseSpec{Kind::Poisson, seed, exposure};
  }
};

// Sampled count-rate curve vs the variable separation ell.
struct Interferogram {
  std::vector<double> ell;
  std::vector<double> counts;
  double k_factor = 1.0;
  double background = 0.0;
  NoiseSpec noise{};

  void validate() const {
    if (ell.size() != counts.size()) throw ValidationError("interferogram: array size mismatch");
    for (std::size_t i = 0; i < ell.size(); ++i) {
      if (!(counts[i] >= 0.0)) throw ValidationError("interferogram: negative counts");
      if (i > 0 && !(ell[i] > ell[i - 1])) throw ValidationError("interferogram: ell must be increasing");
    }
  }
};

// Count rate vs external dimensionless voltage at fixed separation.
struct VoltageScan {
  std::vector<double> u_e;
  std::vector<double> counts;
  double d = 0.0;
  double x_star = 0.0;

  void validate() const {
    if (u_e.size() != counts.size()) throw ValidationError("voltage scan: array size mismatch");
    for (double c : counts)
      if (!(c >= 0.0)) throw ValidationError("voltage scan: negative counts");
  }
};

// Expected count rate at one separation d from the first-order amplitude of
// the full composite perturbation; no narrowness assumption. The overall
// |s0|^2 e^{-2 beta x_star} factor is folded into K so that K means the same
// thing here and in the closed-form models.
inline double exact_intensity(const PerturbationProfile& p1, const PerturbationProfile& p2,
                              const ExperimentGeometry& geom, double d, Complex s0, Complex p0,
                              double beta, double k_factor, double background,
                              const QuadratureOptions& opt = {}) {
  geom.validate();
  if (!(k_factor > 0.0)) throw ValidationError("exact_intensity: K must be positive");
  if (!(background >= 0.0)) throw ValidationError("exact_intensity: background must be >= 0");
  if (s0 == Complex(0.0, 0.0)) throw ValidationError("exact_intensity: s0 must be nonzero");
  const CompositePerturbation total(p1, p2, d);
  const Complex a_p = first_order_amplitude(total, s0, p0, geom.xi0 - d, geom.x_star, beta, opt);
  const double bracket_sq = std::norm(a_p) * std::exp(2.0 * beta * geom.x_star) / std::norm(s0);
  return k_factor * bracket_sq + background;
}

// Expected interferogram over the geometry's ell grid (d = d0 + ell).
inline Interferogram simulate_interferogram(const PerturbationProfile& p1,
                                            const PerturbationProfile& p2,
                                            const ExperimentGeometry& geom, Complex s0, Complex p0,
                                            double beta, double k_factor, double background,
                                            const QuadratureOptions& opt = {}) {
  geom.validate();
  Interferogram gram;
  gram.ell = geom.ell;
  gram.k_factor = k_factor;
  gram.background = background;
  gram.counts.reserve(geom.ell.size());
  for (double ell : geom.ell)
    gram.counts.push_back(exact_intensity(p1, p2, geom, geom.d0 + ell, s0, p0, beta, k_factor,
                                          background, opt));
  return gram;
}

// Windowed field integral zeta0 = Int_{xi0}^{x_star} exp[(beta-i)x] psi(x,d) dx.
inline Complex zeta0(const FieldGeometry& field, const ExperimentGeometry& geom, double d,
                     double beta, const QuadratureOptions& opt = {}) {
  geom.validate();
  if (!(d > 0.0)) throw ValidationError("zeta0: d must be positive");
  const auto cuts = psi_breakpoints(field, d);
  return kernel_integral([&](double x) { return psi(field, x, d); }, geom.xi0, geom.x_star, beta,
                         cuts, opt);
}

// Expected voltage-scan curve: the total perturbation is
// phi1(x+d) + phi2(x) + (u_e + u_i) * psi(x,d).
inline VoltageScan simulate_voltage_scan(const PerturbationProfile& p1,
                                         const PerturbationProfile& p2, const FieldGeometry& field,
                                         const ExperimentGeometry& geom, double d,
                                         std::span<const double> u_e_values, double u_i,
                                         Complex s0, Complex p0, double beta, double k_factor,
                                         double background, const QuadratureOptions& opt = {}) {
  geom.validate();
  if (!(d > 0.0)) throw ValidationError("simulate_voltage_scan: d must be positive");
  if (!(k_factor > 0.0)) throw ValidationError("simulate_voltage_scan: K must be positive");
  if (s0 == Complex(0.0, 0.0)) throw ValidationError("simulate_voltage_scan: s0 must be nonzero");

  const CompositePerturbation slits(p1, p2, d);
  std::vector<double> cuts = slits.breakpoints();
  for (double c : psi_breakpoints(field, d)) cuts.push_back(c);

  VoltageScan scan;
  scan.d = d;
  scan.x_star = geom.x_star;
  scan.u_e.assign(u_e_values.begin(), u_e_values.end());
  scan.counts.reserve(scan.u_e.size());
  for (double u_e : scan.u_e) {
    const double u = u_e + u_i;
    auto phi = [&](double x) { return slits(x) + u * psi(field, x, d); };
    const Complex a_p = first_order_amplitude(phi, s0, p0, geom.xi0 - d, geom.x_star, beta,
                                              cuts, opt);
    const double bracket_sq = std::norm(a_p) * std::exp(2.0 * beta * geom.x_star) / std::norm(s0);
    scan.counts.push_back(k_factor * bracket_sq + background);
  }
  return scan;
}

namespace detail {

// C1 cubic Hermite with Fritsch-Carlson slope limiting.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ValidationError("interpolant: need matching tables, n >= 2");
    slopes_.resize(n);
    std::vector<double> secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double h = x_[i + 1] - x_[i];
      if (!(h > 0.0)) throw ValidationError("interpolant: x must be strictly increasing");
      secant[i] = (y_[i + 1] - y_[i]) / h;
    }
    slopes_[0] = secant.front();
    slopes_[n - 1] = secant.back();
    for (std::size_t i = 1; i + 1 < n; ++i)
      slopes_[i] = (secant[i - 1] * secant[i] <= 0.0) ? 0.0 : 0.5 * (secant[i - 1] + secant[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (secant[i] == 0.0) {
        slopes_[i] = slopes_[i + 1] = 0.0;
        continue;
      }
      const double a = slopes_[i] / secant[i];
      const double b = slopes_[i + 1] / secant[i];
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double t = 3.0 / std::sqrt(r);
        slopes_[i] = t * a * secant[i];
        slopes_[i + 1] = t * b * secant[i];
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[i] * (2 * t3 - 3 * t2 + 1) + h * slopes_[i] * (t3 - 2 * t2 + t) +
           y_[i + 1] * (-2 * t3 + 3 * t2) + h * slopes_[i + 1] * (t3 - t2);
  }

 private:
  std::vector<double> x_, y_, slopes_;
};

}  // namespace detail

// Capacitor-like stray field between the electrodes: internal voltage u_i and
// the complex windowed field integral as a function of separation.
struct FcfModel {
  double u_i = 0.0;
  std::function<Complex(double)> zeta0_of_d;

  double alpha_e0(double d) const { return std::arg(zeta0_of_d(d)); }
  double theta(double d, double z20_mod) const {
    if (!(z20_mod > 0.0)) throw ValidationError("fcf theta: |z20| must be positive");
    return u_i * std::abs(zeta0_of_d(d)) / z20_mod;
  }
};

// Quadrature-backed stray-field model.
inline FcfModel make_fcf_model(const FieldGeometry& field, const ExperimentGeometry& geom,
                               double u_i, double beta, const QuadratureOptions& opt = {}) {
  FcfModel model;
  model.u_i = u_i;
  model.zeta0_of_d = [field, geom, beta, opt](double d) { return zeta0(field, geom, d, beta, opt); };
  return model;
}

// Tabulated variant for dense d grids. Nodes are doubled until sampled
// midpoints agree with direct quadrature to cache_tol.
inline FcfModel make_cached_fcf_model(const FieldGeometry& field, const ExperimentGeometry& geom,
                                      double u_i, double beta, double d_min, double d_max,
                                      std::size_t initial_nodes = 1024, double cache_tol = 1e-8,
                                      const QuadratureOptions& opt = {}) {
  if (!(d_min > 0.0 && d_max > d_min)) throw ValidationError("fcf cache: bad d range");
  std::size_t n = std::max<std::size_t>(initial_nodes, 16);
  for (;; n *= 2) {
    if (n > (1u << 18)) throw ConvergenceError("fcf cache: interpolation tolerance unreachable");
    std::vector<double> d_nodes(n), re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
      d_nodes[i] = d_min + (d_max - d_min) * static_cast<double>(i) / static_cast<double>(n - 1);
      const Complex z = zeta0(field, geom, d_nodes[i], beta, opt);
      re[i] = z.real();
      im[i] = z.imag();
    }
    detail::MonotoneCubic re_interp(d_nodes, re), im_interp(d_nodes, im);

    double worst = 0.0;
    const std::size_t probes = 64;
    for (std::size_t k = 0; k < probes; ++k) {
      const double d = d_min + (d_max - d_min) * (k + 0.5) / probes;
      const Complex direct = zeta0(field, geom, d, beta, opt);
      const Complex interp(re_interp(d), im_interp(d));
      worst = std::max(worst, std::abs(direct - interp));
    }
    if (worst <= cache_tol) {
      FcfModel model;
      model.u_i = u_i;
      model.zeta0_of_d = [re_interp, im_interp](double d) {
        return Complex(re_interp(d), im_interp(d));
      };
      return model;
    }
  }
}

// Interferogram distorted by the stray field, sampled over a grid of total
// separations d. With both slit integrals zero this reduces to the pure
// stray-field curve K * u_i^2 * |zeta0(d)|^2.
inline Interferogram fcf_distorted_interferogram(Complex z10, Complex z20, const FcfModel& fcf,
                                                 const ExperimentGeometry& geom,
                                                 std::span<const double> d_grid, double beta,
                                                 double k_factor) {
  geom.validate();
  if (!(k_factor > 0.0)) throw ValidationError("fcf_distorted_interferogram: K must be positive");
  Interferogram gram;
  gram.k_factor = k_factor;
  gram.ell.assign(d_grid.begin(), d_grid.end());
  gram.counts.reserve(d_grid.size());
  for (double d : d_grid) {
    const Complex z_e = fcf.zeta0_of_d(d);
    const VoltageScanCoeffs c = voltage_scan_coeffs(z10, z20, z_e, d, beta, k_factor);
    gram.counts.push_back(c.b0 + c.b1 * fcf.u_i + c.b2 * fcf.u_i * fcf.u_i);
  }
  return gram;
}

// Counting statistics. Expected curves pass through unchanged; Poisson draws
// have mean exposure * expected and are reproducible for a fixed seed.
inline std::vector<double> synthesize_counts(std::span<const double> expected,
                                             const NoiseSpec& noise) {
  std::vector<double> out;
  out.reserve(expected.size());
  for (double e : expected)
    if (!(e >= 0.0)) throw ValidationError("synthesize: negative expected counts");
  if (noise.kind == NoiseSpec::Kind::None) {
    out.assign(expected.begin(), expected.end());
    return out;
  }
  std::mt19937_64 rng(noise.seed);
  for (double e : expected) {
    const double mean = noise.exposure * e;
    if (mean == 0.0) {
      out.push_back(0.0);
      continue;
    }
    std::poisson_distribution<long long> draw(mean);
    out.push_back(static_cast<double>(draw(rng)));
  }
  return out;
}

inline Interferogram synthesize(const Interferogram& expected, const NoiseSpec& noise) {
  Interferogram out = expected;
  out.counts = synthesize_counts(expected.counts, noise);
  out.noise = noise;
  return out;
}

inline VoltageScan synthesize(const VoltageScan& expected, const NoiseSpec& noise) {
  VoltageScan out = expected;
  out.counts = synthesize_counts(expected.counts, noise);
  return out;
}

}  // namespace hfringe
