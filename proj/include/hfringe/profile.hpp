#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "hfringe/errors.hpp"

namespace hfringe {

// Parametric spatial shapes for a single slit perturbation phi(x). All
// coordinates are dimensionless (units of 1/k0), phi itself is dimensionless.
// Every shape evaluates to exactly zero outside its truncated support so that
// window arithmetic on the perturbation integrals stays exact.

struct GaussianShape {
  double center = 0.0;
  double sigma = 1.0;
  double peak = 0.0;
  double cutoff_sigmas = 8.0;
};

struct LorentzianShape {
  double center = 0.0;
  double gamma = 1.0;
  double peak = 0.0;
  double rel_floor = 1e-12;  // truncate where |value| < rel_floor * |peak|
};

struct TopHatShape {
  double left = 0.0;
  double right = 0.0;
  double height = 0.0;
};

struct ExpDecayShape {
  double edge = 0.0;
  double scale = 1.0;
  double peak = 0.0;
  int direction = +1;        // +1 decays toward x > edge, -1 toward x < edge
  double rel_floor = 1e-12;
};

// Sorted sample points with linear interpolation, zero outside the table.
struct TabulatedShape {
  std::vector<double> x;
  std::vector<double> value;
};

class PerturbationProfile {
 public:
  using Shape = std::variant<GaussianShape, LorentzianShape, TopHatShape, ExpDecayShape, TabulatedShape>;

  // Perturbative-regime guard rails on the peak amplitude.
  static constexpr double amplitude_warn_level = 0.05;
  static constexpr double amplitude_reject_level = 0.5;

  static PerturbationProfile gaussian(double center, double sigma, double peak, double cutoff_sigmas = 8.0) {
    if (!(sigma > 0.0)) throw ValidationError("gaussian profile: sigma must be positive");
    if (!(cutoff_sigmas > 0.0)) throw ValidationError("gaussian profile: cutoff must be positive");
    return PerturbationProfile(GaussianShape{center, sigma, peak, cutoff_sigmas});
  }

  static PerturbationProfile lorentzian(double center, double gamma, double peak, double rel_floor = 1e-12) {
    if (!(gamma > 0.0)) throw ValidationError("lorentzian profile: gamma must be positive");
    if (!(rel_floor > 0.0 && rel_floor < 1.0)) throw ValidationError("lorentzian profile: bad truncation floor");
    return PerturbationProfile(LorentzianShape{center, gamma, peak, rel_floor});
  }

  static PerturbationProfile top_hat(double left, double right, double height) {
    if (!(left <= right)) throw ValidationError("top-hat profile: left > right");
    return PerturbationProfile(TopHatShape{left, right, height});
  }

  static PerturbationProfile exp_decay(double edge, double scale, double peak, int direction = +1,
                                       double rel_floor = 1e-12) {
    if (!(scale > 0.0)) throw ValidationError("exp-decay profile: scale must be positive");
    if (direction != 1 && direction != -1) throw ValidationError("exp-decay profile: direction must be +1 or -1");
    if (!(rel_floor > 0.0 && rel_floor < 1.0)) throw ValidationError("exp-decay profile: bad truncation floor");
    return PerturbationProfile(ExpDecayShape{edge, scale, peak, direction, rel_floor});
  }

  static PerturbationProfile tabulated(std::vector<double> x, std::vector<double> value) {
    if (x.size() != value.size()) throw ValidationError("tabulated profile: size mismatch");
    if (x.size() < 2) throw ValidationError("tabulated profile: need at least two points");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) throw ValidationError("tabulated profile: x must be strictly increasing");
    return PerturbationProfile(TabulatedShape{std::move(x), std::move(value)});
  }

  static PerturbationProfile zero() { return top_hat(0.0, 0.0, 0.0); }

  double operator()(double x) const {
    if (x < lo_ || x > hi_) return 0.0;
    return std::visit([x](const auto& s) { return eval(s, x); }, shape_);
  }

  // Largest |phi| over the support.
  double peak_magnitude() const { return peak_; }
  bool amplitude_warning() const { return peak_ > amplitude_warn_level; }

  bool is_zero() const { return peak_ == 0.0 || hi_ <= lo_; }

  // Truncated support [lo, hi]; evaluation is exactly zero outside.
  std::pair<double, double> support() const { return {lo_, hi_}; }

  // Support edges plus interior kinks; quadrature panels must not straddle these.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  PerturbationProfile scaled(double factor) const {
    Shape s = shape_;
    std::visit([factor](auto& sh) { scale_amplitude(sh, factor); }, s);
    return PerturbationProfile(std::move(s));
  }

  PerturbationProfile shifted(double dx) const {
    Shape s = shape_;
    std::visit([dx](auto& sh) { shift_origin(sh, dx); }, s);
    return PerturbationProfile(std::move(s));
  }

  const Shape& shape() const { return shape_; }

 private:
  explicit PerturbationProfile(Shape shape) : shape_(std::move(shape)) {
    std::visit([this](const auto& s) { init(s); }, shape_);
    if (peak_ > amplitude_reject_level) {
      std::ostringstream msg;
      msg << "profile peak |phi| = " << peak_ << " is outside the perturbative regime (limit "
          << amplitude_reject_level << ")";
      throw ValidationError(msg.str());
    }
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
  }

  static double eval(const GaussianShape& s, double x) {
    const double t = (x - s.center) / s.sigma;
    return s.peak * std::exp(-0.5 * t * t);
  }
  static double eval(const LorentzianShape& s, double x) {
    const double t = (x - s.center) / s.gamma;
    return s.peak / (1.0 + t * t);
  }
  static double eval(const TopHatShape& s, double x) {
    return (x >= s.left && x <= s.right) ? s.height : 0.0;
  }
  static double eval(const ExpDecayShape& s, double x) {
    const double t = s.direction * (x - s.edge);
    return t >= 0.0 ? s.peak * std::exp(-t / s.scale) : 0.0;
  }
  static double eval(const TabulatedShape& s, double x) {
    auto it = std::upper_bound(s.x.begin(), s.x.end(), x);
    if (it == s.x.begin() || it == s.x.end()) {
      // Exact endpoint hits still count as inside.
      if (!s.x.empty() && x == s.x.back()) return s.value.back();
      if (!s.x.empty() && x == s.x.front()) return s.value.front();
      return 0.0;
    }
    const std::size_t i = static_cast<std::size_t>(it - s.x.begin());
    const double w = (x - s.x[i - 1]) / (s.x[i] - s.x[i - 1]);
    return s.value[i - 1] + w * (s.value[i] - s.value[i - 1]);
  }

  void init(const GaussianShape& s) {
    peak_ = std::abs(s.peak);
    lo_ = s.center - s.cutoff_sigmas * s.sigma;
    hi_ = s.center + s.cutoff_sigmas * s.sigma;
    breakpoints_ = {lo_, s.center, hi_};
  }
  void init(const LorentzianShape& s) {
    peak_ = std::abs(s.peak);
    const double halfwidth = s.gamma * std::sqrt(std::max(0.0, 1.0 / s.rel_floor - 1.0));
    lo_ = s.center - halfwidth;
    hi_ = s.center + halfwidth;
    breakpoints_ = {lo_, s.center, hi_};
  }
  void init(const TopHatShape& s) {
    peak_ = std::abs(s.height);
    lo_ = s.left;
    hi_ = s.right;
    breakpoints_ = {lo_, hi_};
  }
  void init(const ExpDecayShape& s) {
    peak_ = std::abs(s.peak);
    const double reach = s.scale * std::log(1.0 / s.rel_floor);
    lo_ = s.direction > 0 ? s.edge : s.edge - reach;
    hi_ = s.direction > 0 ? s.edge + reach : s.edge;
    breakpoints_ = {lo_, hi_};
  }
  void init(const TabulatedShape& s) {
    peak_ = 0.0;
    for (double v : s.value) peak_ = std::max(peak_, std::abs(v));
    lo_ = s.x.front();
    hi_ = s.x.back();
    breakpoints_ = s.x;
  }

  static void scale_amplitude(GaussianShape& s, double f) { s.peak *= f; }
  static void scale_amplitude(LorentzianShape& s, double f) { s.peak *= f; }
  static void scale_amplitude(TopHatShape& s, double f) { s.height *= f; }
  static void scale_amplitude(ExpDecayShape& s, double f) { s.peak *= f; }
  static void scale_amplitude(TabulatedShape& s, double f) {
    for (double& v : s.value) v *= f;
  }

  static void shift_origin(GaussianShape& s, double dx) { s.center += dx; }
  static void shift_origin(LorentzianShape& s, double dx) { s.center += dx; }
  static void shift_origin(TopHatShape& s, double dx) {
    s.left += dx;
    s.right += dx;
  }
  static void shift_origin(ExpDecayShape& s, double dx) { s.edge += dx; }
  static void shift_origin(TabulatedShape& s, double dx) {
    for (double& xi : s.x) xi += dx;
  }

  Shape shape_;
  std::vector<double> breakpoints_;
  double lo_ = 0.0, hi_ = 0.0, peak_ = 0.0;
};

// Total perturbation of two slits a distance d apart: phi1(x + d) + phi2(x),
// expressed in the frame of the second slit.
class CompositePerturbation {
 public:
  CompositePerturbation(PerturbationProfile p1, PerturbationProfile p2, double d)
      : p1_(std::move(p1)), p2_(std::move(p2)), d_(d) {
    if (!(d >= 0.0)) throw ValidationError("composite perturbation: separation d must be >= 0");
    for (double b : p1_.breakpoints()) cuts_.push_back(b - d_);
    for (double b : p2_.breakpoints()) cuts_.push_back(b);
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
  }

  double operator()(double x) const { return p1_(x + d_) + p2_(x); }

  const std::vector<double>& breakpoints() const { return cuts_; }
  double separation() const { return d_; }
  const PerturbationProfile& first() const { return p1_; }
  const PerturbationProfile& second() const { return p2_; }

 private:
  PerturbationProfile p1_, p2_;
  double d_;
  std::vector<double> cuts_;
};

inline double composite(const PerturbationProfile& p1, const PerturbationProfile& p2, double d, double x) {
  if (!(d >= 0.0)) throw ValidationError("composite: separation d must be >= 0");
  return p1(x + d) + p2(x);
}

// Inter-electrode field shape psi(x, d) created by a unit of dimensionless
// voltage. UniformGap is the wide-electrode limit: 1/d on [-d, 0].
struct UniformGap {};

// Effective gap width lambda(x) in units of 1/k0; psi = 1/lambda. The table
// describes the electrode pair at the separation it was computed for.
struct TabulatedGap {
  std::vector<double> x;
  std::vector<double> lambda;
};

struct FieldGeometry {
  std::variant<UniformGap, TabulatedGap> gap = UniformGap{};
  double u0_scale = 1.0;  // reference voltage U0, volts

  static FieldGeometry uniform(double u0 = 1.0) { return FieldGeometry{UniformGap{}, u0}; }
  static FieldGeometry tabulated(std::vector<double> x, std::vector<double> lambda, double u0 = 1.0) {
    if (x.size() != lambda.size() || x.size() < 2) throw ValidationError("field geometry: bad gap table");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) throw ValidationError("field geometry: gap table x must be increasing");
    for (double l : lambda)
      if (!(l > 0.0)) throw ValidationError("field geometry: gap width must be positive");
    return FieldGeometry{TabulatedGap{std::move(x), std::move(lambda)}, u0};
  }
};

inline double psi(const FieldGeometry& field, double x, double d) {
  if (!(d > 0.0)) throw ValidationError("psi: electrode separation d must be positive");
  if (const auto* uniform = std::get_if<UniformGap>(&field.gap)) {
    (void)uniform;
    return (x >= -d && x <= 0.0) ? 1.0 / d : 0.0;
  }
  const auto& gap = std::get<TabulatedGap>(field.gap);
  if (x < gap.x.front() || x > gap.x.back()) return 0.0;
  auto it = std::upper_bound(gap.x.begin(), gap.x.end(), x);
  if (it == gap.x.begin()) return 1.0 / gap.lambda.front();
  if (it == gap.x.end()) return 1.0 / gap.lambda.back();
  const std::size_t i = static_cast<std::size_t>(it - gap.x.begin());
  const double w = (x - gap.x[i - 1]) / (gap.x[i] - gap.x[i - 1]);
  return 1.0 / (gap.lambda[i - 1] + w * (gap.lambda[i] - gap.lambda[i - 1]));
}

inline std::vector<double> psi_breakpoints(const FieldGeometry& field, double d) {
  if (std::holds_alternative<UniformGap>(field.gap)) return {-d, 0.0};
  return std::get<TabulatedGap>(field.gap).x;
}

// Fixed frame of one run: collimator edge xi0 (frame of the first slit),
// detection point x_star (frame of the second slit), displacement d = d0 + ell.
struct ExperimentGeometry {
  double xi0 = -1.0;
  double x_star = 1.0;
  double d0 = 0.0;
  std::vector<double> ell;

  void validate() const {
    if (!(xi0 < 0.0)) throw ValidationError("geometry: collimator coordinate xi0 must be negative");
    if (!(x_star > 0.0)) throw ValidationError("geometry: detection point x_star must be positive");
    if (!(d0 >= 0.0)) throw ValidationError("geometry: constant displacement d0 must be >= 0");
    for (std::size_t i = 0; i < ell.size(); ++i) {
      if (!(ell[i] >= 0.0)) throw ValidationError("geometry: ell values must be >= 0");
      if (i > 0 && !(ell[i] > ell[i - 1])) throw ValidationError("geometry: ell values must be increasing");
    }
  }
};

// Distance from the profile's truncated support to the observation window
// edges; negative when the support pokes out of [xi0, x_star].
inline double narrowness_margin(const PerturbationProfile& profile, const ExperimentGeometry& geom) {
  const auto [lo, hi] = profile.support();
  return std::min(lo - geom.xi0, geom.x_star - hi);
}

// A profile is "narrow" for this window when a full damping length 1/beta
// separates it from both edges, which drives the boundary terms eps1, eps2
// to zero.
inline bool is_narrow(const PerturbationProfile& profile, const ExperimentGeometry& geom, double beta) {
  if (!(beta > 0.0)) throw ValidationError("is_narrow: beta must be positive");
  return narrowness_margin(profile, geom) >= 1.0 / beta;
}

}  // namespace hfringe
