#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "hfringe/core.hpp"
#include "hfringe/errors.hpp"

namespace hfringe {

// Local-error controls for the amplitude integrator. max_step keeps at least
// 16 accepted steps per unit-frequency oscillation period.
struct StepControl {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double max_step = 2.0 * std::numbers::pi / 16.0;
  double initial_step = 0.0;  // 0 = pick automatically
  long max_steps = 2000000;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
};

struct TwoLevelResult {
  AmplitudePair amplitudes;
  IntegrationStats stats;
};

namespace detail {

using State = std::array<Complex, 2>;  // {A_s, A_p}

inline State two_level_rhs(double phi, double beta, const State& y) {
  const Complex i_unit(0.0, 1.0);
  return State{i_unit * phi * y[1], i_unit * phi * y[0] + Complex(-beta, 1.0) * y[1]};
}

}  // namespace detail

// Integrates dA_s/dx = i*phi*A_p, dA_p/dx = i*phi*A_s + (i - beta)*A_p from
// x0 to x_star with an adaptive embedded Runge-Kutta pair (order 5(4)).
// `cuts` lists x values where phi is not smooth; steps never cross them.
// `observer`, when set, is called at x0 and after every accepted step.
template <class Phi>
TwoLevelResult integrate_two_level(Phi&& phi, Complex s0, Complex p0, double x0, double x_star,
                                   double beta, const StepControl& ctl = {},
                                   std::span<const double> cuts = {},
                                   const std::function<void(double, const AmplitudePair&)>& observer = nullptr) {
  if (!(x0 < x_star)) throw ValidationError("integrate_two_level: x0 must be below x_star");
  if (!(beta > 0.0)) throw ValidationError("integrate_two_level: beta must be positive");

  // Dormand-Prince 5(4) tableau.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<double> stops{x_star};
  for (double c : cuts)
    if (c > x0 && c < x_star) stops.push_back(c);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  detail::State y{s0, p0};
  double x = x0;
  IntegrationStats stats;
  if (observer) observer(x, AmplitudePair{y[0], y[1]});

  double h = ctl.initial_step > 0.0 ? ctl.initial_step : ctl.max_step / 8.0;
  h = std::min(h, ctl.max_step);

  for (double stop : stops) {
    while (x < stop) {
      if (stats.accepted + stats.rejected > ctl.max_steps)
        throw ConvergenceError("integrate_two_level: step budget exhausted");
      h = std::min({h, ctl.max_step, stop - x});
      if (!(h > std::abs(x) * 1e-15 + 1e-300)) {
        std::ostringstream msg;
        msg << "integrate_two_level: step size underflow at x = " << x << " (h = " << h << ")";
        throw ConvergenceError(msg.str());
      }

      const detail::State k1 = detail::two_level_rhs(phi(x), beta, y);
      auto stage = [&](double frac, const detail::State& incr) {
        detail::State s{y[0] + h * incr[0], y[1] + h * incr[1]};
        return detail::two_level_rhs(phi(x + frac * h), beta, s);
      };
      const detail::State k2 = stage(c2, {a21 * k1[0], a21 * k1[1]});
      const detail::State k3 = stage(c3, {a31 * k1[0] + a32 * k2[0], a31 * k1[1] + a32 * k2[1]});
      const detail::State k4 = stage(c4, {a41 * k1[0] + a42 * k2[0] + a43 * k3[0],
                                          a41 * k1[1] + a42 * k2[1] + a43 * k3[1]});
      const detail::State k5 = stage(c5, {a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0],
                                          a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1]});
      const detail::State k6 = stage(1.0, {a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0],
                                           a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1]});

      detail::State y_new;
      for (int i = 0; i < 2; ++i)
        y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      const detail::State k7 = detail::two_level_rhs(phi(x + h), beta, y_new);

      double err = 0.0;
      for (int i = 0; i < 2; ++i) {
        const Complex e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double scale = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double ratio = std::abs(e) / scale;
        err += ratio * ratio;
      }
      err = std::sqrt(0.5 * err);

      if (err <= 1.0) {
        x += h;
        y = y_new;
        ++stats.accepted;
        if (observer) observer(x, AmplitudePair{y[0], y[1]});
      } else {
        ++stats.rejected;
      }
      const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(factor, 0.2, 5.0);
    }
    x = stop;  // land exactly on each cut
  }

  return TwoLevelResult{AmplitudePair{y[0], y[1]}, stats};
}

}  // namespace hfringe
