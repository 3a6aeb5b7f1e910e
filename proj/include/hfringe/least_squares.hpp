#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hfringe/errors.hpp"
#include "hfringe/linalg.hpp"

namespace hfringe {

struct LeastSquaresOptions {
  int max_iterations = 400;
  double gradient_tol = 1e-8;
  double step_tol = 1e-14;
  double lambda0 = 1e-3;
  double lambda_up = 8.0;
  double lambda_down = 0.125;
};

struct ConvergenceReport {
  bool converged = false;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();
  double condition_number = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> accepted_costs;  // monotone by construction
  std::vector<std::string> warnings;
  std::string message;
};

namespace detail {

// Damped (Levenberg-Marquardt) weighted least squares with an analytic
// Jacobian callback. `model` fills f(params) and, when j != nullptr, the
// row-major Jacobian df_i/dp_j at every data point. Minimizes
// sum_i w_i (y_i - f_i)^2. The objective of accepted iterates never
// increases; a step is accepted only when the cost drops.
inline ConvergenceReport lm_fit(
    const std::function<void(std::span<const double>, std::span<double>, double*)>& model,
    std::vector<double>& params, std::span<const double> y, std::span<const double> w,
    std::vector<double>* covariance_out = nullptr, const LeastSquaresOptions& opt = {}) {
  const std::size_t n = y.size();
  const std::size_t p = params.size();
  if (n < p) throw ValidationError("lm_fit: fewer points than parameters");

  std::vector<double> f(n), jac(n * p);
  auto cost_of = [&](std::span<const double> q, std::vector<double>& f_out) {
    model(q, f_out, nullptr);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f_out[i];
      const double wi = w.empty() ? 1.0 : w[i];
      c += wi * r * r;
    }
    return c;
  };

  ConvergenceReport report;
  double cost = cost_of(params, f);
  report.accepted_costs.push_back(cost);
  double lambda = opt.lambda0;

  std::vector<double> jtj(p * p), jtr(p), trial(p), f_trial(n);
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    report.iterations = iter;
    model(params, f, jac.data());

    std::fill(jtj.begin(), jtj.end(), 0.0);
    std::fill(jtr.begin(), jtr.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w.empty() ? 1.0 : w[i];
      const double r = y[i] - f[i];
      for (std::size_t a = 0; a < p; ++a) {
        const double ja = jac[i * p + a];
        jtr[a] += wi * ja * r;
        for (std::size_t b = a; b < p; ++b) jtj[a * p + b] += wi * ja * jac[i * p + b];
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];

    double gnorm = 0.0;
    for (double g : jtr) gnorm = std::max(gnorm, std::abs(g));
    report.gradient_norm = gnorm;
    if (gnorm < opt.gradient_tol) {
      report.converged = true;
      report.message = "gradient below tolerance";
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
      std::vector<double> damped = jtj;
      for (std::size_t a = 0; a < p; ++a) {
        const double diag = jtj[a * p + a];
        damped[a * p + a] += lambda * (diag > 0.0 ? diag : 1.0);
      }
      std::vector<double> delta;
      try {
        delta = solve_dense(damped, jtr, p);
      } catch (const DegenerateError&) {
        lambda *= opt.lambda_up;
        continue;
      }
      double step_size = 0.0, param_size = 0.0;
      for (std::size_t a = 0; a < p; ++a) {
        trial[a] = params[a] + delta[a];
        step_size += delta[a] * delta[a];
        param_size += params[a] * params[a];
      }
      if (step_size <= opt.step_tol * opt.step_tol * (1.0 + param_size)) {
        report.converged = true;
        report.message = "step below tolerance";
        stepped = true;
        break;
      }
      const double trial_cost = cost_of(trial, f_trial);
      if (trial_cost < cost) {
        params = trial;
        cost = trial_cost;
        report.accepted_costs.push_back(cost);
        lambda = std::max(lambda * opt.lambda_down, 1e-14);
        stepped = true;
      } else {
        lambda *= opt.lambda_up;
      }
    }
    if (report.converged) break;
    if (!stepped) {
      report.message = "no descent direction found";
      break;
    }
  }
  if (!report.converged && report.message.empty())
    report.message = "iteration budget exhausted";

  // Final curvature for covariance / conditioning diagnostics.
  model(params, f, jac.data());
  std::fill(jtj.begin(), jtj.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) jtj[a * p + b] += wi * jac[i * p + a] * jac[i * p + b];
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];
  report.condition_number = condition_number(jtj, p);
  if (covariance_out) {
    try {
      *covariance_out = invert_dense(jtj, p);
    } catch (const DegenerateError&) {
      covariance_out->assign(p * p, std::numeric_limits<double>::quiet_NaN());
      report.warnings.push_back("singular curvature; covariance unavailable");
    }
  }
  return report;
}

}  // namespace detail
}  // namespace hfringe
