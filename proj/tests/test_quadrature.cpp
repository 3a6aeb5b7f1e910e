#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hfringe/profile.hpp"
#include "hfringe/quadrature.hpp"
#include "hfringe/solver.hpp"
#include "helpers.hpp"

using namespace hfringe;
using Catch::Approx;

namespace {
constexpr double beta_h = 0.054792;  // hydrogen value used throughout

// Closed-form antiderivative of exp[(beta - i)x] * h over [a, b].
Complex top_hat_kernel_closed(double a, double b, double h, double beta) {
  const Complex k(beta, -1.0);
  return h * (std::exp(k * b) - std::exp(k * a)) / k;
}
}  // namespace

TEST_CASE("zero integrand integrates to zero") {
  const Complex z = kernel_integral([](double) { return 0.0; }, -5.0, 5.0, beta_h);
  CHECK(std::abs(z) == 0.0);
}

TEST_CASE("top-hat kernel integral matches the antiderivative") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> ad(-20.0, 5.0), wd(0.1, 30.0), hd(-0.01, 0.01);
  for (int i = 0; i < 100; ++i) {
    const double a = ad(rng), b = a + wd(rng), h = hd(rng);
    const auto profile = PerturbationProfile::top_hat(a, b, h);
    const Complex got = kernel_integral(profile, a - 1.0, b + 1.0, beta_h);
    const Complex want = top_hat_kernel_closed(a, b, h, beta_h);
    CHECK(std::abs(got - want) <= 1e-11 * std::max(1e-6, std::abs(want)));
  }
}

TEST_CASE("narrow gaussian approaches the point-source limit") {
  const double area = 1e-4, center = 1.3, sigma = 0.01;
  const double peak = area / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const auto profile = PerturbationProfile::gaussian(center, sigma, peak);
  const Complex got = kernel_integral(profile, -10.0, 10.0, beta_h);
  const Complex want = area * std::exp(Complex(beta_h, -1.0) * center);
  CHECK(std::abs(got - want) <= 1e-3 * std::abs(want));
}

TEST_CASE("gaussian kernel integral agrees with a dense Simpson oracle") {
  const auto profile = PerturbationProfile::gaussian(-1.0, 0.8, 2e-3);
  const auto [lo, hi] = profile.support();
  const Complex got = kernel_integral(profile, lo, hi, beta_h);
  const Complex want =
      testkit::simpson_kernel([&](double x) { return profile(x); }, lo, hi, beta_h, 60000);
  CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
}

TEST_CASE("long oscillatory spans stay accurate") {
  const double a = -40.0 * std::numbers::pi, b = 0.0, h = 1e-3;
  const auto profile = PerturbationProfile::top_hat(a, b, h);
  const Complex got = kernel_integral(profile, a, b, beta_h);
  const Complex want = top_hat_kernel_closed(a, b, h, beta_h);
  CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
}

TEST_CASE("interval additivity") {
  const auto profile = PerturbationProfile::gaussian(0.0, 1.0, 1e-3);
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> pd(-4.0, 4.0);
  for (int i = 0; i < 50; ++i) {
    double a = pd(rng), b = pd(rng), c = pd(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const Complex whole = kernel_integral(profile, a, c, beta_h);
    const Complex parts =
        kernel_integral(profile, a, b, beta_h) + kernel_integral(profile, b, c, beta_h);
    CHECK(std::abs(whole - parts) <= 1e-11 * (1.0 + std::abs(whole)));
  }
}

TEST_CASE("reversed bounds are rejected") {
  CHECK_THROWS_AS(kernel_integral([](double) { return 1e-3; }, 1.0, -1.0, beta_h),
                  ValidationError);
}

TEST_CASE("segment budget exhaustion raises a convergence error") {
  QuadratureOptions opt;
  opt.rel_tol = 1e-16;  // unreachable
  opt.max_segments = 8;
  const auto profile = PerturbationProfile::gaussian(0.0, 1.0, 1e-3);
  CHECK_THROWS_AS(kernel_integral([&](double x) { return profile(x); }, -8.0, 8.0, beta_h,
                                  profile.breakpoints(), opt),
                  ConvergenceError);
}
