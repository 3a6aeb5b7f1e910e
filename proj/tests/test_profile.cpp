#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hfringe/profile.hpp"
#include "helpers.hpp"

using namespace hfringe;
using Catch::Approx;

TEST_CASE("top hat evaluates inside and outside its support") {
  const auto p = PerturbationProfile::top_hat(-1.0, 0.0, 0.001);
  CHECK(p(-0.5) == 0.001);
  CHECK(p(0.5) == 0.0);
  CHECK(p(-1.0) == 0.001);
  CHECK(p(0.0) == 0.001);
}

TEST_CASE("gaussian value and truncation") {
  const auto p = PerturbationProfile::gaussian(0.0, 0.2, 1e-3);
  CHECK(p(0.2) == Approx(1e-3 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(p(0.2) == Approx(6.0653e-4).epsilon(1e-4));
  CHECK(p(0.2 * 8.0 + 1e-9) == 0.0);  // beyond the 8-sigma cutoff
  const auto [lo, hi] = p.support();
  CHECK(lo == Approx(-1.6));
  CHECK(hi == Approx(1.6));
}

TEST_CASE("lorentzian and exponential-edge profiles") {
  const auto lor = PerturbationProfile::lorentzian(1.0, 0.3, 2e-3);
  CHECK(lor(1.0) == Approx(2e-3));
  CHECK(lor(1.3) == Approx(1e-3));
  CHECK(lor.support().second > 1.0 + 0.3 * 1e5);  // heavy tails, wide truncation

  const auto decay = PerturbationProfile::exp_decay(0.0, 0.5, 1e-3, +1);
  CHECK(decay(-0.1) == 0.0);
  CHECK(decay(0.0) == Approx(1e-3));
  CHECK(decay(0.5) == Approx(1e-3 * std::exp(-1.0)));
  const auto mirrored = PerturbationProfile::exp_decay(0.0, 0.5, 1e-3, -1);
  CHECK(mirrored(0.1) == 0.0);
  CHECK(mirrored(-0.5) == Approx(1e-3 * std::exp(-1.0)));
}

TEST_CASE("tabulated profile interpolates linearly and validates ordering") {
  const auto tab = PerturbationProfile::tabulated({0.0, 1.0, 2.0}, {0.0, 1e-3, 0.0});
  CHECK(tab(0.5) == Approx(0.5e-3));
  CHECK(tab(1.5) == Approx(0.5e-3));
  CHECK(tab(2.5) == 0.0);
  CHECK(tab(-0.5) == 0.0);
  CHECK_THROWS_AS(PerturbationProfile::tabulated({0.0, 0.0}, {1e-3, 1e-3}), ValidationError);
  CHECK_THROWS_AS(PerturbationProfile::tabulated({0.0}, {1e-3}), ValidationError);
}

TEST_CASE("perturbative-regime amplitude guard") {
  CHECK_THROWS_AS(PerturbationProfile::gaussian(0.0, 1.0, 0.6), ValidationError);
  CHECK_THROWS_AS(PerturbationProfile::top_hat(0.0, 1.0, -0.7), ValidationError);
  CHECK(PerturbationProfile::gaussian(0.0, 1.0, 0.1).amplitude_warning());
  CHECK_FALSE(PerturbationProfile::gaussian(0.0, 1.0, 0.01).amplitude_warning());
}

TEST_CASE("composite of two slits") {
  const double h = 0.002;
  const auto p = PerturbationProfile::top_hat(-0.5, 0.5, h);
  CHECK(composite(p, p, 0.0, 0.0) == Approx(2.0 * h));
  CHECK(composite(p, p, 10.0, 0.0) == Approx(h));  // only the second slit contributes
  CHECK_THROWS_AS(composite(p, p, -1.0, 0.0), ValidationError);

  const auto g1 = PerturbationProfile::gaussian(0.0, 0.3, 1e-3);
  const auto g2 = PerturbationProfile::gaussian(0.2, 0.4, 2e-3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> xd(-5.0, 5.0), dd(0.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double x = xd(rng), d = dd(rng);
    CHECK(composite(g1, g2, d, x) == Approx(g1(x + d) + g2(x)).margin(1e-18));
    const CompositePerturbation total(g1, g2, d);
    CHECK(total(x) == Approx(g1(x + d) + g2(x)).margin(1e-18));
  }
}

TEST_CASE("composite is linear in each amplitude") {
  const auto g1 = PerturbationProfile::gaussian(-0.4, 0.3, 1e-3);
  const auto g2 = PerturbationProfile::gaussian(0.2, 0.25, 2e-3);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> xd(-3.0, 3.0), sd(0.1, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double x = xd(rng), s = sd(rng);
    CHECK(composite(g1.scaled(s), g2, 1.0, x) ==
          Approx(s * g1(x + 1.0) + g2(x)).margin(1e-18));
  }
}

TEST_CASE("uniform gap field shape") {
  const FieldGeometry field = FieldGeometry::uniform();
  CHECK(psi(field, -1.0, 2.0) == Approx(0.5));
  CHECK(psi(field, 1.0, 2.0) == 0.0);
  CHECK(psi(field, -2.5, 2.0) == 0.0);
  CHECK_THROWS_AS(psi(field, 0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(psi(field, 0.0, -1.0), ValidationError);

  // Unit normalization over [-d, 0] for any d.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dd(0.05, 40.0);
  for (int i = 0; i < 50; ++i) {
    const double d = dd(rng);
    const double integral =
        testkit::simpson([&](double x) { return psi(field, x, d); }, -d, 0.0, 4096);
    CHECK(integral == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tabulated gap") {
  const FieldGeometry field = FieldGeometry::tabulated({-2.0, 0.0}, {4.0, 2.0});
  CHECK(psi(field, -1.0, 1.5) == Approx(1.0 / 3.0));
  CHECK(psi(field, 0.5, 1.5) == 0.0);
  CHECK_THROWS_AS(FieldGeometry::tabulated({0.0, 1.0}, {1.0, -1.0}), ValidationError);
}

TEST_CASE("experiment geometry validation") {
  ExperimentGeometry geom{-10.0, 10.0, 0.0, {0.0, 1.0}};
  CHECK_NOTHROW(geom.validate());
  geom.xi0 = 1.0;
  CHECK_THROWS_AS(geom.validate(), ValidationError);
  geom.xi0 = -10.0;
  geom.ell = {1.0, 0.5};
  CHECK_THROWS_AS(geom.validate(), ValidationError);
  geom.ell = {-0.5};
  CHECK_THROWS_AS(geom.validate(), ValidationError);
}

TEST_CASE("narrowness against the observation window") {
  const DimensionlessConstants c{2858.5, 0.054792, 3.1924e-3};
  ExperimentGeometry geom{-25.0, 25.0, 0.0, {}};
  const auto narrow = PerturbationProfile::gaussian(0.0, 0.05, 1e-3);
  CHECK(is_narrow(narrow, geom, c.beta));
  CHECK(narrowness_margin(narrow, geom) == Approx(25.0 - 0.4));
  const auto broad = PerturbationProfile::gaussian(0.0, 3.0, 1e-3);
  CHECK_FALSE(is_narrow(broad, geom, c.beta));  // support reaches within 1/beta of the edges
}

TEST_CASE("profile shift and zero profile") {
  const auto g = PerturbationProfile::gaussian(0.0, 0.3, 1e-3);
  const auto shifted = g.shifted(2.0);
  CHECK(shifted(2.0) == Approx(g(0.0)));
  CHECK(PerturbationProfile::zero().is_zero());
  CHECK(PerturbationProfile::zero()(0.0) == 0.0);
}
