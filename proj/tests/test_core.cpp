#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hfringe/core.hpp"

using namespace hfringe;
using Catch::Approx;

TEST_CASE("derived constants match extended-precision arithmetic") {
  const BeamParameters beam{2.0e6};
  const DimensionlessConstants c = derive_constants(beam);

  // Long-double evaluation of the defining formulas.
  const long double pi_l = 3.14159265358979323846L;
  const long double omega0 = 2.0L * pi_l * 909.89e6L;
  const long double beta_ref = 1.0L / (2.0L * omega0 * 1.5962e-9L);
  const long double k0_ref = omega0 / 2.0e6L;
  const long double range_ref = 1.5962e-9L * 2.0e6L;

  CHECK(c.beta == Approx(static_cast<double>(beta_ref)).epsilon(1e-14));
  CHECK(c.k0 == Approx(static_cast<double>(k0_ref)).epsilon(1e-14));
  CHECK(c.range == Approx(static_cast<double>(range_ref)).epsilon(1e-14));

  CHECK(std::abs(c.beta - 0.054792) < 1e-6);
  CHECK(std::abs(c.range - 3.1924e-3) < 1e-12);
  CHECK(std::abs(c.k0 - 2858.5) < 0.1);
}

TEST_CASE("k0 * range = 1/(2 beta) for randomized beams") {
  std::mt19937 rng(991);
  std::uniform_real_distribution<double> v(5e4, 5e6), nu(1e8, 5e9), tau(1e-10, 1e-8);
  for (int i = 0; i < 200; ++i) {
    const BeamParameters beam{v(rng), nu(rng), tau(rng)};
    const DimensionlessConstants c = derive_constants(beam);
    CHECK(c.k0 * c.range == Approx(1.0 / (2.0 * c.beta)).epsilon(1e-12));
  }
}

TEST_CASE("dimensionless conversion") {
  const DimensionlessConstants c = derive_constants(BeamParameters{2.0e6});

  CHECK(to_dimensionless(0.0, c) == 0.0);
  CHECK(to_dimensionless(2.0 * std::numbers::pi / c.k0, c) ==
        Approx(2.0 * std::numbers::pi).epsilon(1e-14));
  CHECK(to_dimensionless(1e-3, c) == Approx(2.8585).epsilon(1e-4));

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> z(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double zi = z(rng);
    CHECK(from_dimensionless(to_dimensionless(zi, c), c) == Approx(zi).epsilon(1e-12));
  }
}

TEST_CASE("beam validation") {
  CHECK_THROWS_AS(derive_constants(BeamParameters{-1.0}), ValidationError);
  CHECK_THROWS_AS(derive_constants(BeamParameters{0.0}), ValidationError);
  CHECK_THROWS_AS(derive_constants(BeamParameters{2.0e6, -1.0}), ValidationError);
  CHECK_THROWS_AS(derive_constants(BeamParameters{2.0e6, 909.89e6, 0.0}), ValidationError);
  // Faster than 2% of c is rejected, above 1% only warned about.
  CHECK_THROWS_AS(derive_constants(BeamParameters{0.021 * speed_of_light}), ValidationError);
  CHECK(validate(BeamParameters{0.015 * speed_of_light}).size() == 1);
  CHECK(validate(BeamParameters{2.0e6}).empty());
}

TEST_CASE("amplitude pair norm") {
  const AmplitudePair pair{{0.6, 0.0}, {0.0, 0.8}};
  CHECK(pair.norm_sq() == Approx(1.0));
}
