#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "tsbl/numerics.hpp"
#include "tsbl/profiles.hpp"

using namespace tsbl;

TEST_CASE("exponential profile passes with U'(0) = 1") {
  const auto r = validate_profile(profiles::exponential(0.9));
  CHECK(r.pass);
  CHECK(r.dU0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.U0 == doctest::Approx(0.0));
}

TEST_CASE("z exp(-z) fails monotonicity beyond z = 1") {
  const auto r = validate_profile(profiles::z_exp());
  CHECK_FALSE(r.pass);
  CHECK(r.min_dU < 0);
  CHECK(r.min_dU_at > 1.0);
}

TEST_CASE("erf profile passes; weighted sup agrees with dense sampling") {
  const auto p = profiles::erf_profile(0.9);
  const auto r = validate_profile(p);
  CHECK(r.pass);
  double dense = 0.0;
  for (double z : linspace(0.0, r.z_max, 100001))
    dense = std::max(dense, std::abs(p.U(z) - 1.0) * std::exp(0.9 * z));
  CHECK(r.weighted_sup[0] == doctest::Approx(dense).epsilon(1e-3));
}

TEST_CASE("heat evolution") {
  const auto p = profiles::erf_profile();
  for (double z : {0.0, 0.3, 1.0, 4.0, 11.0}) {
    CHECK(heat_evolve(p, 0.0, z) == doctest::Approx(p.U(z)).epsilon(1e-12));
    for (double s : {0.5, 2.0, 10.0})
      CHECK(heat_evolve(p, s, z) ==
            doctest::Approx(std::erf(z / (2 * std::sqrt(1 + s)))).epsilon(1e-8));
  }
  // second derivative by central differences
  const double s = 1.5, z = 1.2, h = 1e-3;
  const double fd = (heat_evolve(p, s, z + h) - 2 * heat_evolve(p, s, z) + heat_evolve(p, s, z - h)) / (h * h);
  CHECK(heat_evolve_d2(p, s, z) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("stationary forcing") {
  const auto e = profiles::exponential();
  const auto f = profiles::erf_profile();
  for (double z : {0.0, 0.5, 2.0, 7.0}) {
    CHECK(stationary_forcing(e, z) == doctest::Approx(std::exp(-z)).epsilon(1e-12));
    CHECK(stationary_forcing(f, z) ==
          doctest::Approx(z / (2 * std::sqrt(std::numbers::pi)) * std::exp(-z * z / 4)).epsilon(1e-12));
  }
  const auto lin = profiles::tabulated("lin", {0, 1, 2, 3}, {0, 0.25, 0.5, 0.75}, 1.0, 1.0);
  CHECK(std::abs(stationary_forcing(lin, 1.5)) < 1e-12);
}
