#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tsbl/errors.hpp"
#include "tsbl/stability.hpp"

using namespace tsbl;

namespace {
GridSpec base() {
  GridSpec s;
  s.N = 160;
  s.L = 3.0;
  return s;
}
const double kNu = 1e-7;
const double kAlpha = 0.184;
}  // namespace

TEST_CASE("Rayleigh: monotone profile stable, inflected control unstable") {
  const auto g = build_grid(base());
  CHECK(rayleigh_spectrum(profiles::exponential(), 0.5, g).stable());
  bool any = false;
  for (double a : {0.3, 0.6, 1.0}) any = any || !rayleigh_spectrum(profiles::inflected(), a, g).stable();
  CHECK(any);
}

TEST_CASE("Orr-Sommerfeld: growing mode of the erf layer") {
  const auto g = build_grid(resolved_spec(base(), kNu));
  const auto r = os_spectrum(profiles::erf_profile(), kAlpha, kNu, g);
  REQUIRE(r.leading());
  const auto& m = *r.leading();
  CHECK(m.unstable());
  CHECK(m.c.imag() > 0);
  CHECK(std::abs(m.lambda - cplx(0, -kAlpha) * m.c) < 1e-14);
  for (const auto& x : r.modes) CHECK(x.residual <= 1e-6);
  for (std::size_t i = 1; i < r.modes.size(); ++i)
    CHECK(r.modes[i - 1].lambda.real() >= r.modes[i].lambda.real());

  GridSpec fine = resolved_spec(base(), kNu);
  fine.N = fine.N * 3 / 2;
  const auto rf = os_spectrum(profiles::erf_profile(), kAlpha, kNu, build_grid(fine));
  REQUIRE(rf.leading());
  CHECK(std::abs(rf.leading()->lambda - m.lambda) / std::abs(m.lambda) < 1e-4);
}

TEST_CASE("under-resolved sublayer is refused") {
  GridSpec s;
  s.N = 24;
  s.L = 3.0;
  CHECK_THROWS_AS(os_spectrum(profiles::erf_profile(), 0.1, 1e-12, build_grid(s)), NumericalError);
}

TEST_CASE("max growth") {
  const auto none = max_growth(profiles::erf_profile(), 1.0, 0.25, 4.0, base());
  CHECK_FALSE(none.alpha_star);
  CHECK(none.lambda_star == 0.0);

  const auto [lo, hi] = default_alpha_range(kNu);
  const auto mg = max_growth(profiles::erf_profile(), kNu, lo, hi, base());
  REQUIRE(mg.alpha_star);
  CHECK(mg.lambda_star > 0);
  const double a8 = std::pow(kNu, 0.125);
  CHECK(*mg.alpha_star >= 0.5 * a8);
  CHECK(*mg.alpha_star <= 2.0 * a8);
}

TEST_CASE("critical Reynolds number and the band below it") {
  const auto p = profiles::erf_profile();
  const auto rc = critical_reynolds(p, 200.0, 2e4, base());
  REQUIRE(rc);
  CHECK(*rc > 1000.0);
  CHECK(*rc < 2500.0);
  const auto nc = trace_neutral_curve(p, {0.5 * *rc}, base());
  CHECK_FALSE(nc.points[0].alpha_low);
  CHECK_FALSE(nc.points[0].alpha_up);
}

TEST_CASE("growing-mode family") {
  const auto g = build_grid(resolved_spec(base(), kNu));
  const auto r = os_spectrum(profiles::erf_profile(), kAlpha, kNu, g);
  REQUIRE(r.leading());
  const auto z = build_growing_mode(*r.leading(), 0.0);
  CHECK(z.omega[0].values.cwiseAbs().maxCoeff() == 0.0);
  const auto f = build_growing_mode(*r.leading(), 1e-3, 0.7);
  REQUIRE(f.omega.size() == 2);
  CHECK((f.omega[1].values - f.omega[0].values.conjugate()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(*f.omega[1].alpha == -*f.omega[0].alpha);
}

TEST_CASE("mode structure at nu = 1e-6, alpha = nu^(1/8)") {
  const double nu = 1e-6;
  const double a = std::pow(nu, 0.125);
  const auto p = profiles::erf_profile();
  const auto r = os_spectrum(p, a, nu, build_grid(resolved_spec(base(), nu)));
  const EigenSolution* wall = nullptr;
  for (const auto& m : r.modes)
    if (m.c.real() < 0.9) {
      wall = &m;
      break;
    }
  REQUIRE(wall);
  const auto s = mode_structure(p, *wall);
  REQUIRE(s.ok);
  CHECK(s.delta_bl_fit / s.nu18 >= 0.3);
  CHECK(s.delta_bl_fit / s.nu18 <= 3.0);
  CHECK(s.delta_cr_fit / s.delta_cr_pred >= 0.3);
  CHECK(s.delta_cr_fit / s.delta_cr_pred <= 3.0);
}
