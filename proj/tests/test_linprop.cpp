#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tsbl/linprop.hpp"
#include "tsbl/stability.hpp"

using namespace tsbl;

namespace {
GridSpec base() {
  GridSpec s;
  s.N = 160;
  s.L = 3.0;
  return s;
}
}  // namespace

TEST_CASE("eigenmode grows at exactly Re lambda") {
  const double nu = 1e-7, a = 0.184;
  const auto p = profiles::erf_profile();
  const auto g = build_grid(resolved_spec(base(), nu));
  const auto r = os_spectrum(p, a, nu, g);
  REQUIRE(r.leading());
  const auto& m = *r.leading();
  const double T = 5.0 / m.lambda.real();
  PropagateOptions o;
  o.snapshots = 11;
  o.params.nu = nu;
  const ModeOperator op(p, a, nu, g);
  const auto run = propagate(op, m.omega, T, default_dt(p, a, nu), o);
  for (std::size_t k = 0; k < run.t.size(); ++k)
    CHECK(run.norm[k] / run.norm[0] ==
          doctest::Approx(std::exp(m.lambda.real() * run.t[k])).epsilon(1e-3));

  const double g0 = m.lambda.real() * std::pow(nu, -0.25);
  const auto fit = verify_semigroup_bound(run, 1.2 * g0);
  CHECK(std::isfinite(fit.C));
  CHECK(fit.C < 5.0 * fit.ratio[0]);
  CHECK(fit.t_at_max == doctest::Approx(0.0));
}

TEST_CASE("heat flow when U = 0 and alpha = 0") {
  const ShearProfile zero("zero", [](double) { return Jet{}; }, 0.0, 1.0);
  const double nu = 1e-4;
  const auto g = build_grid(base());
  const auto w0 = sample(g, [](double z) { return z * std::exp(-z); }, 0.0, 0.0);
  PropagateOptions o;
  o.snapshots = 21;
  const auto run = propagate(zero, w0, 0.0, nu, 200.0, 0.5, o);
  double prev = 1e300;
  for (const auto& w : run.omega) {
    double s = 0.0;
    for (Eigen::Index k = 1; k < w.size(); ++k) s = std::max(s, std::abs(w.values[k]));
    CHECK(s <= prev * (1 + 1e-9));
    prev = s;
  }
}

TEST_CASE("diffusive regime: traces decay and the constant is of order one") {
  const double nu = 1e-4, a = 20.0;
  const auto p = profiles::erf_profile();
  const auto g = build_grid(base());
  const auto w0 = sample(g, [](double z) { return std::exp(-z) * z; }, 0.0, a);
  PropagateOptions o;
  o.snapshots = 21;
  o.params.nu = nu;
  const auto run = propagate(p, w0, a, nu, 50.0, 0.0, o);
  CHECK(run.norm.back() < run.norm.front());
  CHECK(run.dz_norm.back() < run.dz_norm.front());
  const auto fit = verify_semigroup_bound(run, 0.0);
  CHECK(fit.C <= 1.5);
  const auto fd = verify_derivative_bound(run, 0.0);
  CHECK(std::isfinite(fd.C));
}

TEST_CASE("sublayer data: derivative norm scales like nu^(-1/8)") {
  const double nu = 1e-8;
  const double d = std::pow(nu, 0.125);
  GridSpec s = resolved_spec(base(), nu);
  const auto g = build_grid(s);
  BLNormParams q;
  q.nu = nu;
  // compatible with no-slip: int exp(-a z) w dz = 0
  const double a = 0.1;
  const double c = (a + 0.5 / d) / (a + 1 / d);
  const auto w0 = sample(g, [&](double z) { return std::exp(-z / d) - c * std::exp(-0.5 * z / d); }, 0.0, a);
  PropagateOptions o;
  o.snapshots = 2;
  o.params = q;
  const auto run = propagate(profiles::erf_profile(), w0, a, nu, 1e-3, 0.0, o);
  const double r = run.dz_norm[0] / run.norm[0] * d;
  CHECK(r > 0.2);
  CHECK(r < 5.0);
}
