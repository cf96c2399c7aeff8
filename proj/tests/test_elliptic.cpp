#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "tsbl/elliptic.hpp"
#include "tsbl/errors.hpp"

using namespace tsbl;

namespace {
GridPtr grid(int N = 160) {
  GridSpec s;
  s.N = N;
  s.L = 3.0;
  return build_grid(s);
}
double max_err(const GridFunction& f, const std::function<cplx(double)>& exact) {
  double e = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k)
    if (f.grid->is_finite_node(k)) e = std::max(e, std::abs(f.values[k] - exact(f.grid->z()[k])));
  return e;
}
BLNormParams layer(double delta, double beta = 0.25) {
  BLNormParams q;
  q.beta = beta;
  q.nu = 1e-8;
  q.gamma = delta / std::pow(q.nu, 0.125);
  return q;
}
}  // namespace

TEST_CASE("zero data gives zero stream function") {
  const auto g = grid();
  const auto s = solve_halfline(sample(g, [](double) { return 0.0; }), 1.0);
  CHECK(s.oper.phi.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.green.phi.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed form: phi'' - phi = exp(-z)") {
  const auto g = grid();
  const auto s = solve_halfline(sample(g, [](double z) { return std::exp(-z); }), 1.0);
  auto exact = [](double z) { return -0.5 * z * std::exp(-z); };
  CHECK(max_err(s.oper.phi, exact) < 1e-8);
  CHECK(max_err(s.green.phi, exact) < 1e-8);
  CHECK(s.agreement < 1e-8);
  CHECK_THROWS_AS(solve_halfline(s.oper.phi, 0.0), DomainError);
}

TEST_CASE("A1 constant: zero, homogeneity, spread over alpha") {
  const auto g = grid();
  CHECK(check_estimate_A1(sample(g, [](double) { return 0.0; }), 1.0, 0.25).C == 0.0);
  const auto f = sample(g, [](double z) { return std::exp(-z); });
  const auto f10 = sample(g, [](double z) { return 10.0 * std::exp(-z); });
  CHECK(check_estimate_A1(f10, 2.0, 0.25).C ==
        doctest::Approx(check_estimate_A1(f, 2.0, 0.25).C).epsilon(1e-12));
  double lo = 1e300, hi = 0.0;
  for (double a : {1.0, 2.0, 4.0, 8.0}) {
    const double C = check_estimate_A1(f, a, 0.25).C;
    lo = std::min(lo, C);
    hi = std::max(hi, C);
  }
  CHECK(hi / lo <= 2.0);
}

TEST_CASE("A2 constant over sublayer widths") {
  const auto g0 = grid();
  CHECK(check_estimate_A2(sample(g0, [](double) { return 0.0; }), 1.0, layer(0.1)).C == 0.0);
  double lo = 1e300, hi = 0.0;
  for (double d : {0.2, 0.1, 0.05}) {
    GridSpec s;
    s.L = 3.0;
    s.N = required_N(s, d, 12);
    const auto g = build_grid(s);
    const auto f = sample(g, [&](double z) { return std::exp(-z / d) * std::exp(-0.25 * z) / d; });
    const double C = check_estimate_A2(f, 1.0, layer(d)).C;
    CHECK(std::isfinite(C));
    lo = std::min(lo, C);
    hi = std::max(hi, C);
  }
  CHECK(hi / lo <= 2.0);
}

TEST_CASE("A2bis constant stays bounded") {
  const double d = 0.1;
  GridSpec s;
  s.L = 3.0;
  s.N = required_N(s, d, 12);
  const auto g = build_grid(s);
  CHECK(check_estimate_A2bis(sample(g, [](double) { return 0.0; }), 1.0, layer(d)).C == 0.0);
  const auto f = sample(g, [&](double z) { return std::exp(-z / d) / d; });
  for (double a : {1.0, 2.0, 4.0}) {
    const auto c = check_estimate_A2bis(f, a, layer(d));
    CHECK(std::isfinite(c.C));
    CHECK(c.C < 10.0);
  }
}

TEST_CASE("2D inversion") {
  const auto g = grid();
  const auto q = layer(0.1);
  const auto zero = sample(g, [](double) { return 0.0; }, 0.0, 1.0);
  const auto z = invert_laplace_2d({zero}, q);
  CHECK(z.v1[0].values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.v2[0].values.cwiseAbs().maxCoeff() == 0.0);

  const auto w = sample(g, [](double z) { return std::exp(-z); }, 0.0, 1.0);
  const auto r = invert_laplace_2d({w}, q);
  CHECK(max_err(r.phi[0], [](double z) { return 0.5 * z * std::exp(-z); }) < 1e-8);
  CHECK(max_err(r.v2[0], [](double z) { return cplx(0, -0.5) * z * std::exp(-z); }) < 1e-8);
  CHECK(r.wall_normal_velocity < 1e-12);
}

TEST_CASE("zero mode: -phi'' = exp(-z)") {
  const auto g = grid();
  const auto r = solve_zero_mode(sample(g, [](double z) { return std::exp(-z); }, 0.0, 0.0));
  CHECK(max_err(r.v1, [](double z) { return std::exp(-z); }) < 1e-8);
  CHECK(max_err(r.phi, [](double z) { return 1.0 - std::exp(-z); }) < 1e-8);
}
