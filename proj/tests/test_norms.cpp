#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "tsbl/grid.hpp"
#include "tsbl/norms.hpp"
#include "tsbl/numerics.hpp"

using namespace tsbl;

namespace {
GridPtr grid(int N = 200) {
  GridSpec s;
  s.N = N;
  s.L = 3.0;
  return build_grid(s);
}
BLNormParams params(double beta, double delta, int p) {
  BLNormParams q;
  q.beta = beta;
  q.nu = 1e-8;
  q.gamma = delta / std::pow(q.nu, 0.125);
  q.p = p;
  return q;
}
}  // namespace

TEST_CASE("bl_norm of zero and of the exact weight") {
  const auto g = grid();
  CHECK(bl_norm(sample(g, [](double) { return 0.0; }), params(0.25, 0.1, 1)) == 0.0);
  const auto f = sample(g, [](double z) { return std::exp(-0.25 * z); });
  CHECK(bl_norm(f, params(0.25, 0.1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bl_norm matches a dense brute-force sup") {
  const auto q = params(1.0, 0.1, 1);
  const double d = q.delta();
  auto f = [&](double z) { return std::exp(-2 * z) * (1 + 1 / d / (1 + std::pow(z / d, 4))); };
  GridSpec s;
  s.L = 3.0;
  s.N = required_N(s, d, 12);
  const auto g = build_grid(s);
  double brute = 0.0;
  for (double z : linspace(0.0, g->filter_horizon(), 1000001))
    brute = std::max(brute, std::exp(z) * std::abs(f(z)) / bl_weight(z, q));
  CHECK(std::abs(bl_norm(sample(g, [&](double z) { return f(z); }), q) - brute) < 1e-6);
}

TEST_CASE("algebra inequality") {
  const auto g = grid();
  const auto q = params(0.25, 0.1, 1);
  const auto z0 = sample(g, [](double) { return 0.0; });
  const auto a0 = bl_norm_algebra_check(z0, z0, q, 1, 1);
  CHECK(a0.lhs == 0.0);
  CHECK(a0.rhs == 0.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ld(std::log(0.05), std::log(3.0));
  auto rnd = [&] {
    const double l1 = std::exp(ld(rng)), l2 = std::exp(ld(rng));
    const cplx c1(nd(rng), nd(rng)), c2(nd(rng), nd(rng));
    return sample(g, [=](double z) { return c1 * std::exp(-z / l1) + c2 * z * std::exp(-z / l2); });
  };
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = bl_norm_algebra_check(rnd(), rnd(), q, 1, 1);
    ok += a.lhs <= a.sharp_constant * a.rhs * (1 + 1e-12);
    CHECK(a.sharp_constant >= 1.0);
  }
  CHECK(ok == 1000);
}

TEST_CASE("containment ordering in p") {
  const auto g = grid();
  const auto q = params(0.25, 0.1, 1);
  const auto f = sample(g, [](double z) { return std::exp(-z / 0.1) / 0.1 + std::exp(-z); });
  CHECK(bl_norm(f, q.with_p(2)) <= bl_norm(f, q.with_p(1)));
  CHECK(bl_norm(f, q.with_p(1)) <= bl_norm(f, q.with_p(0)));
}

TEST_CASE("sup over wavenumbers") {
  const auto g = grid();
  const auto q = params(0.0, 0.1, 0);
  const auto a = sample(g, [](double z) { return std::exp(-z); }, 0.0, 1.0);
  const auto b = sample(g, [](double z) { return 2.0 * std::exp(-z); }, 0.0, 2.0);
  CHECK(sup_alpha_norm({a}, q) == doctest::Approx(bl_norm(a, q)));
  CHECK(sup_alpha_norm({a, b}, q) == doctest::Approx(2.0));
}

TEST_CASE("triple norm") {
  const auto g = grid();
  const auto q = params(0.25, 0.1, 1);
  const double nu = q.nu;
  const auto zero = sample(g, [](double) { return 0.0; }, 0.0, 1.0);
  CHECK(triple_norm({zero}, nu, q).value == 0.0);
  const auto w = sample(g, [](double z) { return std::exp(-z); }, 0.0, 0.5);
  const auto t = triple_norm({w}, nu, q);
  CHECK(t.omega == doctest::Approx(bl_norm(w, q)));
  CHECK(t.dx == doctest::Approx(0.5 * bl_norm(w, q)));
  CHECK(t.value == doctest::Approx(t.omega + std::pow(nu, 0.125) * (t.dx + t.dz)));
}

TEST_CASE("c_nu_alpha") {
  CHECK(c_nu_alpha(1e-8, 2.0) == 1.0);
  CHECK(c_nu_alpha(1e-8, 0.0) == 1.0);
  CHECK(c_nu_alpha(1e-8, std::pow(1e-8, 0.125)) == doctest::Approx(2.0));
}

TEST_CASE("critical times") {
  TimeScales a;
  a.p_exp = 0.3;
  a.tau = 0.3;
  a.gamma0 = 1.0;
  a.nu = 1e-4;
  CHECK(critical_times(a).T_star == doctest::Approx(0.0));
  TimeScales b;
  b.p_exp = 2.0;
  b.tau = 0.3;
  b.gamma0 = 1.0;
  b.nu = 1e-4;
  CHECK(critical_times(b).T_star == doctest::Approx(1.7 * std::log(1e4) / 0.1).epsilon(1e-12));
  b.gamma0 = 0.0;
  CHECK_THROWS(critical_times(b));
}
