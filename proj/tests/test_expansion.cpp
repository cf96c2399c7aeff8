#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "tsbl/expansion.hpp"
#include "tsbl/experiments.hpp"
#include "tsbl/numerics.hpp"

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

GridFunction bump(const GridPtr& g, cplx c, double l, double alpha) {
  return sample(g, [=](double z) { return c * z * std::exp(-z / l) + 0.3 * std::exp(-z); }, 0.0, alpha);
}

const EigenSolution& seed() {
  static const EigenSolution s = [] {
    const auto g = build_grid(resolved_spec(base(), kNu));
    return *os_spectrum(profiles::erf_profile(), kAlpha, kNu, g).leading();
  }();
  return s;
}
}  // namespace

TEST_CASE("Q vanishes for two mean modes and for zero data") {
  const auto g = build_grid(base());
  const double a = 0.2;
  const auto w = bump(g, {1.0, 0.5}, 0.7, 0.0);
  const auto f0 = mode_fields(w, 0, a);
  CHECK(apply_Q(f0, f0, a).cwiseAbs().maxCoeff() == 0.0);
  const auto w1 = bump(g, {0.3, -1.0}, 0.4, a);
  const auto zero = mode_fields(sample(g, [](double) { return 0.0; }, 0.0, a), 1, a);
  CHECK(apply_Q(zero, mode_fields(w1, 1, a), a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Q is bilinear") {
  const auto g = build_grid(base());
  const double a = 0.2;
  const auto x = mode_fields(bump(g, {1.0, 0.2}, 0.5, a), 1, a);
  const auto y = mode_fields(bump(g, {-0.4, 0.9}, 1.5, a), 1, a);
  const auto b = mode_fields(bump(g, {0.7, 0.1}, 0.8, 2 * a), 2, a);
  const cplx s(0.3, -1.2);
  ModeFields xy = x;
  xy.phi += s * y.phi;
  xy.dphi += s * y.dphi;
  xy.omega += s * y.omega;
  xy.domega += s * y.domega;
  const Eigen::VectorXcd lhs = apply_Q(xy, b, a);
  const Eigen::VectorXcd rhs = apply_Q(x, b, a) + s * apply_Q(y, b, a);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("Q matches physical-space transport") {
  const auto g = build_grid(base());
  const double a = 0.2;
  const auto f1 = mode_fields(bump(g, {1.0, 0.2}, 0.5, a), 1, a);
  const auto f2 = mode_fields(bump(g, {-0.4, 0.9}, 1.5, 2 * a), 2, a);
  CHECK(transport_oracle_error(f1, f2, a, *g) < 1e-10);
  CHECK(transport_oracle_error(f2, f1, a, *g) < 1e-10);
  CHECK(transport_oracle_error(f1, f1, a, *g) < 1e-10);
}

TEST_CASE("S vanishes at t = 0 and for a stationary profile") {
  const auto g = build_grid(base());
  const auto p = profiles::erf_profile();
  const auto w = bump(g, {1.0, 0.0}, 0.5, 0.2);
  CHECK(apply_S(w, 1, 0.2, 0.0, p, kNu, ProfileMode::TimeDependent).values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(apply_S(w, 1, 0.2, 500.0, p, kNu, ProfileMode::Stationary).values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(apply_S(w, 1, 0.2, 500.0, p, kNu, ProfileMode::TimeDependent).values.cwiseAbs().maxCoeff() > 0.0);

  const ShearDeviation dev(p, g, kNu, ProfileMode::TimeDependent, 1000.0);
  const auto f = mode_fields(w, 1, 0.2);
  const Eigen::VectorXcd tab = dev.apply(f, 0.2, 500.0);
  const auto direct = apply_S(w, 1, 0.2, 500.0, p, kNu, ProfileMode::TimeDependent);
  CHECK((tab - direct.values).cwiseAbs().maxCoeff() <= 1e-3 * direct.values.cwiseAbs().maxCoeff());
}

TEST_CASE("support law by index arithmetic") {
  const auto st = ladder_support(8, 9, ProfileMode::Stationary);
  CHECK(st[0] == std::vector<int>{1});
  for (int j = 1; j < 8; ++j) CHECK(st[j].empty());
  CHECK(st[8] == std::vector<int>{0, 2});
  CHECK(st[9].empty());
  const auto td = ladder_support(8, 9, ProfileMode::TimeDependent);
  for (int j = 1; j < 8; ++j) CHECK(td[j] == std::vector<int>{1});
  CHECK(td[8] == std::vector<int>{0, 1, 2});
  CHECK(td[9] == std::vector<int>{0, 1, 2});
  const auto fast = ladder_support(1, 6, ProfileMode::Stationary);
  for (int j = 0; j <= 6; ++j)
    for (int n : fast[j]) CHECK(n < (1 << (j + 1)));
  CHECK(std::find(fast[6].begin(), fast[6].end(), 7) != fast[6].end());
}

TEST_CASE("M = 0 ladder is the growing mode, with a flat j = 0 ratio") {
  const auto& s = seed();
  const auto L = build_ladder(profiles::erf_profile(), 1.0, 0, s, linspace(0.0, 2000.0, 9));
  CHECK(L.complete());
  CHECK(L.entries.size() == 1);
  REQUIRE(L.entry(0, 1));
  const auto b = check_inductive_bounds(L);
  for (const auto& x : b)
    if (x.a == 0 && x.b == 0) {
      const auto [lo, hi] = std::minmax_element(x.ratio.begin(), x.ratio.end());
      CHECK(*hi / *lo == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("stationary ladder: no forcing below the first nonlinear level") {
  const auto& s = seed();
  LadderOptions o;
  o.mode = ProfileMode::Stationary;
  const auto L = build_ladder(profiles::erf_profile(), 1.0, 3, s, linspace(0.0, 500.0, 5), o);
  CHECK(L.complete());
  CHECK(L.entries.size() == 1);
  const auto f = L.fields(2, 1, 4);
  CHECK(f.omega.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("first nonlinear level with p = 1/8") {
  const auto& s = seed();
  LadderOptions o;
  o.mode = ProfileMode::Stationary;
  const auto L = build_ladder(profiles::erf_profile(), 0.125, 1, s, linspace(0.0, 400.0, 5), o);
  REQUIRE(L.complete());
  REQUIRE(L.entry(1, 0));
  REQUIRE(L.entry(1, 2));
  CHECK_FALSE(L.entry(1, 1));
  CHECK(L.entry(1, 2)->norm.back() > 0.0);
  // the mean mode of a real field is real
  const auto& m = L.entry(1, 0)->fields.back();
  CHECK(m.omega.imag().cwiseAbs().maxCoeff() <= 1e-10 * m.omega.cwiseAbs().maxCoeff());
  CHECK(transport_oracle_error(L.fields(0, 1, 4), L.fields(0, 1, 4), L.alpha_nu, *L.grid) < 1e-6);
}

TEST_CASE("residual shrinks with the truncation order at early times") {
  const auto& s = seed();
  TimeScales ts;
  ts.nu = kNu;
  ts.gamma0 = s.lambda.real() * std::pow(kNu, -0.25);
  ts = critical_times(ts);
  const std::vector<double> tg = {0.0, ts.T_star / 8};
  std::vector<double> total;
  for (int M : {1, 2}) {
    const auto L = build_ladder(profiles::erf_profile(), 1.0, M, s, tg);
    REQUIRE(L.complete());
    const auto r = assemble_and_residual(L, 1);
    CHECK(r.total <= r.sum_of_parts * (1 + 1e-12));
    total.push_back(r.total);
  }
  CHECK(total[1] < total[0]);
}
