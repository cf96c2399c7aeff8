#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tsbl/errors.hpp"
#include "tsbl/grid.hpp"

using namespace tsbl;

namespace {
GridPtr grid64() {
  GridSpec s;
  s.N = 64;
  s.L = 4.0;
  return build_grid(s);
}
}  // namespace

TEST_CASE("first derivative of a constant vanishes") {
  const auto g = grid64();
  const Eigen::VectorXd d = g->apply(1, Eigen::VectorXd::Ones(g->size()).eval());
  CHECK(d.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("first derivative of exp(-z)") {
  const auto g = grid64();
  const auto f = sample(g, [](double z) { return std::exp(-z); });
  const Eigen::VectorXcd d = g->apply(1, f.values);
  double err = 0.0;
  for (Eigen::Index k = 1; k + 1 < g->size(); ++k)
    err = std::max(err, std::abs(d[k] + std::exp(-g->z()[k])));
  CHECK(err < 1e-8);
}

TEST_CASE("interpolation") {
  const auto g = grid64();
  const auto f = sample(g, [](double z) { return std::exp(-z); });
  for (Eigen::Index k : {0, 5, 31, 50}) CHECK(std::abs(f(g->z()[k]) - f.values[k]) == 0.0);
  const auto one = sample(g, [](double) { return 1.0; }, 1.0);
  CHECK(std::abs(one(2.345) - 1.0) < 1e-12);
  for (double z : {0.013, 0.77, 3.3, 12.5})
    CHECK(std::abs(f(z) - std::exp(-z)) < 1e-8);
}

TEST_CASE("quadrature weights") {
  const auto g = grid64();
  double s = 0.0;
  for (Eigen::Index k = 0; k < g->size(); ++k)
    if (g->is_finite_node(k)) s += g->weights()[k] * std::exp(-g->z()[k]);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("truncated finite-difference grid") {
  GridSpec s;
  s.backend = Backend::FiniteDifference;
  s.mapping = Mapping::Truncated;
  s.N = 2000;
  s.z_max = 40.0;
  const auto g = build_grid(s);
  CHECK(g->z()[0] == 0.0);
  CHECK(g->z()[g->size() - 1] == doctest::Approx(40.0));
  const auto f = sample(g, [](double z) { return std::exp(-z); });
  const Eigen::VectorXcd d = g->apply(2, f.values);
  double err = 0.0;
  for (Eigen::Index k = 2; k + 2 < g->size(); ++k)
    err = std::max(err, std::abs(d[k] - std::exp(-g->z()[k])));
  CHECK(err < 1e-5);
}

TEST_CASE("invalid specs are rejected") {
  GridSpec s;
  s.N = 2;
  CHECK_THROWS_AS(build_grid(s), ConfigError);
  s.N = 64;
  s.L = -1.0;
  CHECK_THROWS_AS(build_grid(s), ConfigError);
}

TEST_CASE("required_N resolves a thin layer") {
  GridSpec s;
  s.N = 64;
  s.L = 3.0;
  const double delta = 0.02;
  const int n = required_N(s, delta, 12);
  CHECK(n >= 64);
  s.N = n;
  CHECK(nodes_below(s, delta) >= 12);
  CHECK(build_grid(s)->nodes_below(delta) >= 12);
}
