#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "tsbl/errors.hpp"
#include "tsbl/nonlin.hpp"

using namespace tsbl;

namespace {
NonlinRun synthetic(double a0, double rate, double nu = 1e-6) {
  NonlinRun r;
  r.nu = nu;
  for (int k = 0; k <= 40; ++k) {
    NonlinSample s;
    s.t = 10.0 * k;
    s.v_inf = a0 * std::exp(rate * s.t);
    s.omega_inf = 3 * s.v_inf;
    r.series.push_back(s);
  }
  return r;
}

const EigenSolution& seed() {
  static const EigenSolution s = [] {
    GridSpec g;
    g.N = 160;
    g.L = 3.0;
    return *os_spectrum(profiles::erf_profile(), 0.184, 1e-7, build_grid(resolved_spec(g, 1e-7)))
                .leading();
  }();
  return s;
}
}  // namespace

TEST_CASE("pure exponential series: exact rate") {
  const double nu = 1e-6;
  const auto run = synthetic(1e-12, 0.01, nu);
  const auto m = measure_instability(run, {}, 1.0);
  CHECK(m.growth_rate == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(m.fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("doubling the seed shifts crossings by ln 2 / rate") {
  const double rate = 0.01, level = 1e-11;
  const auto a = crossing_time(synthetic(1e-12, rate).series, level);
  const auto b = crossing_time(synthetic(2e-12, rate).series, level);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(*a - *b == doctest::Approx(std::log(2.0) / rate).epsilon(1e-10));
  CHECK_FALSE(crossing_time(synthetic(1e-12, rate).series, 1.0));
}

TEST_CASE("no linear phase is refused") {
  const auto run = synthetic(1.0, 0.01);
  CHECK_THROWS_AS(measure_instability(run), NumericalError);
}

TEST_CASE("argument checks") {
  NonlinOptions o;
  o.N_modes = 4;
  o.t_end = 1.0;
  CHECK_THROWS_AS(run_experiment(profiles::erf_profile(), seed(), o), UsageError);
}

TEST_CASE("zero seed keeps the boundary layer") {
  NonlinOptions o;
  o.seed = 0.0;
  o.N_modes = 8;
  o.t_end = 20.0;
  const auto run = run_experiment(profiles::erf_profile(), seed(), o);
  CHECK(run.stationarity_drift <= 1e-9);
  CHECK(run.series.back().v_inf == 0.0);
}

TEST_CASE("linear phase grows at Re lambda; budget closes") {
  NonlinOptions o;
  o.N_modes = 8;
  o.t_end = 400.0;
  const auto run = run_experiment(profiles::erf_profile(), seed(), o);
  const auto m = measure_instability(run);
  CHECK(m.growth_rate == doctest::Approx(seed().lambda.real()).epsilon(0.02));
  CHECK(run.budget.closure < 1e-2);
  CHECK_FALSE(run.under_resolved);
  CHECK_FALSE(run.blew_up);
}

TEST_CASE("restart from a checkpoint reproduces the continuous run") {
  const auto dir = std::filesystem::temp_directory_path() / "tsbl-nonlin-test";
  std::filesystem::create_directories(dir);
  const std::string ck = (dir / "ck.json").string();
  NonlinOptions o;
  o.N_modes = 8;
  o.dt = 0.5;
  o.t_end = 40.0;
  o.checkpoint_path = ck;
  o.checkpoint_every = 40;
  const auto first = run_experiment(profiles::erf_profile(), seed(), o);
  REQUIRE(std::filesystem::exists(ck));

  NonlinOptions r = o;
  r.checkpoint_path.clear();
  r.checkpoint_every = 0;
  r.restart_from = ck;
  r.t_end = 60.0;
  const auto resumed = run_experiment(profiles::erf_profile(), seed(), r);

  NonlinOptions c = o;
  c.checkpoint_path.clear();
  c.checkpoint_every = 0;
  c.t_end = 60.0;
  const auto straight = run_experiment(profiles::erf_profile(), seed(), c);
  REQUIRE(resumed.omega.size() == straight.omega.size());
  double diff = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < straight.omega.size(); ++n) {
    diff = std::max(diff, (resumed.omega[n].values - straight.omega[n].values).cwiseAbs().maxCoeff());
    scale = std::max(scale, straight.omega[n].values.cwiseAbs().maxCoeff());
  }
  CHECK(diff <= 1e-12 * scale);
  (void)first;
  std::filesystem::remove_all(dir);
}
