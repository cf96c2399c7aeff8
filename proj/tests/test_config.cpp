#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>

#include "tsbl/config.hpp"
#include "tsbl/errors.hpp"
#include "tsbl/experiments.hpp"
#include "tsbl/io.hpp"

using namespace tsbl;
using nlohmann::json;

namespace {
std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("empty document gives the defaults") {
  CHECK(to_json(parse_config(json::object())) == to_json(default_config()));
}

TEST_CASE("errors name the field path") {
  CHECK(config_error({{"grid", {{"N", -3}}}}).find("grid.N") != std::string::npos);
  CHECK(config_error({{"grid", {{"N", "many"}}}}).find("grid.N") != std::string::npos);
  CHECK(config_error({{"grid", {{"bogus", 1}}}}).find("grid.bogus") != std::string::npos);
  CHECK(config_error({{"nonlin", {{"N_modes", 4}}}}).find("nonlin.N_modes") != std::string::npos);
  CHECK(config_error({{"profile", {{"id", "nope"}}}}).find("profile.id") != std::string::npos);
  CHECK(config_error({{"gamma0", {{"nu", json::array()}}}}).find("gamma0.nu") != std::string::npos);
  CHECK(config_error({{"neutral", {{"relative", 3}}}}).find("neutral.relative") != std::string::npos);
  CHECK(config_error({{"rayleigh", {{"profiles", {{{"id", "erf"}, {"x", 1}}}}}}}).find("rayleigh.profiles[0].x") !=
        std::string::npos);
}

TEST_CASE("lattices") {
  const auto c = parse_config({{"gamma0", {{"nu", {{"log", {1e-8, 1e-5, 7}}}}}},
                               {"elliptic", {{"alpha", {{"lin", {1, 8, 8}}}}}}});
  REQUIRE(c.gamma0.nu.size() == 7);
  CHECK(c.gamma0.nu.front() == doctest::Approx(1e-8));
  CHECK(c.gamma0.nu[1] == doctest::Approx(std::pow(10.0, -7.5)));
  CHECK(c.elliptic.alpha[3] == doctest::Approx(4.0));
}

TEST_CASE("overrides and profile propagation") {
  json j = json::object();
  apply_override(j, "grid.N=200");
  apply_override(j, "profile.id=exponential");
  apply_override(j, "expansion.mode=stationary");
  const auto c = parse_config(j);
  CHECK(c.grid.N == 200);
  CHECK(c.nonlin.profile.id == "exponential");
  CHECK(c.gamma0.profile.id == "exponential");
  CHECK(c.expansion.mode == ProfileMode::Stationary);
  CHECK_THROWS_AS(apply_override(j, "no-equals-sign"), ConfigError);
}

TEST_CASE("resolved config round-trips") {
  auto c = default_config();
  c.seed = 42;
  c.nonlin.seed = 1e-9;
  const json j = to_json(c);
  CHECK(to_json(parse_config(j)) == j);
}

TEST_CASE("CSV output is deterministic and self-describing") {
  Table t{"x", {"a", "b"}, {{0.1, 1.0 / 3.0}, {2.0, -1e-300}}};
  const json cfg = to_json(default_config());
  const auto s1 = csv_text(t, cfg);
  const auto s2 = csv_text(t, cfg);
  CHECK(s1 == s2);
  CHECK(s1.rfind("# tsbl " + code_version(), 0) == 0);
  CHECK(s1.find("# config ") != std::string::npos);
  CHECK(s1.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("report aggregates one entry per criterion") {
  const auto dir = std::filesystem::temp_directory_path() / "tsbl-report-test";
  std::filesystem::remove_all(dir);
  ExperimentResult r;
  r.name = "rayleigh-scan";
  r.criteria = {{"4", true, "ok"}, {"local", false, "ignored"}};
  write_experiment(r, dir.string(), json::object());
  ExperimentResult e;
  e.name = "elliptic-verify";
  e.criteria = {{"6", true, "ok"}, {"7", false, "bad"}};
  write_experiment(e, dir.string(), json::object());
  const json rep = aggregate_report(dir.string());
  REQUIRE(rep["criteria"].size() == 12);
  CHECK(rep["criteria"][3]["pass"] == true);
  CHECK(rep["criteria"][5]["pass"] == true);
  CHECK(rep["criteria"][6]["pass"] == false);
  CHECK(rep["criteria"][0]["missing"] == true);
  CHECK(rep["passed"] == 2);
  CHECK(rep["pass"] == false);
  std::filesystem::remove_all(dir);
}
