#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsbl/config.hpp"
#include "tsbl/errors.hpp"
#include "tsbl/experiments.hpp"
#include "tsbl/io.hpp"

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::string out;
  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> set;
};

tsbl::RunConfig resolve(const Common& a) {
  nlohmann::json j = nlohmann::json::object();
  if (!a.config.empty()) {
    if (!std::filesystem::exists(a.config)) throw tsbl::ConfigError("config: file not found: " + a.config);
    j = tsbl::read_json(a.config);
  }
  for (const auto& s : a.set) tsbl::apply_override(j, s);
  tsbl::RunConfig c = tsbl::parse_config(j);
  if (!a.out.empty())
    c.output = a.out;
  else if (!j.contains("output"))
    c.output = tsbl::default_output_root(c.output);
  if (a.workers > 0) c.workers = a.workers;
  if (a.seed) c.seed = *a.seed;
  return c;
}

int run_experiment(const std::string& name, const Common& a) {
  const tsbl::RunConfig c = resolve(a);
  const auto r = tsbl::run_named_experiment(name, c);
  tsbl::write_experiment(r, c.output, tsbl::to_json(c));
  std::cout << name << " -> " << (std::filesystem::path(c.output) / (name + ".json")).string()
            << "\n";
  for (const auto& cr : r.criteria)
    std::cout << (cr.pass ? "PASS " : "FAIL ") << cr.id << ": " << cr.summary << "\n";
  return r.all_pass() ? kOk : kFailed;
}

int run_report(const Common& a) {
  const tsbl::RunConfig c = resolve(a);
  const auto rep = tsbl::aggregate_report(c.output);
  tsbl::write_json((std::filesystem::path(c.output) / "acceptance.json").string(), rep,
                   tsbl::to_json(c));
  for (const auto& e : rep["criteria"])
    std::cout << (e["pass"].get<bool>() ? "PASS" : "FAIL") << " criterion "
              << e["criterion"].get<int>() << ": " << e["summary"].get<std::string>() << "\n";
  std::cout << rep["passed"].get<int>() << "/12 criteria pass\n";
  return rep["pass"].get<bool>() ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tollmien-Schlichting boundary-layer instability toolkit", "tsbl"};
  app.set_version_flag("--version", tsbl::code_version());
  app.require_subcommand(1);
  Common a;
  app.add_option("--config", a.config, "JSON config file");
  app.add_option("--out", a.out, "output directory (default: config output, then $TSBL_OUT)");
  app.add_option("--workers", a.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed, "random seed");
  app.add_option("--set", a.set, "override a config field, e.g. --set grid.N=200")
      ->take_all()
      ->allow_extra_args(false);

  std::string chosen;
  for (const auto& name : tsbl::experiment_names())
    app.add_subcommand(name, "run the " + name + " experiment")->callback([&, name] { chosen = name; });
  app.add_subcommand("report", "aggregate result files into acceptance.json")
      ->callback([&] { chosen = "report"; });
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return chosen == "report" ? run_report(a) : run_experiment(chosen, a);
  } catch (const tsbl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const tsbl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kConfig;
  } catch (const tsbl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const tsbl::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kNumerical;
  } catch (const tsbl::EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
