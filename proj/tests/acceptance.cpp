// Runs every experiment with the default configuration and prints one line
// per acceptance criterion.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "tsbl/config.hpp"
#include "tsbl/experiments.hpp"
#include "tsbl/io.hpp"

using namespace tsbl;

int main(int argc, char** argv) {
  RunConfig c = default_config();
  c.output = argc > 1 ? argv[1] : "acceptance-out";
  c.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto config = to_json(c);

  std::map<std::string, std::string> errors;
  for (const auto& name : experiment_names()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto r = run_named_experiment(name, c);
      write_experiment(r, c.output, config);
    } catch (const std::exception& e) {
      errors[name] = e.what();
      std::cerr << name << " raised: " << e.what() << "\n";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "%-16s %8.1f s\n", name.c_str(), s);
  }

  const auto rep = aggregate_report(c.output);
  write_json(c.output + "/acceptance.json", rep, config);
  int failed = 0;
  for (const auto& e : rep["criteria"]) {
    const bool pass = e["pass"].get<bool>();
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << e["criterion"].get<int>() << ": "
              << e["summary"].get<std::string>() << "\n";
  }
  std::cout << 12 - failed << "/12 criteria pass\n";
  return failed == 0 && errors.empty() ? 0 : 1;
}
