#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tsbl/config.hpp"
#include "tsbl/io.hpp"

namespace tsbl {

/// One judged property. Numeric ids "1".."12" are acceptance criteria; other
/// ids are subcommand-local assertions.
struct CriterionResult {
  std::string id;
  bool pass = false;
  std::string summary;
};

struct ExperimentResult {
  std::string name;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Table> tables;
  std::vector<CriterionResult> criteria;

  bool all_pass() const;
  /// summary plus the criteria, as written to <name>.json.
  nlohmann::json to_json() const;
};

ExperimentResult experiment_profile_check(const RunConfig& c);
ExperimentResult experiment_rayleigh_scan(const RunConfig& c);    // 4
ExperimentResult experiment_os_scan(const RunConfig& c);          // 5
ExperimentResult experiment_gamma0(const RunConfig& c);           // 1, 2
ExperimentResult experiment_neutral_curve(const RunConfig& c);    // 3
ExperimentResult experiment_mode_structure(const RunConfig& c);   // 12
ExperimentResult experiment_semigroup(const RunConfig& c);        // 8
ExperimentResult experiment_elliptic(const RunConfig& c);         // 6, 7
ExperimentResult experiment_expansion(const RunConfig& c);        // 9, 10
ExperimentResult experiment_nonlin(const RunConfig& c);           // 11

/// Subcommand names in dispatch order (report excluded).
const std::vector<std::string>& experiment_names();
ExperimentResult run_named_experiment(const std::string& name, const RunConfig& c);

/// Writes <dir>/<name>.json and <dir>/<name>/<table>.csv.
void write_experiment(const ExperimentResult& r, const std::string& dir, const nlohmann::json& config);

/// One entry per acceptance criterion 1..12 from the result files in dir;
/// criteria without a result file are reported as missing.
nlohmann::json aggregate_report(const std::string& dir);

/// Largest |Q(a, b) - physical-space transport coefficient| relative to max |Q|,
/// with u . grad w~ evaluated pointwise on an x grid and projected onto
/// mode a.n + b.n (a.n, b.n > 0).
double transport_oracle_error(const ModeFields& a, const ModeFields& b, double alpha_nu,
                              const SemiInfiniteGrid& grid);

}  // namespace tsbl
