#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsbl/expansion.hpp"
#include "tsbl/grid.hpp"
#include "tsbl/norms.hpp"
#include "tsbl/profiles.hpp"

namespace tsbl {

struct ProfileConfig {
  std::string id = "erf";  // exponential | erf | z_exp | inflected | csv
  double eta0 = 0.9;
  std::string csv;         // two-column table when id == "csv"
  double u_plus = 1.0;
};

ShearProfile make_profile(const ProfileConfig& c);

struct RayleighConfig {
  std::vector<ProfileConfig> profiles;
  std::vector<double> alpha;
  double im_threshold = 1e-8;
};

struct OsScanConfig {
  ProfileConfig profile;
  std::vector<double> nu;
  /// Wavenumbers as multiples of nu^{1/8}.
  std::vector<double> alpha_scaled;
  GridSpec fd_grid;
  double rel_tol = 1e-4;
};

struct Gamma0Config {
  ProfileConfig profile;
  std::vector<double> nu;
  int samples = 24;
  double slope_tol = 0.03;
  double alpha_slope_tol = 0.02;
  /// Optional second scan reported alongside (not judged).
  std::optional<ProfileConfig> supplement_profile;
  std::vector<double> supplement_nu;
};

struct NeutralConfig {
  ProfileConfig profile;
  std::vector<double> R;
  /// R values are multiples of the critical Reynolds number.
  bool relative = true;
  double low_tol = 0.04;
  double up_tol = 0.04;
  /// Bracket for the critical Reynolds number.
  double R_lo = 100.0;
  double R_hi = 1e7;
};

struct ModeStructureConfig {
  ProfileConfig profile;
  std::vector<double> nu;
  double factor = 3.0;
  double halving_tol = 0.3;
};

struct SemigroupConfig {
  ProfileConfig profile;
  double nu = 1e-7;
  double alpha = 0.0;  // 0: the most unstable wavenumber
  int random = 20;
  double gamma_factor = 1.2;
  double t_end = 0.0;  // 0: 5 / Re lambda
  int snapshots = 41;
};

struct EllipticConfig {
  std::vector<double> alpha;
  std::vector<double> delta;
  double beta = 0.25;
  int norm_samples = 1000;
};

struct ExpansionConfig {
  ProfileConfig profile;
  double nu = 1e-7;
  double alpha = 0.0;  // 0: the most unstable wavenumber
  double p_exp = 1.0;
  int M = 3;
  double tau = 0.3;
  ProfileMode mode = ProfileMode::TimeDependent;
  int snapshots = 41;
  std::vector<int> M_compare = {1, 2, 3};
  /// Residual comparison time as a fraction of T_star.
  double t_fraction = 0.5;
};

struct NonlinConfig {
  ProfileConfig profile;
  double nu = 1e-7;
  double alpha = 0.0;  // 0: the most unstable wavenumber
  double p_exp = 1.0;
  std::optional<double> seed;
  double theta0 = 0.1;
  double t_end = 0.0;
  int N_modes = 16;
  double dt = 0.0;
  int checkpoint_every = 0;
};

struct RunConfig {
  ProfileConfig profile;
  GridSpec grid;
  BLNormParams norm;
  RayleighConfig rayleigh;
  OsScanConfig os_scan;
  Gamma0Config gamma0;
  NeutralConfig neutral;
  ModeStructureConfig mode_structure;
  SemigroupConfig semigroup;
  EllipticConfig elliptic;
  ExpansionConfig expansion;
  NonlinConfig nonlin;
  std::string output = "tsbl-out";
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Defaults for every field.
RunConfig default_config();

/// Parses a config document on top of the defaults. Unknown fields and
/// invalid values raise ConfigError naming the field path, e.g. "grid.N".
/// Lattices are arrays or {"log": [a, b, n]} / {"lin": [a, b, n]}.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Applies "a.b.c=value" (value parsed as JSON, else taken as a string).
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Fully resolved config as JSON.
nlohmann::json to_json(const RunConfig& c);

}  // namespace tsbl
