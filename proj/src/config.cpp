#include "tsbl/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "tsbl/errors.hpp"
#include "tsbl/numerics.hpp"

namespace tsbl {

using json = nlohmann::json;

namespace {

ProfileConfig named(const std::string& id, double eta0 = 0.9) {
  ProfileConfig p;
  p.id = id;
  p.eta0 = eta0;
  return p;
}

// Walks one JSON object, remembering the field path for error messages.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) fail(at(k), "unknown field");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  Reader sub(const char* key) const { return Reader(j_.at(key), at(key)); }
  const json& raw(const char* key) const { return j_.at(key); }

  void num(const char* key, double& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(at(key), "must be finite");
  }
  void integer(const char* key, int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    out = v.get<int>();
  }
  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    out = v.get<bool>();
  }
  void str(const char* key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    out = v.get<std::string>();
  }
  void lattice(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    out = parse_lattice(j_.at(key), at(key));
  }
  void ints(const char* key, std::vector<int>& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(at(key), "expected an array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
  }

  static std::vector<double> parse_lattice(const json& v, const std::string& path) {
    std::vector<double> out;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
      }
    } else if (v.is_object() && v.size() == 1 && (v.contains("log") || v.contains("lin"))) {
      const bool lg = v.contains("log");
      const auto& a = v.at(lg ? "log" : "lin");
      const std::string p = path + (lg ? ".log" : ".lin");
      if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number_integer())
        fail(p, "expected [start, stop, count]");
      const int n = a[2].get<int>();
      if (n < 1) fail(p, "count must be >= 1");
      const double x0 = a[0].get<double>(), x1 = a[1].get<double>();
      if (lg && !(x0 > 0 && x1 > 0)) fail(p, "log lattice needs positive ends");
      out = n == 1 ? std::vector<double>{x0} : (lg ? geomspace(x0, x1, n) : linspace(x0, x1, n));
    } else {
      fail(path, "expected an array or {\"log\"|\"lin\": [start, stop, count]}");
    }
    if (out.empty()) fail(path, "lattice must be nonempty");
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

void read_profile(const Reader& r, ProfileConfig& p) {
  r.allow({"id", "eta0", "csv", "u_plus"});
  r.str("id", p.id);
  r.num("eta0", p.eta0);
  r.str("csv", p.csv);
  r.num("u_plus", p.u_plus);
  static const std::set<std::string> ids{"exponential", "erf", "z_exp", "inflected", "csv"};
  if (!ids.count(p.id)) Reader::fail(r.at("id"), "unknown profile '" + p.id + "'");
  if (!(p.eta0 > 0)) Reader::fail(r.at("eta0"), "must be > 0");
  if (p.id == "csv") {
    if (p.csv.empty()) Reader::fail(r.at("csv"), "required when id is \"csv\"");
    if (!std::filesystem::exists(p.csv)) Reader::fail(r.at("csv"), "file not found: " + p.csv);
  }
}

void opt_profile(const Reader& r, const char* key, ProfileConfig& p) {
  if (r.has(key)) read_profile(r.sub(key), p);
}

void read_grid(const Reader& r, GridSpec& g) {
  r.allow({"backend", "mapping", "N", "L", "z_max", "cluster"});
  std::string b = to_string(g.backend), m = to_string(g.mapping);
  r.str("backend", b);
  r.str("mapping", m);
  try {
    g.backend = backend_from_string(b);
  } catch (const std::exception& e) {
    Reader::fail(r.at("backend"), e.what());
  }
  if (m == "algebraic") g.mapping = Mapping::Algebraic;
  else if (m == "truncated") g.mapping = Mapping::Truncated;
  else Reader::fail(r.at("mapping"), "expected algebraic | truncated");
  r.integer("N", g.N);
  r.num("L", g.L);
  r.num("z_max", g.z_max);
  r.num("cluster", g.cluster);
  if (g.N < 16) Reader::fail(r.at("N"), "must be >= 16");
  if (!(g.L > 0)) Reader::fail(r.at("L"), "must be > 0");
  if (!(g.z_max > 0)) Reader::fail(r.at("z_max"), "must be > 0");
  if (!(g.cluster >= 0)) Reader::fail(r.at("cluster"), "must be >= 0");
  if (g.backend == Backend::FiniteDifference && g.mapping != Mapping::Truncated)
    Reader::fail(r.at("mapping"), "finite differences need the truncated mapping");
}

void positive(const Reader& r, const char* key, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] > 0)) Reader::fail(r.at(key) + "[" + std::to_string(i) + "]", "must be > 0");
}

void check_nu(const Reader& r, const char* key, double nu) {
  if (!(nu > 0 && nu < 1)) Reader::fail(r.at(key), "must lie in (0, 1)");
}

json profile_json(const ProfileConfig& p) {
  json j{{"id", p.id}, {"eta0", p.eta0}, {"u_plus", p.u_plus}};
  if (!p.csv.empty()) j["csv"] = p.csv;
  return j;
}

json grid_json(const GridSpec& g) {
  return json{{"backend", to_string(g.backend)}, {"mapping", to_string(g.mapping)}, {"N", g.N},
              {"L", g.L}, {"z_max", g.z_max}, {"cluster", g.cluster}};
}

}  // namespace

ShearProfile make_profile(const ProfileConfig& c) {
  if (c.id == "csv") return profiles::from_csv(c.csv, c.u_plus, c.eta0);
  return profiles::by_id(c.id, c.eta0);
}

RunConfig default_config() {
  RunConfig c;
  c.profile = named("erf");
  c.grid.N = 160;
  c.grid.L = 3.0;
  c.rayleigh.profiles = {named("exponential"), named("erf"), named("inflected", 1.5)};
  c.rayleigh.alpha = linspace(0.1, 2.0, 10);
  c.os_scan.profile = named("erf");
  c.os_scan.nu = {1e-7, 3e-8, 1e-8};
  c.os_scan.alpha_scaled = {1.1, 1.4, 1.7};
  c.os_scan.fd_grid.backend = Backend::FiniteDifference;
  c.os_scan.fd_grid.mapping = Mapping::Truncated;
  c.os_scan.fd_grid.N = 3000;
  c.os_scan.fd_grid.z_max = 60.0;
  c.gamma0.profile = named("exponential");
  c.gamma0.nu = geomspace(1e-8, 1e-5, 7);
  c.gamma0.supplement_profile = named("erf");
  c.gamma0.supplement_nu = geomspace(1e-11, 1e-8, 7);
  c.neutral.profile = named("erf");
  c.neutral.R = geomspace(1e3, 1e3 * std::pow(10.0, 1.5), 7);
  c.mode_structure.profile = named("erf");
  c.mode_structure.nu = {1e-6, 1e-6 / 256.0};
  c.semigroup.profile = named("erf");
  c.elliptic.alpha = linspace(1.0, 8.0, 8);
  c.elliptic.delta = {0.2, 0.1, 0.05};
  c.expansion.profile = named("erf");
  c.nonlin.profile = named("erf");
  return c;
}

RunConfig parse_config(const json& j) {
  RunConfig c = default_config();
  const Reader r(j, "");
  r.allow({"profile", "grid", "norm", "rayleigh", "os_scan", "gamma0", "neutral", "mode_structure",
           "semigroup", "elliptic", "expansion", "nonlin", "output", "seed", "workers"});
  // Section profiles default to the top-level one when it is given.
  if (r.has("profile")) {
    read_profile(r.sub("profile"), c.profile);
    c.os_scan.profile = c.gamma0.profile = c.neutral.profile = c.mode_structure.profile =
        c.semigroup.profile = c.expansion.profile = c.nonlin.profile = c.profile;
  }
  if (r.has("grid")) read_grid(r.sub("grid"), c.grid);
  if (r.has("norm")) {
    const Reader n = r.sub("norm");
    n.allow({"beta", "gamma", "p", "P_weight"});
    n.num("beta", c.norm.beta);
    n.num("gamma", c.norm.gamma);
    n.integer("p", c.norm.p);
    n.integer("P_weight", c.norm.P_weight);
    try {
      c.norm.validate();
    } catch (const std::exception& e) {
      Reader::fail("norm", e.what());
    }
  }
  if (r.has("rayleigh")) {
    const Reader s = r.sub("rayleigh");
    s.allow({"profiles", "alpha", "im_threshold"});
    if (s.has("profiles")) {
      const auto& arr = s.raw("profiles");
      if (!arr.is_array() || arr.empty()) Reader::fail(s.at("profiles"), "expected a nonempty array");
      c.rayleigh.profiles.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        ProfileConfig p;
        read_profile(Reader(arr[i], s.at("profiles") + "[" + std::to_string(i) + "]"), p);
        c.rayleigh.profiles.push_back(p);
      }
    }
    s.lattice("alpha", c.rayleigh.alpha);
    positive(s, "alpha", c.rayleigh.alpha);
    s.num("im_threshold", c.rayleigh.im_threshold);
    if (!(c.rayleigh.im_threshold > 0)) Reader::fail(s.at("im_threshold"), "must be > 0");
  }
  if (r.has("os_scan")) {
    const Reader s = r.sub("os_scan");
    s.allow({"profile", "nu", "alpha_scaled", "fd_grid", "rel_tol"});
    opt_profile(s, "profile", c.os_scan.profile);
    s.lattice("nu", c.os_scan.nu);
    s.lattice("alpha_scaled", c.os_scan.alpha_scaled);
    positive(s, "nu", c.os_scan.nu);
    positive(s, "alpha_scaled", c.os_scan.alpha_scaled);
    if (s.has("fd_grid")) read_grid(s.sub("fd_grid"), c.os_scan.fd_grid);
    s.num("rel_tol", c.os_scan.rel_tol);
  }
  if (r.has("gamma0")) {
    const Reader s = r.sub("gamma0");
    s.allow({"profile", "nu", "samples", "slope_tol", "alpha_slope_tol", "supplement"});
    opt_profile(s, "profile", c.gamma0.profile);
    s.lattice("nu", c.gamma0.nu);
    positive(s, "nu", c.gamma0.nu);
    s.integer("samples", c.gamma0.samples);
    if (c.gamma0.samples < 3) Reader::fail(s.at("samples"), "must be >= 3");
    s.num("slope_tol", c.gamma0.slope_tol);
    s.num("alpha_slope_tol", c.gamma0.alpha_slope_tol);
    if (s.has("supplement")) {
      const auto& sv = s.raw("supplement");
      if (sv.is_boolean() && !sv.get<bool>()) {
        c.gamma0.supplement_profile.reset();
      } else {
        const Reader u = s.sub("supplement");
        u.allow({"profile", "nu"});
        ProfileConfig p = c.gamma0.supplement_profile.value_or(c.profile);
        opt_profile(u, "profile", p);
        c.gamma0.supplement_profile = p;
        u.lattice("nu", c.gamma0.supplement_nu);
        positive(u, "nu", c.gamma0.supplement_nu);
      }
    }
  }
  if (r.has("neutral")) {
    const Reader s = r.sub("neutral");
    s.allow({"profile", "R", "relative", "low_tol", "up_tol", "R_lo", "R_hi"});
    opt_profile(s, "profile", c.neutral.profile);
    s.lattice("R", c.neutral.R);
    positive(s, "R", c.neutral.R);
    s.boolean("relative", c.neutral.relative);
    s.num("low_tol", c.neutral.low_tol);
    s.num("up_tol", c.neutral.up_tol);
    s.num("R_lo", c.neutral.R_lo);
    s.num("R_hi", c.neutral.R_hi);
    if (!(c.neutral.R_lo > 0 && c.neutral.R_hi > c.neutral.R_lo)) Reader::fail(s.at("R_hi"), "need 0 < R_lo < R_hi");
  }
  if (r.has("mode_structure")) {
    const Reader s = r.sub("mode_structure");
    s.allow({"profile", "nu", "factor", "halving_tol"});
    opt_profile(s, "profile", c.mode_structure.profile);
    s.lattice("nu", c.mode_structure.nu);
    positive(s, "nu", c.mode_structure.nu);
    if (c.mode_structure.nu.size() != 2) Reader::fail(s.at("nu"), "expected exactly two viscosities");
    s.num("factor", c.mode_structure.factor);
    s.num("halving_tol", c.mode_structure.halving_tol);
  }
  if (r.has("semigroup")) {
    const Reader s = r.sub("semigroup");
    s.allow({"profile", "nu", "alpha", "random", "gamma_factor", "t_end", "snapshots"});
    opt_profile(s, "profile", c.semigroup.profile);
    s.num("nu", c.semigroup.nu);
    check_nu(s, "nu", c.semigroup.nu);
    s.num("alpha", c.semigroup.alpha);
    s.integer("random", c.semigroup.random);
    if (c.semigroup.random < 0) Reader::fail(s.at("random"), "must be >= 0");
    s.num("gamma_factor", c.semigroup.gamma_factor);
    if (!(c.semigroup.gamma_factor > 1)) Reader::fail(s.at("gamma_factor"), "must be > 1");
    s.num("t_end", c.semigroup.t_end);
    s.integer("snapshots", c.semigroup.snapshots);
    if (c.semigroup.snapshots < 3) Reader::fail(s.at("snapshots"), "must be >= 3");
  }
  if (r.has("elliptic")) {
    const Reader s = r.sub("elliptic");
    s.allow({"alpha", "delta", "beta", "norm_samples"});
    s.lattice("alpha", c.elliptic.alpha);
    s.lattice("delta", c.elliptic.delta);
    positive(s, "alpha", c.elliptic.alpha);
    positive(s, "delta", c.elliptic.delta);
    s.num("beta", c.elliptic.beta);
    if (!(c.elliptic.beta > 0)) Reader::fail(s.at("beta"), "must be > 0");
    s.integer("norm_samples", c.elliptic.norm_samples);
    if (c.elliptic.norm_samples < 1) Reader::fail(s.at("norm_samples"), "must be >= 1");
  }
  if (r.has("expansion")) {
    const Reader s = r.sub("expansion");
    s.allow({"profile", "nu", "alpha", "p_exp", "M", "tau", "mode", "snapshots", "M_compare", "t_fraction"});
    auto& e = c.expansion;
    opt_profile(s, "profile", e.profile);
    s.num("nu", e.nu);
    check_nu(s, "nu", e.nu);
    s.num("alpha", e.alpha);
    s.num("p_exp", e.p_exp);
    if (!(e.p_exp > 0) || std::abs(8 * e.p_exp - std::round(8 * e.p_exp)) > 1e-9)
      Reader::fail(s.at("p_exp"), "8 p_exp must be a positive integer");
    s.integer("M", e.M);
    if (e.M < 0 || e.M > 6) Reader::fail(s.at("M"), "must lie in [0, 6]");
    s.num("tau", e.tau);
    if (!(e.tau > 0 && e.tau < e.p_exp)) Reader::fail(s.at("tau"), "must lie in (0, p_exp)");
    std::string m = to_string(e.mode);
    s.str("mode", m);
    try {
      e.mode = profile_mode_from_string(m);
    } catch (const std::exception& ex) {
      Reader::fail(s.at("mode"), ex.what());
    }
    s.integer("snapshots", e.snapshots);
    if (e.snapshots < 3) Reader::fail(s.at("snapshots"), "must be >= 3");
    s.ints("M_compare", e.M_compare);
    for (int M : e.M_compare)
      if (M < 0 || M > 6) Reader::fail(s.at("M_compare"), "entries must lie in [0, 6]");
    s.num("t_fraction", e.t_fraction);
    if (!(e.t_fraction > 0 && e.t_fraction <= 1)) Reader::fail(s.at("t_fraction"), "must lie in (0, 1]");
  }
  if (r.has("nonlin")) {
    const Reader s = r.sub("nonlin");
    s.allow({"profile", "nu", "alpha", "p_exp", "seed", "theta0", "t_end", "N_modes", "dt", "checkpoint_every"});
    auto& n = c.nonlin;
    opt_profile(s, "profile", n.profile);
    s.num("nu", n.nu);
    check_nu(s, "nu", n.nu);
    s.num("alpha", n.alpha);
    s.num("p_exp", n.p_exp);
    if (!(n.p_exp > 0)) Reader::fail(s.at("p_exp"), "must be > 0");
    if (s.has("seed")) {
      double v = 0;
      s.num("seed", v);
      if (v < 0) Reader::fail(s.at("seed"), "must be >= 0");
      n.seed = v;
    }
    s.num("theta0", n.theta0);
    if (!(n.theta0 > 0)) Reader::fail(s.at("theta0"), "must be > 0");
    s.num("t_end", n.t_end);
    s.integer("N_modes", n.N_modes);
    if (n.N_modes < 8) Reader::fail(s.at("N_modes"), "must be >= 8");
    s.num("dt", n.dt);
    s.integer("checkpoint_every", n.checkpoint_every);
  }
  r.str("output", c.output);
  if (r.has("seed")) {
    const auto& v = r.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      Reader::fail("seed", "expected a nonnegative integer");
    c.seed = v.get<std::uint64_t>();
  }
  r.integer("workers", c.workers);
  if (c.workers < 1) Reader::fail("workers", "must be >= 1");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected path=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["profile"] = profile_json(c.profile);
  j["grid"] = grid_json(c.grid);
  j["norm"] = {{"beta", c.norm.beta}, {"gamma", c.norm.gamma}, {"p", c.norm.p}, {"P_weight", c.norm.P_weight}};
  json rp = json::array();
  for (const auto& p : c.rayleigh.profiles) rp.push_back(profile_json(p));
  j["rayleigh"] = {{"profiles", rp}, {"alpha", c.rayleigh.alpha}, {"im_threshold", c.rayleigh.im_threshold}};
  j["os_scan"] = {{"profile", profile_json(c.os_scan.profile)}, {"nu", c.os_scan.nu},
                  {"alpha_scaled", c.os_scan.alpha_scaled}, {"fd_grid", grid_json(c.os_scan.fd_grid)},
                  {"rel_tol", c.os_scan.rel_tol}};
  j["gamma0"] = {{"profile", profile_json(c.gamma0.profile)}, {"nu", c.gamma0.nu}, {"samples", c.gamma0.samples},
                 {"slope_tol", c.gamma0.slope_tol}, {"alpha_slope_tol", c.gamma0.alpha_slope_tol}};
  if (c.gamma0.supplement_profile)
    j["gamma0"]["supplement"] = {{"profile", profile_json(*c.gamma0.supplement_profile)},
                                 {"nu", c.gamma0.supplement_nu}};
  else
    j["gamma0"]["supplement"] = false;
  j["neutral"] = {{"profile", profile_json(c.neutral.profile)}, {"R", c.neutral.R}, {"relative", c.neutral.relative}, {"low_tol", c.neutral.low_tol},
                  {"up_tol", c.neutral.up_tol}, {"R_lo", c.neutral.R_lo}, {"R_hi", c.neutral.R_hi}};
  j["mode_structure"] = {{"profile", profile_json(c.mode_structure.profile)}, {"nu", c.mode_structure.nu},
                         {"factor", c.mode_structure.factor}, {"halving_tol", c.mode_structure.halving_tol}};
  j["semigroup"] = {{"profile", profile_json(c.semigroup.profile)}, {"nu", c.semigroup.nu},
                    {"alpha", c.semigroup.alpha}, {"random", c.semigroup.random},
                    {"gamma_factor", c.semigroup.gamma_factor}, {"t_end", c.semigroup.t_end},
                    {"snapshots", c.semigroup.snapshots}};
  j["elliptic"] = {{"alpha", c.elliptic.alpha}, {"delta", c.elliptic.delta}, {"beta", c.elliptic.beta},
                   {"norm_samples", c.elliptic.norm_samples}};
  const auto& e = c.expansion;
  j["expansion"] = {{"profile", profile_json(e.profile)}, {"nu", e.nu}, {"alpha", e.alpha}, {"p_exp", e.p_exp},
                    {"M", e.M}, {"tau", e.tau}, {"mode", to_string(e.mode)}, {"snapshots", e.snapshots},
                    {"M_compare", e.M_compare}, {"t_fraction", e.t_fraction}};
  const auto& n = c.nonlin;
  j["nonlin"] = {{"profile", profile_json(n.profile)}, {"nu", n.nu}, {"alpha", n.alpha}, {"p_exp", n.p_exp},
                 {"seed", n.seed ? json(*n.seed) : json(nullptr)}, {"theta0", n.theta0}, {"t_end", n.t_end},
                 {"N_modes", n.N_modes}, {"dt", n.dt}, {"checkpoint_every", n.checkpoint_every}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

}  // namespace tsbl
