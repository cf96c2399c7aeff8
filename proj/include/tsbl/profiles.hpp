#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tsbl {

/// Derivatives U, U', U'', U''', U'''' at one point.
using Jet = std::array<double, 5>;

/// Base shear flow U(z) on z >= 0 together with its first four derivatives.
///
/// Instances are immutable and their evaluator is pure, so a profile can be
/// shared freely between worker threads.
class ShearProfile {
 public:
  using Evaluator = std::function<Jet(double)>;

  ShearProfile(std::string name, Evaluator eval, double u_plus, double eta0,
               bool analytic = true);

  const std::string& name() const { return name_; }
  double u_plus() const { return u_plus_; }
  double eta0() const { return eta0_; }
  /// Declared attribute only; real analyticity is not machine-checkable.
  bool declared_analytic() const { return analytic_; }

  Jet jet(double z) const { return eval_(z); }
  double U(double z) const { return eval_(z)[0]; }
  double dU(double z) const { return eval_(z)[1]; }
  double d2U(double z) const { return eval_(z)[2]; }
  double derivative(int k, double z) const { return eval_(z).at(k); }

 private:
  std::string name_;
  Evaluator eval_;
  double u_plus_;
  double eta0_;
  bool analytic_;
};

namespace profiles {

/// U = 1 - exp(-z).
ShearProfile exponential(double eta0 = 0.9);
/// U = erf(z/2).
ShearProfile erf_profile(double eta0 = 0.9);
/// U = z exp(-z); not monotone, used as a negative control.
ShearProfile z_exp();
/// U = (tanh(z - z0) + tanh(z0)) / (1 + tanh(z0)); inflection point at z0.
ShearProfile inflected(double z0 = 3.0, double eta0 = 1.5);
/// Natural cubic spline through tabulated (z, U). Beyond the last node the
/// profile is continued by U_plus - (U_plus - U_last) exp(-eta0 (z - z_last)).
ShearProfile tabulated(std::string name, std::vector<double> z, std::vector<double> u,
                       double u_plus, double eta0);
/// Reads a two-column CSV (z, U); a header line is allowed.
ShearProfile from_csv(const std::string& path, double u_plus, double eta0);
/// Lookup by formula id: "exponential", "erf", "z_exp", "inflected".
ShearProfile by_id(const std::string& id, double eta0);

}  // namespace profiles

/// Forcing that keeps U stationary: f^P = -U''.
double stationary_forcing(const ShearProfile& p, double z);

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
};

struct ValidationReport {
  std::string profile;
  double tol = 0.0;
  double z_max = 0.0;
  double U0 = 0.0;
  double dU0 = 0.0;
  double min_dU = 0.0;
  double min_dU_at = 0.0;
  /// sup |d^k (U - U_plus)| exp(eta0 z), k = 0..4.
  std::array<double, 5> weighted_sup{};
  std::vector<HypothesisCheck> checks;
  bool pass = false;
};

/// Checks the quantitative hypotheses on a uniform sample grid over
/// [0, z_max]; z_max <= 0 selects the default 40/eta0.
ValidationReport validate_profile(const ShearProfile& p, int n_samples = 4001,
                                  double tol = 1e-8, double z_max = -1.0);
/// Same, on caller-supplied sample points.
ValidationReport validate_profile(const ShearProfile& p, const std::vector<double>& z,
                                  double tol = 1e-8);

/// Heat evolution with U_s(s, 0) = 0 (odd extension), unit diffusivity in the
/// slow time s.
double heat_evolve(const ShearProfile& p, double s, double z);
/// d^2/dz^2 of heat_evolve.
double heat_evolve_d2(const ShearProfile& p, double s, double z);

/// Profile evolved to slow time s; evaluators wrap heat_evolve.
struct EvolvedProfile {
  std::shared_ptr<const ShearProfile> base;
  double s = 0.0;
  double U(double z) const { return heat_evolve(*base, s, z); }
  double d2U(double z) const { return heat_evolve_d2(*base, s, z); }
};

}  // namespace tsbl
