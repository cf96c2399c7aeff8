#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsbl/grid.hpp"
#include "tsbl/numerics.hpp"
#include "tsbl/profiles.hpp"

namespace tsbl {

/// Re lambda above this counts as unstable: 1e-10 nu^{1/4}.
double unstable_threshold(double nu);

/// One accepted Orr-Sommerfeld eigenpair of
///   sqrt(nu) Delta_a omega - i a U omega + i a U'' phi = lambda omega,  omega = Delta_a phi,
/// with phi = phi' = 0 at the wall.
struct EigenSolution {
  double alpha = 0.0;
  double nu = 0.0;
  cplx lambda = 0.0;
  /// lambda = -i alpha c, so Im c > 0 iff Re lambda > 0.
  cplx c = 0.0;
  GridFunction phi;
  GridFunction omega;
  /// max |operator residual| / max |omega| over interior nodes.
  double residual = 0.0;
  /// Fraction of the omega energy beyond half the filter horizon.
  double tail = 0.0;
  Backend backend = Backend::Spectral;

  /// Phase speed in the alternative convention lambda = i alpha c.
  cplx c_alt() const { return -c; }
  bool unstable() const { return lambda.real() > unstable_threshold(nu); }
};

struct SpectrumReport {
  /// Accepted modes, Re lambda descending.
  std::vector<EigenSolution> modes;
  int raw = 0;
  int removed_residual = 0;
  int removed_tail = 0;

  const EigenSolution* leading() const { return modes.empty() ? nullptr : &modes.front(); }
  /// lambda_{alpha,nu}: leading Re lambda when unstable, else 0.
  double growth() const;
};

struct OsOptions {
  double residual_tol = 1e-6;
  double tail_tol = 1e-6;
  int min_sublayer_nodes = 12;
  /// Stop after this many accepted modes (0 keeps all).
  int max_modes = 0;
  /// Finite-difference back-end: shift for the shift-invert subspace
  /// iteration. Defaults to -i alpha 0.3 U_+.
  std::optional<cplx> shift;
  int block = 16;
  int iterations = 80;
};

/// Filtered discrete Orr-Sommerfeld spectrum. Spectral grids use a dense
/// eigensolve of the clamped formulation; finite-difference grids use
/// shift-invert subspace iteration on the sparse (omega, phi) system.
/// Throws NumericalError when the sublayer nu^{1/8} is under-resolved.
SpectrumReport os_spectrum(const ShearProfile& p, double alpha, double nu, const GridPtr& grid,
                           const OsOptions& opt = {});

struct RayleighMode {
  cplx c = 0.0;
  GridFunction phi;
};

struct RayleighReport {
  double alpha = 0.0;
  std::vector<RayleighMode> unstable;  // Im c descending
  int raw_unstable = 0;
  int removed_semicircle = 0;
  int removed_tail = 0;
  int removed_refinement = 0;
  bool stable() const { return unstable.empty(); }
};

/// Unstable eigenvalues of (U - c)(phi'' - a^2 phi) - U'' phi = 0 with
/// phi(0) = 0 and decay. Candidates must lie in the Howard semicircle, pass the
/// tail test and persist on a grid with 3N/2 intervals.
RayleighReport rayleigh_spectrum(const ShearProfile& p, double alpha, const GridPtr& grid,
                                 double im_threshold = 1e-8);

struct ScanOptions {
  int samples = 24;
  int workers = 1;
  /// Relative tolerance in alpha for golden-section and bisection.
  double alpha_rtol = 1e-3;
  OsOptions os;
};

/// Default wavenumber range [nu^{1/8}/4, 4 nu^{1/12}].
std::pair<double, double> default_alpha_range(double nu);

/// Spec with N raised until the sublayer of nu has enough nodes.
GridSpec resolved_spec(GridSpec spec, double nu, int min_nodes = 12);

struct GrowthSample {
  double alpha = 0.0;
  /// Leading Re lambda among accepted modes (not thresholded).
  double re_lambda = 0.0;
  cplx lambda = 0.0;
};

struct MaxGrowth {
  std::optional<double> alpha_star;
  /// Re lambda at alpha_star, 0 when nothing is unstable.
  double lambda_star = 0.0;
  cplx lambda = 0.0;
  /// Best sample after refinement, not thresholded.
  GrowthSample best;
  std::vector<GrowthSample> samples;
};

/// Leading Re lambda at one wavenumber (-inf when no mode survives filtering).
GrowthSample leading_growth(const ShearProfile& p, double alpha, double nu, const GridPtr& grid,
                            const OsOptions& opt = {});

/// Samples alpha log-uniformly on [a_lo, a_hi], refines the best sample by
/// golden-section in log alpha.
MaxGrowth max_growth(const ShearProfile& p, double nu, double a_lo, double a_hi,
                     const GridSpec& spec, const ScanOptions& opt = {});

struct GrowthRow {
  double nu = 0.0;
  std::optional<double> alpha_star;
  double growth = 0.0;  // lambda_{nu}: max over alpha, 0 when stable
  cplx lambda = 0.0;
  int N = 0;
};

struct GrowthScan {
  std::vector<GrowthRow> rows;
  /// ln growth vs ln nu and ln alpha_star vs ln nu over the unstable rows.
  std::optional<LineFit> growth_fit;
  std::optional<LineFit> alpha_fit;
  /// max over rows of nu^{-1/4} growth.
  double gamma0 = 0.0;
  /// max / min of nu^{-1/4} growth over the unstable rows (1 when < 2 rows).
  double gamma0_spread = 1.0;
};

/// Requires the nu grid to span at least two decades.
GrowthScan estimate_gamma0(const ShearProfile& p, const std::vector<double>& nus,
                           const GridSpec& spec, const ScanOptions& opt = {});

struct NeutralPoint {
  double R = 0.0;
  std::optional<double> alpha_low;
  std::optional<double> alpha_up;
  std::string note;
};

struct NeutralCurve {
  std::vector<NeutralPoint> points;
  std::optional<LineFit> low_fit;  // ln alpha_low vs ln R
  std::optional<LineFit> up_fit;   // ln alpha_up vs ln R
};

/// Two neutral crossings per R (nu = R^{-2}) by bisection on the sign of the
/// leading Re lambda.
NeutralCurve trace_neutral_curve(const ShearProfile& p, const std::vector<double>& Rs,
                                 const GridSpec& spec, const ScanOptions& opt = {});

/// Critical Reynolds number: bisection in ln R on the sign of max growth.
/// Empty when [R_lo, R_hi] does not bracket the onset.
std::optional<double> critical_reynolds(const ShearProfile& p, double R_lo, double R_hi,
                                        const GridSpec& spec, const ScanOptions& opt = {},
                                        double rtol = 1e-2);

/// Two-mode family {omega at +alpha, conjugate at -alpha}.
struct ModeFamily {
  double alpha = 0.0;
  cplx lambda = 0.0;
  double amplitude = 0.0;
  std::vector<GridFunction> omega;
  std::vector<GridFunction> phi;
};

/// Scales the mode so the physical velocity of mode + c.c. has sup norm
/// `amplitude`, and rotates it by e^{i phase}.
ModeFamily build_growing_mode(const EigenSolution& sol, double amplitude, double phase = 0.0);

struct ModeStructure {
  bool ok = false;
  std::string note;
  double z_c = 0.0;            // U(z_c) = Re c
  /// omega_v = omega - U'' phi / (U - c) is the viscous part of the vorticity.
  double delta_bl_fit = 0.0;   // 1/e point of |omega_v| from the wall
  double delta_cr_fit = 0.0;   // upper 1/e half-width of the |omega_v| bump near z_c
  double delta_bl_pred = 0.0;  // (alpha |U(0) - c| R)^{-1/2}
  double delta_bl_pred_alt = 0.0;  // same with U'(0) in place of U(0)
  double delta_cr_pred = 0.0;  // (alpha R)^{-1/3}
  double nu18 = 0.0;
  /// Fitted exponential decay rate of |phi| in the far field (inviscid: alpha).
  double inviscid_tail_rate = 0.0;
};

ModeStructure mode_structure(const ShearProfile& p, const EigenSolution& sol);

}  // namespace tsbl
