#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsbl/expansion.hpp"
#include "tsbl/grid.hpp"
#include "tsbl/norms.hpp"
#include "tsbl/numerics.hpp"
#include "tsbl/profiles.hpp"
#include "tsbl/stability.hpp"

namespace tsbl {

struct NonlinOptions {
  double p_exp = 1.0;
  /// Velocity sup of the seed; unset means nu^p_exp.
  std::optional<double> seed;
  double t_end = 0.0;
  int N_modes = 16;
  double theta0 = 0.1;
  /// <= 0 selects default_dt at alpha_nu.
  double dt = 0.0;
  /// Diagnostics every this many steps.
  int sample_every = 10;
  /// Stop when ||v||_inf exceeds blowup_factor * seed.
  double blowup_factor = 1e6;
  /// Flag when the energy in |n| > 2 N_modes / 3 exceeds this fraction.
  double tail_tol = 1e-3;
  int workers = 1;
  BLNormParams params;
  /// Extra vorticity forcing for mode n >= 0 at time t (empty: none).
  std::function<Eigen::VectorXcd(int n, double t)> forcing;
  /// Checkpoint file written every checkpoint_every steps (0 disables).
  std::string checkpoint_path;
  int checkpoint_every = 0;
  /// Resume from this checkpoint instead of seeding.
  std::string restart_from;
};

struct NonlinSample {
  double t = 0.0;
  double v_inf = 0.0;      // sup over x, z of |v|
  double omega_inf = 0.0;  // sup over x, z of |omega - omega_bl|
  double triple = 0.0;     // |||omega|||
  double running_rate = 0.0;  // d ln v_inf / dt over the last interval
  double tail_ratio = 0.0;
  double enstrophy = 0.0;
};

struct EnstrophyBudget {
  /// max over steps |dE - dt/2 (r_k + r_{k+1})| / (dt max |r|), E = 1/2 sum_n int |omega_n|^2.
  double closure = 0.0;
  double dissipation = 0.0;  // last-step values of the rate terms
  double boundary_flux = 0.0;
  double production = 0.0;
  double transfer = 0.0;     // nonlinear term (sums to ~0)
};

struct NonlinRun {
  double nu = 0.0;
  double alpha_nu = 0.0;
  cplx lambda_nu = 0.0;
  double p_exp = 1.0;
  double seed = 0.0;
  double theta0 = 0.1;
  double dt = 0.0;
  int N_modes = 0;
  double T1 = 0.0;
  std::vector<NonlinSample> series;
  bool blew_up = false;
  bool under_resolved = false;
  double max_tail_ratio = 0.0;
  /// max over the run of |omega - omega_bl|_inf when the seed is zero.
  double stationarity_drift = 0.0;
  EnstrophyBudget budget;
  std::string stop_reason;
  /// Final modes n = 0..N_modes, tagged with alpha_n.
  std::vector<GridFunction> omega;
};

/// Evolves the perturbation omega about U under
///   (d_t - L) omega + u . grad omega = forcing
/// on the lattice alpha_n = n alpha_nu, |n| <= N_modes, seeded with the growing
/// mode of `sol` at velocity sup `seed`. Linear part by the SDIRK step matrix,
/// nonlinear part by exact mode convolution with second-order extrapolation
/// inside a trapezoidal Duhamel step. Requires N_modes >= 8.
NonlinRun run_experiment(const ShearProfile& p, const EigenSolution& sol,
                         const NonlinOptions& opt);

struct InstabilityMeasure {
  LineFit fit;  // ln v_inf vs t over the linear phase
  double growth_rate = 0.0;
  /// (level, crossing time); empty time when never crossed.
  std::vector<std::pair<double, std::optional<double>>> crossings;
  double final_omega = 0.0;
  /// max |omega - omega_bl| >= 0.1 sup |U'|.
  bool reached_order_one = false;
};

/// Linear phase: samples with v_inf < linear_cap, default 1e-2 nu^{5/8}.
/// Throws NumericalError when fewer than three samples qualify. Levels default
/// to {nu^{3/4}, nu^{5/8}}.
InstabilityMeasure measure_instability(const NonlinRun& run, std::vector<double> levels = {},
                                       std::optional<double> linear_cap = std::nullopt,
                                       double dU_sup = 1.0);

/// Crossing time of `level` by linear interpolation of ln v_inf.
std::optional<double> crossing_time(const std::vector<NonlinSample>& s, double level);

}  // namespace tsbl
