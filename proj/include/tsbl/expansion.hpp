#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsbl/grid.hpp"
#include "tsbl/linprop.hpp"
#include "tsbl/norms.hpp"
#include "tsbl/profiles.hpp"
#include "tsbl/stability.hpp"

namespace tsbl {

/// Stationary: the base flow is kept steady by forcing, so S vanishes.
/// TimeDependent: the base flow diffuses, U_s(sqrt(nu) t, z).
enum class ProfileMode { Stationary, TimeDependent };

std::string to_string(ProfileMode m);
ProfileMode profile_mode_from_string(const std::string& s);

/// Stream function and vorticity of one Fourier mode n (wavenumber n alpha_nu),
/// with omega = Delta phi, all at the grid nodes.
struct ModeFields {
  int n = 0;
  Eigen::VectorXcd phi, dphi, omega, domega;

  ModeFields conj() const;
  ModeFields scaled(cplx a) const;
};

/// Inverts Delta_{n alpha_nu} phi = omega with phi(0) = 0 (for n = 0, phi' -> 0
/// at infinity instead).
ModeFields mode_fields(const GridFunction& omega, int n, double alpha_nu);

/// Fourier coefficient at n1 + n2 of u . grad w~, u = grad^perp phi of mode a,
/// w~ the vorticity of mode b:
///   i alpha_nu (n2 phi_a' omega_b - n1 phi_a omega_b').
Eigen::VectorXcd apply_Q(const ModeFields& a, const ModeFields& b, double alpha_nu);
GridFunction apply_Q(const GridFunction& omega_k, int n1, const GridFunction& omega_l, int n2,
                     double alpha_nu);

/// U_s(sqrt(nu) t, z) - U(z) and its second z-derivative difference at the
/// grid nodes, tabulated in t and interpolated linearly.
class ShearDeviation {
 public:
  ShearDeviation(const ShearProfile& p, GridPtr grid, double nu, ProfileMode mode, double t_max,
                 int table = 200);
  ProfileMode mode() const { return mode_; }
  double nu() const { return nu_; }
  /// Values at time t (zero vectors in stationary mode or at t = 0).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> at(double t) const;

  /// nu^{-1/8} [dU (i alpha_n omega) + u2 d2U], u2 = -i alpha_n phi.
  Eigen::VectorXcd apply(const ModeFields& f, double alpha_nu, double t) const;

 private:
  ProfileMode mode_;
  double nu_;
  GridPtr grid_;
  std::vector<double> t_;
  std::vector<Eigen::VectorXd> dU_, d2U_;
};

/// S applied to one mode, with the evolved profile evaluated directly.
GridFunction apply_S(const GridFunction& omega, int n, double alpha_nu, double t,
                     const ShearProfile& p, double nu, ProfileMode mode);

struct LadderOptions {
  ProfileMode mode = ProfileMode::TimeDependent;
  /// Upper bound on the Duhamel step; <= 0 selects default_dt at alpha_nu.
  double dt = 0.0;
  /// Velocity sup of the seed pair omega_{0,+-1}.
  double amplitude = 1.0;
  int table = 200;
  int workers = 1;
  BLNormParams params;
};

/// omega_{j,n} for n >= 0 at every snapshot; negative n by conjugation.
struct LadderEntry {
  int j = 0;
  int n = 0;
  std::vector<Eigen::VectorXcd> state;
  std::vector<ModeFields> fields;
  std::vector<double> norm;     // ||omega_{j,n}||_{b,g,1}
  std::vector<double> dz_norm;  // ||d_z omega_{j,n}||_{b,g,1}
};

struct ModeLadder {
  double p_exp = 1.0;
  int p8 = 8;  // 8 p_exp
  int M = 0;
  double nu = 0.0;
  double alpha_nu = 0.0;
  cplx lambda_nu = 0.0;
  double gamma0 = 0.0;  // nu^{-1/4} Re lambda_nu
  ProfileMode mode = ProfileMode::TimeDependent;
  double dt = 0.0;
  BLNormParams params;
  GridPtr grid;
  std::shared_ptr<const ShearProfile> profile;
  std::vector<double> t;
  /// Nonnegative support of each level, from index arithmetic alone.
  std::vector<std::vector<int>> support;
  std::map<std::pair<int, int>, LadderEntry> entries;
  /// Set when the construction stopped early; levels >= failed_level are missing.
  std::optional<std::string> failure;
  int failed_level = -1;

  bool complete() const { return !failure; }
  /// nullptr outside the support.
  const LadderEntry* entry(int j, int n) const;
  /// Fields of omega_{j,n} at snapshot k (conjugated for n < 0), zero outside the support.
  ModeFields fields(int j, int n, std::size_t k) const;
  /// Largest |n| that any level can reach.
  int max_mode() const;
};

/// Nonnegative supports of levels 0..M: level 0 is {1}; level j collects
/// level j-1 (time-dependent mode only) and n1 + n2 over k + l + 8p = j.
std::vector<std::vector<int>> ladder_support(int p8, int M, ProfileMode mode);

/// Duhamel construction of omega_j for 0 <= j <= M. omega_0 = e^{lambda t} times
/// the seed eigenmode, and for j >= 1
///   (d_t - L_{a_n}) omega_{j,n} = -(S omega_{j-1,n} + sum_{k+l+8p=j} sum_{n1+n2=n} Q(omega_{k,n1}, omega_{l,n2}))
/// with zero data, by trapezoidal quadrature in s on a uniform step that hits
/// every snapshot time. 8 p_exp must be a positive integer.
ModeLadder build_ladder(const ShearProfile& p, double p_exp, int M, const EigenSolution& sol,
                        const std::vector<double>& t_grid, const LadderOptions& opt = {});

struct InductiveBound {
  int j = 0, a = 0, b = 0;
  /// max over snapshots of the ratio.
  double C0 = 0.0;
  /// sup of the ratio over all snapshots / sup over t <= t_end / 2.
  double uniformity = 0.0;
  bool uniform = false;
  std::vector<double> ratio;
};

/// Ratios ||d_x^a d_z^b omega_j|| / (nu^{a/8 - b/8} nu^{-[j/8p]/4} e^{g0 (1 + j/8p) nu^{1/4} t})
/// for a, b in {0, 1}; uniform when the uniformity factor is <= max_factor.
std::vector<InductiveBound> check_inductive_bounds(const ModeLadder& ladder,
                                                   std::optional<double> gamma0 = std::nullopt,
                                                   double max_factor = 3.0);

struct ResidualTerm {
  std::string label;  // "S" or "Q(k,l)"
  int k = -1, l = -1;
  double norm = 0.0;
};

struct ResidualReport {
  double t = 0.0;
  std::vector<ResidualTerm> terms;
  double total = 0.0;         // ||R_app||, sup over modes
  double sum_of_parts = 0.0;
  double envelope = 0.0;      // nu^{1/4} sum_{j=M+1}^{2M} nu^{-[j/8p]/4} (nu^p e^{g0 nu^{1/4} t})^{1+j/8p}
  double omega_app = 0.0;     // ||omega_app||
  /// omega_app and R_app for n >= 0, tagged with alpha_n.
  std::vector<GridFunction> omega_app_modes;
  std::vector<GridFunction> residual_modes;
};

/// omega_app = nu^p sum_{j<=M} nu^{j/8} omega_j and
/// R_app = nu^{p+(M+1)/8} S omega_M + sum_{k,l<=M, k+l+8p>M} nu^{2p+(k+l)/8} Q(omega_k, omega_l)
/// at snapshot k.
ResidualReport assemble_and_residual(const ModeLadder& ladder, std::size_t snapshot);

std::vector<ResidualReport> residual_trace(const ModeLadder& ladder);

}  // namespace tsbl
