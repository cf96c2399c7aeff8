#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "tsbl/grid.hpp"
#include "tsbl/norms.hpp"
#include "tsbl/profiles.hpp"

namespace tsbl {

/// L_alpha on one wavenumber, spectral back-end. For alpha != 0 the state is
/// phi at the interior nodes (clamped basis, so phi = phi' = 0 at the wall by
/// construction) and omega = Delta_a phi. For alpha = 0 the state is the mean
/// velocity u = phi' at the interior nodes, with u = 0 at the wall and at
/// infinity, and omega = u'.
class ModeOperator {
 public:
  ModeOperator(const ShearProfile& p, double alpha, double nu, GridPtr grid);

  double alpha() const { return alpha_; }
  double nu() const { return nu_; }
  const GridPtr& grid() const { return grid_; }
  bool is_mean() const { return alpha_ == 0.0; }
  Eigen::Index dim() const { return m_; }

  /// State whose vorticity matches omega at the interior nodes; the wall
  /// vorticity is whatever no-slip dictates.
  Eigen::VectorXcd state_from_omega(const Eigen::VectorXcd& omega) const;
  Eigen::VectorXcd omega(const Eigen::VectorXcd& s) const;
  Eigen::VectorXcd dz_omega(const Eigen::VectorXcd& s) const;
  Eigen::VectorXcd phi(const Eigen::VectorXcd& s) const;
  /// v1 = d_z phi (the mean velocity for alpha = 0).
  Eigen::VectorXcd v1(const Eigen::VectorXcd& s) const;

  /// Maps a vorticity forcing r (all nodes) to the state equation
  /// ds/dt = M s + forcing_to_state(r).
  Eigen::VectorXcd forcing_to_state(const Eigen::VectorXcd& r) const;

  /// ds/dt = M s.
  const Eigen::MatrixXcd& generator() const { return M_; }
  /// Step matrix of the L-stable three-stage SDIRK scheme for ds/dt = M s.
  /// Cached per step size; safe to call from several threads.
  const Eigen::MatrixXcd& step(double h) const;

 private:
  double alpha_, nu_;
  GridPtr grid_;
  Eigen::Index m_;
  Eigen::MatrixXd B_;        // interior rows of Delta_a on the clamped basis
  Eigen::MatrixXd Wfull_;    // omega at all nodes from the state
  Eigen::MatrixXd DWfull_;   // d_z omega at all nodes
  Eigen::MatrixXd Vfull_;    // v1 at all nodes
  Eigen::MatrixXd Pfull_;    // phi at all nodes (alpha != 0)
  Eigen::PartialPivLU<Eigen::MatrixXd> luB_;
  Eigen::MatrixXcd M_;
  mutable std::mutex mx_;
  mutable std::map<double, std::unique_ptr<Eigen::MatrixXcd>> steps_;
};

struct PropagateOptions {
  /// Snapshot times in [0, t_end]; when empty, `snapshots` uniform times.
  std::vector<double> times;
  int snapshots = 41;
  /// Adds geometric snapshot times in (0, t_end/10] for short-time probes.
  bool cluster_at_zero = false;
  BLNormParams params;
};

struct PropagatorRun {
  double alpha = 0.0;
  double nu = 0.0;
  double dt = 0.0;
  BLNormParams params;
  std::vector<double> t;
  std::vector<GridFunction> omega;
  std::vector<GridFunction> dz_omega;
  /// ||omega(t)||_{b,g,1} and ||d_z omega(t)||_{b,g,1}.
  std::vector<double> norm;
  std::vector<double> dz_norm;
};

/// Default step: 0.1 over the largest advective frequency |alpha| U_+ + sqrt(nu) alpha^2.
double default_dt(const ShearProfile& p, double alpha, double nu);

/// Advances omega0 under d_t omega = L_a omega with step dt > 0.
PropagatorRun propagate(const ModeOperator& op, const GridFunction& omega0, double t_end,
                        double dt, const PropagateOptions& opt = {});
/// Same; dt <= 0 selects default_dt.
PropagatorRun propagate(const ShearProfile& p, const GridFunction& omega0, double alpha, double nu,
                        double t_end, double dt, const PropagateOptions& opt = {});

/// C_{nu,a} e^{g1 nu^{1/4} t} e^{-a^2 sqrt(nu) t / 4}.
double semigroup_envelope(double nu, double alpha, double gamma1, double t);

struct BoundFit {
  /// max over snapshots of trace / (envelope ||omega0||).
  double C = 0.0;
  double t_at_max = 0.0;
  /// Ratio at every snapshot (0 where the envelope is infinite).
  std::vector<double> ratio;
};

BoundFit verify_semigroup_bound(const PropagatorRun& run, double gamma1);
/// Envelope with the extra factor nu^{-1/8} + (sqrt(nu) t)^{-1/2}.
BoundFit verify_derivative_bound(const PropagatorRun& run, double gamma1);

}  // namespace tsbl
