#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsbl/grid.hpp"

namespace tsbl {

/// Parameters of the boundary-layer norm family ||.||_{beta,gamma,p}.
struct BLNormParams {
  double beta = 0.25;
  double gamma = 1.0;
  double nu = 1e-6;
  int p = 1;
  int P_weight = 4;

  /// Sublayer thickness gamma * nu^(1/8).
  double delta() const;
  void validate() const;
  BLNormParams with_p(int q) const {
    BLNormParams c = *this;
    c.p = q;
    return c;
  }
};

/// 1 + sum_{q=1..p} delta^{-q} / (1 + (z/delta)^{P-1+q}).
double bl_weight(double z, const BLNormParams& params);

/// sup_z of e^{beta z} |f(z)| / bl_weight(z), evaluated on nodes and
/// interpolated cell midpoints with z <= grid.filter_horizon().
double bl_norm(const GridFunction& f, const BLNormParams& params);
/// Same, on raw nodal values.
double bl_norm(const SemiInfiniteGrid& grid, const Eigen::VectorXcd& f, const BLNormParams& params);

struct AlgebraCheck {
  double lhs = 0.0;  // ||f g||_{p+q}
  double rhs = 0.0;  // ||f||_p ||g||_q
  bool holds = false;
  /// Best constant K with lhs <= K rhs for every pair on this grid:
  /// sup_z w_p w_q / (w_{p+q} e^{beta z}).
  double sharp_constant = 0.0;
};

AlgebraCheck bl_norm_algebra_check(const GridFunction& f, const GridFunction& g,
                                   const BLNormParams& params, int p, int q);

/// sup over the family of bl_norm (the sup-over-wavenumbers norm).
double sup_alpha_norm(const std::vector<GridFunction>& family, const BLNormParams& params);

struct TripleNorm {
  double value = 0.0;
  double omega = 0.0;  // ||w||
  double dx = 0.0;     // ||d_x w||
  double dz = 0.0;     // ||d_z w||
};

/// |||w||| = ||w|| + nu^{1/8} ||d_x w|| + nu^{1/8} ||d_z w||, all in the
/// sup-over-wavenumbers sense. Members must carry their alpha tag. When dz is
/// empty the z-derivatives come from the grid operators.
TripleNorm triple_norm(const std::vector<GridFunction>& omega, double nu,
                       const BLNormParams& params,
                       const std::vector<GridFunction>& dz = {});

/// C_{nu,alpha} = 1 + alpha^2 nu^{-1/4} for |alpha| < cutoff, else 1.
double c_nu_alpha(double nu, double alpha, double cutoff = 1.0);

struct TimeScales {
  double p_exp = 1.0;
  double tau = 0.3;
  double gamma0 = 1.0;
  double epsilon = 0.01;
  double theta0 = 0.1;
  double nu = 1e-4;
  /// Re lambda_0 used for T_nu; defaults to gamma0 nu^{1/4} when unset.
  std::optional<double> re_lambda0;

  double T_star = 0.0;
  double T_1 = 0.0;
  double T_nu = 0.0;
};

/// Fills T_star, T_1, T_nu (clamped at 0). Throws DomainError for gamma0 <= 0.
TimeScales critical_times(TimeScales ts);

}  // namespace tsbl
