#pragma once

#include <vector>

#include "tsbl/grid.hpp"
#include "tsbl/norms.hpp"

namespace tsbl {

enum class EllipticMethod { GreenQuadrature, OperatorSolve };

/// Solution of phi'' - alpha^2 phi = f on z >= 0 with phi(0) = 0, decaying.
struct EllipticSolveResult {
  GridFunction phi;
  GridFunction dphi;
  GridFunction d2phi;
  double alpha = 0.0;
  EllipticMethod method = EllipticMethod::OperatorSolve;
};

/// Both routes of the half-line solve and their sup-norm discrepancy.
struct HalflineSolve {
  EllipticSolveResult green;
  EllipticSolveResult oper;
  double agreement = 0.0;  // max |phi_green - phi_oper| over finite nodes
};

/// Explicit Green-function quadrature
///   phi(z) = -1/(2|alpha|) int_0^inf (e^{-|alpha||x-z|} - e^{-|alpha|(x+z)}) f(x) dx,
/// composite Gauss-Legendre in the computational variable, split at x = z.
EllipticSolveResult solve_halfline_green(const GridFunction& f, double alpha);
/// Collocation solve with Dirichlet rows at both ends.
EllipticSolveResult solve_halfline_operator(const GridFunction& f, double alpha);
/// Runs both routes. alpha = 0 is a DomainError.
HalflineSolve solve_halfline(const GridFunction& f, double alpha);

/// alpha = 0 mode of -phi'' = omega: v1 = phi' = int_z^inf omega, phi(0) = 0.
struct ZeroModeSolve {
  GridFunction phi;
  GridFunction v1;
};
ZeroModeSolve solve_zero_mode(const GridFunction& omega);

struct EstimateConstant {
  double C = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  /// False when the run violates the estimate's hypothesis (bound not asserted).
  bool hypothesis_ok = true;
};

/// max(alpha^2 ||phi||_b, |alpha| ||phi'||_b, ||phi''||_b) / ||f||_b, with
/// ||.||_b the e^{beta z}-weighted sup norm.
EstimateConstant check_estimate_A1(const GridFunction& f, double alpha, double beta);
/// (|alpha| ||phi||_{b,0} + ||phi'||_{b,0}) / ||f||_{b,g,1}.
EstimateConstant check_estimate_A2(const GridFunction& f, double alpha, const BLNormParams& params);
/// (alpha^2 ||phi||_{b,0} + |alpha| ||phi'||_{b,0} + ||phi''||_{b,g,1}) / ||alpha f||_{b,g,1}.
EstimateConstant check_estimate_A2bis(const GridFunction& f, double alpha,
                                      const BLNormParams& params);

/// Per-mode inversion of -Delta phi = omega with v = grad^perp phi:
/// v1 = d_z phi, v2 = -i alpha phi.
struct Laplace2D {
  std::vector<GridFunction> phi, v1, v2;
  /// Fitted constants of the three velocity estimates (nonzero modes only).
  double C_velocity = 0.0;     // (||phi|| + ||v1|| + ||v2||)_{b,0} / ||w||_{b,g,1}
  double C_derivative = 0.0;   // derivative bound over ||w|| + ||d_x w||
  double C_wall_weight = 0.0;  // ||psi^{-1} v2||_{b,0} over ||w|| + ||d_x w||, psi = z/(1+z)
  /// max |v2(0)| over the family.
  double wall_normal_velocity = 0.0;
};

Laplace2D invert_laplace_2d(const std::vector<GridFunction>& omega, const BLNormParams& params);

}  // namespace tsbl
