#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace tsbl {

using cplx = std::complex<double>;

enum class Backend { Spectral, FiniteDifference };
enum class Mapping { Algebraic, Truncated };

std::string to_string(Backend b);
std::string to_string(Mapping m);
Backend backend_from_string(const std::string& s);

struct GridSpec {
  Backend backend = Backend::Spectral;
  Mapping mapping = Mapping::Algebraic;
  /// Number of intervals; the grid has N + 1 nodes.
  int N = 160;
  /// Algebraic map scale: z = L (1 + xi) / (1 - xi).
  double L = 2.0;
  /// Truncated domain [0, z_max] with tanh clustering of strength `cluster`.
  double z_max = 50.0;
  double cluster = 3.0;
};

/// Derivatives of phi with respect to z, for phi vanishing together with its
/// first derivative at both ends. Unknowns are phi at the interior nodes;
/// rows cover every node (boundary rows included).
struct ClampedOperators {
  std::array<Eigen::MatrixXd, 5> P;  // P[k]: (N+1) x (N-1), k-th derivative
};

/// Discretization of the half line z >= 0. Nodes are ordered by increasing z,
/// node 0 is the wall. Immutable after construction.
class SemiInfiniteGrid {
 public:
  explicit SemiInfiniteGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  Backend backend() const { return spec_.backend; }
  Eigen::Index size() const { return z_.size(); }
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& xi() const { return xi_; }
  /// True when the last node sits at z = infinity (algebraic map).
  bool has_infinity_node() const { return spec_.mapping == Mapping::Algebraic; }
  /// Largest finite coordinate.
  double z_far() const;
  /// Horizon used by the spurious-mode tail test.
  double filter_horizon() const;
  bool is_finite_node(Eigen::Index k) const { return std::isfinite(z_[k]); }

  /// k-th derivative operator, k = 1..4.
  Eigen::MatrixXd dense(int k) const;
  const Eigen::SparseMatrix<double>& sparse(int k) const;
  Eigen::VectorXcd apply(int k, const Eigen::VectorXcd& f) const;
  Eigen::VectorXd apply(int k, const Eigen::VectorXd& f) const;
  /// d/dxi on the Chebyshev nodes (spectral back-end only).
  const Eigen::MatrixXd& dense_xi() const;

  /// Quadrature weights for integral_0^inf f dz (zero at the infinity node).
  const Eigen::VectorXd& weights() const { return w_; }

  /// Clamped-basis operators (spectral back-end only).
  const ClampedOperators& clamped() const;

  /// Interpolates nodal values at z (exact at nodes).
  cplx interpolate(const Eigen::VectorXcd& values, double z) const;
  /// Dense interpolation matrix from nodal values to the points zs.
  Eigen::MatrixXd interpolation_matrix(const Eigen::VectorXd& zs) const;
  Eigen::VectorXcd interpolate(const Eigen::VectorXcd& values, const Eigen::VectorXd& zs) const;

  /// Map between the computational variable xi in [-1, 1] and z.
  double z_of_xi(double xi) const;
  double dz_dxi(double xi) const;
  double xi_of_z(double z) const;

  /// Number of nodes with 0 < z < delta.
  int nodes_below(double delta) const;

  /// Cell midpoints (in the computational variable) and the matrix that
  /// interpolates nodal values onto them. Used by sup norms.
  const Eigen::VectorXd& midpoints() const { return mid_z_; }
  const Eigen::MatrixXd& midpoint_matrix() const { return mid_M_; }

 private:
  template <class Sink>
  void interp_row(double zq, Sink&& put) const;

  GridSpec spec_;
  Eigen::VectorXd z_, xi_, w_;
  std::array<Eigen::VectorXd, 5> g_;  // d^k xi / dz^k at nodes (k = 1..4)
  std::array<Eigen::MatrixXd, 5> dense_;
  Eigen::MatrixXd dxi_;
  std::array<Eigen::SparseMatrix<double>, 5> sparse_;
  Eigen::VectorXd bary_;
  Eigen::VectorXd mid_z_;
  Eigen::MatrixXd mid_M_;
  std::unique_ptr<ClampedOperators> clamped_;
};

using GridPtr = std::shared_ptr<const SemiInfiniteGrid>;

/// The coordinate map of a grid with this spec, without building it.
double map_z(const GridSpec& spec, double xi);
/// Number of nodes with 0 < z < delta for this spec.
int nodes_below(const GridSpec& spec, double delta);
/// Smallest N (by 25% steps from spec.N) with at least `count` nodes below delta.
int required_N(GridSpec spec, double delta, int count);

/// Validates the parameters and builds the grid. Throws ConfigError.
GridPtr build_grid(const GridSpec& spec);

/// Complex nodal values on a grid, optionally tagged with a wavenumber.
struct GridFunction {
  GridPtr grid;
  Eigen::VectorXcd values;
  std::optional<double> alpha;

  GridFunction() = default;
  GridFunction(GridPtr g, Eigen::VectorXcd v, std::optional<double> a = std::nullopt);

  Eigen::Index size() const { return values.size(); }
  cplx operator()(double z) const { return grid->interpolate(values, z); }
  bool finite() const;
};

/// Samples f at the nodes; the infinity node receives f_inf.
GridFunction sample(const GridPtr& g, const std::function<cplx(double)>& f, cplx f_inf = 0.0,
                    std::optional<double> alpha = std::nullopt);

/// Finite-difference weights (Fornberg) for derivatives 0..m at x0 on the
/// stencil points xs. Result(i, k) is the weight of xs[i] for derivative k.
Eigen::MatrixXd fornberg_weights(double x0, const Eigen::VectorXd& xs, int m);

}  // namespace tsbl
