#include "tsbl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsbl/errors.hpp"

namespace tsbl {

std::string to_string(Backend b) { return b == Backend::Spectral ? "spectral" : "fd"; }
std::string to_string(Mapping m) { return m == Mapping::Algebraic ? "algebraic" : "truncated"; }

Backend backend_from_string(const std::string& s) {
  if (s == "spectral") return Backend::Spectral;
  if (s == "fd" || s == "finite-difference") return Backend::FiniteDifference;
  throw ConfigError("unknown back-end '" + s + "'");
}

Eigen::MatrixXd fornberg_weights(double x0, const Eigen::VectorXd& xs, int m) {
  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
  double c1 = 1.0, c4 = xs[0] - x0;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

// Chebyshev differentiation matrix on ascending nodes xi_k = -cos(pi k / N).
Eigen::MatrixXd cheb_diff(int N) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N + 1, N + 1);
  auto theta = [N](int k) { return std::numbers::pi * k / N; };
  for (int i = 0; i <= N; ++i) {
    const double ci = (i == 0 || i == N) ? 2.0 : 1.0;
    for (int j = 0; j <= N; ++j) {
      if (i == j) continue;
      const double cj = (j == 0 || j == N) ? 2.0 : 1.0;
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      // xi_i - xi_j via a cancellation-free product of sines.
      const double diff = 2.0 * std::sin(0.5 * (theta(i) + theta(j))) * std::sin(0.5 * (theta(i) - theta(j)));
      D(i, j) = ci / cj * sign / diff;
    }
  }
  for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
  return D;
}

// Clenshaw-Curtis weights on [-1, 1] (same node set as cheb_diff).
Eigen::VectorXd clenshaw_curtis(int N) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(N + 1);
  for (int k = 0; k <= N; ++k) {
    const double th = std::numbers::pi * k / N;
    double s = 0.0;
    for (int j = 1; j <= N / 2; ++j) {
      const double b = (2 * j == N) ? 1.0 : 2.0;
      s += b / (4.0 * j * j - 1.0) * std::cos(2.0 * j * th);
    }
    const double c = (k == 0 || k == N) ? 1.0 : 2.0;
    w[k] = c / N * (1.0 - s);
  }
  return w;
}

}  // namespace

SemiInfiniteGrid::SemiInfiniteGrid(const GridSpec& spec) : spec_(spec) {
  const int N = spec.N;
  const int n = N + 1;
  z_.resize(n);
  xi_.resize(n);
  for (auto& g : g_) g = Eigen::VectorXd::Zero(n);

  if (spec.backend == Backend::Spectral) {
    for (int k = 0; k < n; ++k) xi_[k] = std::sin(std::numbers::pi * (2.0 * k - N) / (2.0 * N));
    xi_[0] = -1.0;
    xi_[N] = 1.0;
  } else {
    for (int k = 0; k < n; ++k) xi_[k] = -1.0 + 2.0 * k / N;
  }

  // Node coordinates and d^k xi / dz^k.
  if (spec.mapping == Mapping::Algebraic) {
    const double L = spec.L;
    for (int k = 0; k < n; ++k) {
      if (k == N) {
        z_[k] = std::numeric_limits<double>::infinity();
        continue;  // all map derivatives vanish at infinity
      }
      z_[k] = L * (1.0 + xi_[k]) / (1.0 - xi_[k]);
      const double s = z_[k] + L;
      g_[1][k] = 2.0 * L / (s * s);
      g_[2][k] = -4.0 * L / (s * s * s);
      g_[3][k] = 12.0 * L / (s * s * s * s);
      g_[4][k] = -48.0 * L / (s * s * s * s * s);
    }
  } else {
    const double zm = spec.z_max, a = spec.cluster;
    for (int k = 0; k < n; ++k) {
      const double u = 0.5 * (xi_[k] + 1.0);
      if (a < 1e-8) {
        z_[k] = zm * u;
        g_[1][k] = 2.0 / zm;
        continue;
      }
      const double T = std::tanh(a);
      z_[k] = zm * (1.0 + std::tanh(a * (u - 1.0)) / T);
      const double w = (z_[k] / zm - 1.0) * T;
      const double q = 1.0 - w * w;
      const double dk[5] = {0.0, 1.0 / q, 2.0 * w / (q * q), (2.0 + 6.0 * w * w) / (q * q * q),
                            (24.0 * w + 24.0 * w * w * w) / (q * q * q * q)};
      double f = 2.0 / a;
      for (int m = 1; m <= 4; ++m) {
        f *= T / zm;
        g_[m][k] = f * dk[m];
      }
    }
    z_[0] = 0.0;
    z_[N] = zm;
  }
  z_[0] = 0.0;

  if (spec.backend == Backend::Spectral) {
    const Eigen::MatrixXd Dxi = cheb_diff(N);
    dxi_ = Dxi;
    dense_[1] = g_[1].asDiagonal() * Dxi;
    for (int k = 2; k <= 4; ++k) dense_[k] = dense_[1] * dense_[k - 1];

    const Eigen::VectorXd cc = clenshaw_curtis(N);
    w_.resize(n);
    for (int k = 0; k < n; ++k) w_[k] = (g_[1][k] > 0) ? cc[k] / g_[1][k] : 0.0;

    bary_.resize(n);
    for (int k = 0; k < n; ++k) bary_[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == N) ? 0.5 : 1.0);

    // Clamped basis phi = (1 - xi^2) q with q(+-1) = 0.
    clamped_ = std::make_unique<ClampedOperators>();
    std::array<Eigen::MatrixXd, 5> Dq;
    Dq[0] = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 4; ++k) Dq[k] = Dxi * Dq[k - 1];
    for (auto& m : Dq) m = m.middleCols(1, N - 1).eval();
    const Eigen::VectorXd x = xi_;
    const Eigen::VectorXd s = (1.0 - x.array() * x.array()).matrix();
    auto X = x.asDiagonal();
    auto S = s.asDiagonal();
    std::array<Eigen::MatrixXd, 5> Pxi;
    Pxi[0] = S * Dq[0];
    Pxi[1] = S * Dq[1] - 2.0 * (X * Dq[0]);
    Pxi[2] = S * Dq[2] - 4.0 * (X * Dq[1]) - 2.0 * Dq[0];
    Pxi[3] = S * Dq[3] - 6.0 * (X * Dq[2]) - 6.0 * Dq[1];
    Pxi[4] = S * Dq[4] - 8.0 * (X * Dq[3]) - 12.0 * Dq[2];
    const Eigen::VectorXd inv_s = (1.0 / s.segment(1, N - 1).array()).matrix();
    for (auto& m : Pxi) m = m * inv_s.asDiagonal();
    const auto& g1 = g_[1];
    const auto& g2 = g_[2];
    const auto& g3 = g_[3];
    const auto& g4 = g_[4];
    auto& P = clamped_->P;
    P[0] = Pxi[0];
    P[1] = g1.asDiagonal() * Pxi[1];
    P[2] = (g1.array().square()).matrix().asDiagonal() * Pxi[2] + g2.asDiagonal() * Pxi[1];
    P[3] = (g1.array().cube()).matrix().asDiagonal() * Pxi[3] +
           (3.0 * g1.array() * g2.array()).matrix().asDiagonal() * Pxi[2] + g3.asDiagonal() * Pxi[1];
    P[4] = (g1.array().pow(4)).matrix().asDiagonal() * Pxi[4] +
           (6.0 * g1.array().square() * g2.array()).matrix().asDiagonal() * Pxi[3] +
           (3.0 * g2.array().square() + 4.0 * g1.array() * g3.array()).matrix().asDiagonal() * Pxi[2] +
           g4.asDiagonal() * Pxi[1];
  } else {
    // Fornberg weights on the physical nodes: 5-point stencils for the first
    // two derivatives, 7-point stencils for the third and fourth.
    for (int k = 1; k <= 4; ++k) {
      const int width = k <= 2 ? 5 : 7;
      std::vector<Eigen::Triplet<double>> trips;
      for (int i = 0; i < n; ++i) {
        int lo = std::clamp(i - width / 2, 0, n - width);
        Eigen::VectorXd xs = z_.segment(lo, width);
        Eigen::MatrixXd c = fornberg_weights(z_[i], xs, k);
        for (int j = 0; j < width; ++j) trips.emplace_back(i, lo + j, c(j, k));
      }
      sparse_[k].resize(n, n);
      sparse_[k].setFromTriplets(trips.begin(), trips.end());
    }
    // Trapezoid rule on the physical nodes.
    w_ = Eigen::VectorXd::Zero(n);
    for (int k = 0; k + 1 < n; ++k) {
      const double h = z_[k + 1] - z_[k];
      w_[k] += 0.5 * h;
      w_[k + 1] += 0.5 * h;
    }
  }

  std::vector<double> mids;
  for (int k = 0; k + 1 < n; ++k) mids.push_back(z_of_xi(0.5 * (xi_[k] + xi_[k + 1])));
  mid_z_ = Eigen::Map<Eigen::VectorXd>(mids.data(), static_cast<Eigen::Index>(mids.size()));
  mid_M_ = interpolation_matrix(mid_z_);
}

double SemiInfiniteGrid::z_far() const {
  return has_infinity_node() ? z_[size() - 2] : z_[size() - 1];
}

double SemiInfiniteGrid::filter_horizon() const {
  return spec_.mapping == Mapping::Truncated ? spec_.z_max : 50.0;
}

Eigen::MatrixXd SemiInfiniteGrid::dense(int k) const {
  if (k < 1 || k > 4) throw UsageError("derivative order must be 1..4");
  if (spec_.backend == Backend::Spectral) return dense_[k];
  return Eigen::MatrixXd(sparse_[k]);
}

const Eigen::MatrixXd& SemiInfiniteGrid::dense_xi() const {
  if (spec_.backend != Backend::Spectral)
    throw UsageError("dense_xi exists only on the spectral back-end");
  return dxi_;
}

const Eigen::SparseMatrix<double>& SemiInfiniteGrid::sparse(int k) const {
  if (k < 1 || k > 4) throw UsageError("derivative order must be 1..4");
  if (spec_.backend != Backend::FiniteDifference)
    throw UsageError("sparse operators exist only on the finite-difference back-end");
  return sparse_[k];
}

Eigen::VectorXcd SemiInfiniteGrid::apply(int k, const Eigen::VectorXcd& f) const {
  if (k < 1 || k > 4) throw UsageError("derivative order must be 1..4");
  if (spec_.backend == Backend::Spectral) return dense_[k] * f;
  return sparse_[k] * f;
}

Eigen::VectorXd SemiInfiniteGrid::apply(int k, const Eigen::VectorXd& f) const {
  if (k < 1 || k > 4) throw UsageError("derivative order must be 1..4");
  if (spec_.backend == Backend::Spectral) return dense_[k] * f;
  return sparse_[k] * f;
}

const ClampedOperators& SemiInfiniteGrid::clamped() const {
  if (!clamped_) throw UsageError("clamped operators require the spectral back-end");
  return *clamped_;
}

double SemiInfiniteGrid::xi_of_z(double z) const {
  if (spec_.mapping == Mapping::Algebraic) {
    if (std::isinf(z)) return 1.0;
    return (z - spec_.L) / (z + spec_.L);
  }
  const double zm = spec_.z_max, a = spec_.cluster;
  const double zc = std::clamp(z, 0.0, zm);
  if (a < 1e-8) return 2.0 * zc / zm - 1.0;
  const double w = (zc / zm - 1.0) * std::tanh(a);
  const double u = 1.0 + std::atanh(w) / a;
  return 2.0 * u - 1.0;
}

double SemiInfiniteGrid::z_of_xi(double x) const { return map_z(spec_, x); }

double SemiInfiniteGrid::dz_dxi(double x) const {
  if (spec_.mapping == Mapping::Algebraic) return 2.0 * spec_.L / ((1.0 - x) * (1.0 - x));
  const double u = 0.5 * (x + 1.0);
  const double a = spec_.cluster;
  if (a < 1e-8) return 0.5 * spec_.z_max;
  const double c = std::cosh(a * (u - 1.0));
  return 0.5 * spec_.z_max * a / (c * c * std::tanh(a));
}

template <class Sink>
void SemiInfiniteGrid::interp_row(double zq, Sink&& put) const {
  const Eigen::Index n = size();
  for (Eigen::Index k = 0; k < n; ++k)
    if (zq == z_[k]) {
      put(k, 1.0);
      return;
    }
  if (spec_.backend == Backend::Spectral) {
    const double x = xi_of_z(zq);
    for (Eigen::Index k = 0; k < n; ++k)
      if (x == xi_[k]) {
        put(k, 1.0);
        return;
      }
    double den = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) den += bary_[k] / (x - xi_[k]);
    for (Eigen::Index k = 0; k < n; ++k) put(k, bary_[k] / (x - xi_[k]) / den);
  } else {
    const double zc = std::clamp(zq, 0.0, z_[n - 1]);
    Eigen::Index i = std::upper_bound(z_.data(), z_.data() + n, zc) - z_.data();
    Eigen::Index lo = std::clamp<Eigen::Index>(i - 2, 0, n - 4);
    Eigen::VectorXd xs = z_.segment(lo, 4);
    Eigen::MatrixXd c = fornberg_weights(zc, xs, 0);
    for (int j = 0; j < 4; ++j) put(lo + j, c(j, 0));
  }
}

Eigen::MatrixXd SemiInfiniteGrid::interpolation_matrix(const Eigen::VectorXd& zs) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(zs.size(), size());
  for (Eigen::Index r = 0; r < zs.size(); ++r)
    interp_row(zs[r], [&](Eigen::Index k, double w) { M(r, k) = w; });
  return M;
}

Eigen::VectorXcd SemiInfiniteGrid::interpolate(const Eigen::VectorXcd& values,
                                               const Eigen::VectorXd& zs) const {
  if (spec_.backend == Backend::Spectral) return interpolation_matrix(zs) * values;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(zs.size());
  for (Eigen::Index r = 0; r < zs.size(); ++r)
    interp_row(zs[r], [&](Eigen::Index k, double w) { out[r] += w * values[k]; });
  return out;
}

cplx SemiInfiniteGrid::interpolate(const Eigen::VectorXcd& values, double zq) const {
  cplx acc = 0.0;
  interp_row(zq, [&](Eigen::Index k, double w) { acc += w * values[k]; });
  return acc;
}

int SemiInfiniteGrid::nodes_below(double delta) const {
  int c = 0;
  for (Eigen::Index k = 1; k < size(); ++k)
    if (z_[k] < delta) ++c;
  return c;
}

double map_z(const GridSpec& spec, double x) {
  if (spec.mapping == Mapping::Algebraic) {
    if (x >= 1.0) return std::numeric_limits<double>::infinity();
    return spec.L * (1.0 + x) / (1.0 - x);
  }
  const double u = 0.5 * (x + 1.0);
  if (spec.cluster < 1e-8) return spec.z_max * u;
  return spec.z_max * (1.0 + std::tanh(spec.cluster * (u - 1.0)) / std::tanh(spec.cluster));
}

int nodes_below(const GridSpec& spec, double delta) {
  int c = 0;
  for (int k = 1; k <= spec.N; ++k) {
    const double x = spec.backend == Backend::Spectral
                         ? std::sin(std::numbers::pi * (2.0 * k - spec.N) / (2.0 * spec.N))
                         : -1.0 + 2.0 * k / spec.N;
    if (map_z(spec, x) < delta) ++c;
    else break;
  }
  return c;
}

int required_N(GridSpec spec, double delta, int count) {
  while (nodes_below(spec, delta) < count && spec.N < (1 << 20)) spec.N = spec.N * 5 / 4 + 1;
  return spec.N;
}

GridPtr build_grid(const GridSpec& spec) {
  if (spec.N < 8) throw ConfigError("grid.N must be >= 8");
  if (spec.mapping == Mapping::Algebraic && !(spec.L > 0))
    throw ConfigError("grid.L must be > 0 for the algebraic map");
  if (spec.mapping == Mapping::Truncated && !(spec.z_max > 0))
    throw ConfigError("grid.z_max must be > 0 for the truncated domain");
  if (spec.mapping == Mapping::Truncated && spec.cluster < 0)
    throw ConfigError("grid.cluster must be >= 0");
  if (spec.backend == Backend::FiniteDifference && spec.mapping != Mapping::Truncated)
    throw ConfigError("the finite-difference back-end needs the truncated mapping");
  return std::make_shared<const SemiInfiniteGrid>(spec);
}

GridFunction::GridFunction(GridPtr g, Eigen::VectorXcd v, std::optional<double> a)
    : grid(std::move(g)), values(std::move(v)), alpha(a) {
  if (!grid) throw UsageError("GridFunction without grid");
  if (values.size() != grid->size()) throw UsageError("GridFunction length differs from grid size");
}

bool GridFunction::finite() const { return values.allFinite(); }

GridFunction sample(const GridPtr& g, const std::function<cplx(double)>& f, cplx f_inf,
                    std::optional<double> alpha) {
  Eigen::VectorXcd v(g->size());
  for (Eigen::Index k = 0; k < g->size(); ++k) v[k] = g->is_finite_node(k) ? f(g->z()[k]) : f_inf;
  return GridFunction(g, std::move(v), alpha);
}

}  // namespace tsbl
