#include "tsbl/norms.hpp"

#include <algorithm>
#include <cmath>

#include "tsbl/errors.hpp"

namespace tsbl {

double BLNormParams::delta() const { return gamma * std::pow(nu, 0.125); }

void BLNormParams::validate() const {
  if (!(beta > 0)) throw ConfigError("norm.beta must be > 0");
  if (!(gamma > 0)) throw ConfigError("norm.gamma must be > 0");
  if (!(nu > 0)) throw ConfigError("norm.nu must be > 0");
  if (p < 0) throw ConfigError("norm.p must be >= 0");
  if (P_weight <= 1) throw ConfigError("norm.P_weight must be > 1");
}

double bl_weight(double z, const BLNormParams& params) {
  const double d = params.delta();
  const double y = z / d;
  double w = 1.0, dq = 1.0;
  for (int q = 1; q <= params.p; ++q) {
    dq /= d;
    w += dq / (1.0 + std::pow(y, params.P_weight - 1 + q));
  }
  return w;
}

namespace {

double weighted(double z, cplx v, const BLNormParams& params) {
  if (!std::isfinite(z)) return 0.0;
  const double a = std::abs(v);
  if (a == 0.0) return 0.0;
  return std::exp(params.beta * z) * a / bl_weight(z, params);
}

}  // namespace

double bl_norm(const SemiInfiniteGrid& grid, const Eigen::VectorXcd& f, const BLNormParams& params) {
  if (f.size() != grid.size()) throw UsageError("bl_norm: length differs from grid size");
  double s = 0.0;
  const double h = grid.filter_horizon();
  const auto& z = grid.z();
  double fmax = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    if (std::isfinite(z[k])) fmax = std::max(fmax, std::abs(f[k]));
    if (z[k] <= h) s = std::max(s, weighted(z[k], f[k], params));
  }
  // Interpolation error of f (about 1e-11 max|f| for sharp sublayers) is
  // amplified by e^{beta z}; tiny interpolated values are ignored, nodes always count.
  const double floor = 1e-8 * fmax;
  const Eigen::VectorXcd mid = grid.midpoint_matrix() * f;
  const auto& zm = grid.midpoints();
  for (Eigen::Index k = 0; k < mid.size(); ++k)
    if (zm[k] <= h && std::abs(mid[k]) > floor) s = std::max(s, weighted(zm[k], mid[k], params));
  return s;
}

double bl_norm(const GridFunction& f, const BLNormParams& params) {
  return bl_norm(*f.grid, f.values, params);
}

AlgebraCheck bl_norm_algebra_check(const GridFunction& f, const GridFunction& g,
                                   const BLNormParams& params, int p, int q) {
  if (f.grid != g.grid) throw UsageError("bl_norm_algebra_check: functions live on different grids");
  if (p < 0 || q < 0) throw UsageError("bl_norm_algebra_check: indices must be >= 0");
  AlgebraCheck c;
  const Eigen::VectorXcd fg = f.values.cwiseProduct(g.values);
  c.lhs = bl_norm(*f.grid, fg, params.with_p(p + q));
  c.rhs = bl_norm(f, params.with_p(p)) * bl_norm(g, params.with_p(q));
  c.holds = c.lhs <= c.rhs * (1.0 + 1e-12);
  const auto& z = f.grid->z();
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (!std::isfinite(z[k])) continue;
    const double r = bl_weight(z[k], params.with_p(p)) * bl_weight(z[k], params.with_p(q)) /
                     (bl_weight(z[k], params.with_p(p + q)) * std::exp(params.beta * z[k]));
    c.sharp_constant = std::max(c.sharp_constant, r);
  }
  return c;
}

double sup_alpha_norm(const std::vector<GridFunction>& family, const BLNormParams& params) {
  if (family.empty()) throw UsageError("sup_alpha_norm: empty wavenumber family");
  double s = 0.0;
  for (const auto& f : family) s = std::max(s, bl_norm(f, params));
  return s;
}

TripleNorm triple_norm(const std::vector<GridFunction>& omega, double nu,
                       const BLNormParams& params, const std::vector<GridFunction>& dz) {
  if (omega.empty()) throw UsageError("triple_norm: empty family");
  if (!dz.empty() && dz.size() != omega.size())
    throw UsageError("triple_norm: derivative family size mismatch");
  TripleNorm t;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const auto& w = omega[i];
    if (!w.alpha) throw UsageError("triple_norm: family member without alpha tag");
    const double n0 = bl_norm(w, params);
    t.omega = std::max(t.omega, n0);
    t.dx = std::max(t.dx, std::abs(*w.alpha) * n0);
    const double nz = dz.empty() ? bl_norm(*w.grid, w.grid->apply(1, w.values), params)
                                 : bl_norm(dz[i], params);
    t.dz = std::max(t.dz, nz);
  }
  const double s = std::pow(nu, 0.125);
  t.value = t.omega + s * t.dx + s * t.dz;
  return t;
}

double c_nu_alpha(double nu, double alpha, double cutoff) {
  if (!(nu > 0)) throw DomainError("c_nu_alpha: nu must be > 0");
  return std::abs(alpha) < cutoff ? 1.0 + alpha * alpha * std::pow(nu, -0.25) : 1.0;
}

TimeScales critical_times(TimeScales ts) {
  if (!(ts.gamma0 > 0)) throw DomainError("critical_times: gamma0 must be > 0");
  if (!(ts.nu > 0)) throw DomainError("critical_times: nu must be > 0");
  const double ln = std::log(1.0 / ts.nu);
  const double rate = ts.gamma0 * std::pow(ts.nu, 0.25);
  ts.T_star = std::max(0.0, (ts.p_exp - ts.tau) * ln / rate);
  ts.T_1 = std::max(0.0, ((ts.p_exp - 0.625) * ln - std::log(1.0 / ts.theta0)) / rate);
  const double re0 = ts.re_lambda0.value_or(rate);
  ts.T_nu = std::max(0.0, (ts.p_exp - 0.25 - ts.epsilon) * ln / re0);
  return ts;
}

}  // namespace tsbl
