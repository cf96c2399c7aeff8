#include "tsbl/linprop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsbl/elliptic.hpp"
#include "tsbl/errors.hpp"
#include "tsbl/numerics.hpp"

namespace tsbl {

namespace {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

VecC mul(const Eigen::MatrixXd& A, const VecC& x) {
  VecC y(A.rows());
  y.real() = A * x.real();
  y.imag() = A * x.imag();
  return y;
}

// Alexander's L-stable, stiffly accurate SDIRK of order 3.
constexpr double kGamma = 0.43586652150845899942;

}  // namespace

ModeOperator::ModeOperator(const ShearProfile& p, double alpha, double nu, GridPtr grid)
    : alpha_(alpha), nu_(nu), grid_(std::move(grid)) {
  if (!(nu > 0)) throw DomainError("ModeOperator: nu must be > 0");
  if (grid_->backend() != Backend::Spectral)
    throw ConfigError("time propagation runs on the spectral back-end");
  const auto& g = *grid_;
  const Eigen::Index N = g.size() - 1;
  m_ = N - 1;
  const double sn = std::sqrt(nu);
  if (is_mean()) {
    const Eigen::MatrixXd D1 = g.dense(1), D2 = g.dense(2);
    Wfull_ = D1.middleCols(1, m_);
    DWfull_ = D2.middleCols(1, m_);
    Vfull_ = Eigen::MatrixXd::Zero(N + 1, m_);
    Vfull_.middleRows(1, m_).setIdentity();
    M_ = (sn * D2.block(1, 1, m_, m_)).cast<cplx>();
    return;
  }
  const auto& P = g.clamped().P;
  const double a2 = alpha * alpha;
  Wfull_ = P[2] - a2 * P[0];
  DWfull_ = P[3] - a2 * P[1];
  Vfull_ = P[1];
  Pfull_ = P[0];
  B_ = Wfull_.middleRows(1, m_);
  luB_.compute(B_);
  const Eigen::MatrixXd D4 = (P[4] - 2.0 * a2 * P[2] + a2 * a2 * P[0]).middleRows(1, m_);
  Eigen::VectorXd U(m_), U2(m_);
  for (Eigen::Index k = 0; k < m_; ++k) {
    const Jet j = p.jet(g.z()[k + 1]);
    U[k] = j[0];
    U2[k] = j[2];
  }
  MatC A(m_, m_);
  A.real() = sn * D4;
  A.imag() = -alpha * (U.asDiagonal() * B_) + alpha * (U2.asDiagonal() * P[0].middleRows(1, m_));
  M_.resize(m_, m_);
  M_.real() = luB_.solve(A.real());
  M_.imag() = luB_.solve(A.imag());
}

VecC ModeOperator::state_from_omega(const VecC& omega) const {
  if (omega.size() != grid_->size()) throw UsageError("state_from_omega: size mismatch");
  if (is_mean()) {
    const auto zm = solve_zero_mode(GridFunction(grid_, omega, 0.0));
    return -zm.v1.values.segment(1, m_);
  }
  const VecC w = omega.segment(1, m_);
  VecC s(m_);
  s.real() = luB_.solve(w.real());
  s.imag() = luB_.solve(w.imag());
  return s;
}

VecC ModeOperator::omega(const VecC& s) const { return mul(Wfull_, s); }
VecC ModeOperator::dz_omega(const VecC& s) const { return mul(DWfull_, s); }
VecC ModeOperator::v1(const VecC& s) const { return mul(Vfull_, s); }

VecC ModeOperator::phi(const VecC& s) const {
  if (!is_mean()) return mul(Pfull_, s);
  // phi = int_0^z u.
  const auto zm = solve_zero_mode(GridFunction(grid_, -omega(s), 0.0));
  return zm.phi.values;
}

VecC ModeOperator::forcing_to_state(const VecC& r) const {
  if (r.size() != grid_->size()) throw UsageError("forcing_to_state: size mismatch");
  if (is_mean()) {
    // Velocity forcing f with f' = r and f(inf) = 0.
    const auto zm = solve_zero_mode(GridFunction(grid_, r, 0.0));
    return -zm.v1.values.segment(1, m_);
  }
  return state_from_omega(r);
}

const MatC& ModeOperator::step(double h) const {
  std::lock_guard<std::mutex> lock(mx_);
  auto it = steps_.find(h);
  if (it != steps_.end()) return *it->second;
  const double g = kGamma;
  const double a21 = 0.5 * (1.0 - g);
  const double b1 = -1.5 * g * g + 4.0 * g - 0.25;
  const double b2 = 1.5 * g * g - 5.0 * g + 1.25;
  const MatC I = MatC::Identity(m_, m_);
  Eigen::PartialPivLU<MatC> lu(I - (h * g) * M_);
  const MatC SM = lu.solve(M_);  // (I - h g M)^{-1} M
  const MatC K1 = SM;
  const MatC K2 = SM + (h * a21) * (SM * K1);
  const MatC K3 = SM + h * (SM * (b1 * K1 + b2 * K2));
  auto P = std::make_unique<MatC>(I + h * (b1 * K1 + b2 * K2 + g * K3));
  if (!P->allFinite()) throw NumericalError("SDIRK step matrix is not finite");
  return *steps_.emplace(h, std::move(P)).first->second;
}

double default_dt(const ShearProfile& p, double alpha, double nu) {
  const double f = std::abs(alpha) * std::max(1.0, std::abs(p.u_plus())) + std::sqrt(nu) * alpha * alpha;
  return std::min(0.5, 0.1 / std::max(f, 1e-12));
}

PropagatorRun propagate(const ModeOperator& op, const GridFunction& omega0, double t_end, double dt,
                        const PropagateOptions& opt) {
  if (!(t_end >= 0)) throw UsageError("propagate: t_end must be >= 0");
  if (!(dt > 0)) throw UsageError("propagate: dt must be > 0");
  std::vector<double> times = opt.times;
  if (times.empty()) times = linspace(0.0, t_end, std::max(2, opt.snapshots));
  if (opt.cluster_at_zero && t_end > 0)
    for (double t : geomspace(std::max(1e-6 * t_end, 1e-3 * dt), 0.1 * t_end, 16)) times.push_back(t);
  for (double t : times)
    if (t < 0 || t > t_end * (1 + 1e-12)) throw UsageError("propagate: snapshot time outside [0, t_end]");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  PropagatorRun run;
  run.alpha = op.alpha();
  run.nu = op.nu();
  run.dt = dt;
  run.params = opt.params.with_p(1);
  const auto& grid = op.grid();
  VecC s = op.state_from_omega(omega0.values);
  auto record = [&](double t) {
    GridFunction w(grid, op.omega(s), op.alpha());
    GridFunction dw(grid, op.dz_omega(s), op.alpha());
    if (!w.values.allFinite()) throw NumericalError("propagate: non-finite state at t = " + std::to_string(t));
    run.t.push_back(t);
    run.norm.push_back(bl_norm(w, run.params));
    run.dz_norm.push_back(bl_norm(dw, run.params));
    run.omega.push_back(std::move(w));
    run.dz_omega.push_back(std::move(dw));
  };
  double t = 0.0;
  std::size_t next = 0;
  if (!times.empty() && times[0] == 0.0) {
    record(0.0);
    ++next;
  }
  const MatC& P = op.step(dt);
  for (; next < times.size(); ++next) {
    const double target = times[next];
    const auto full = static_cast<long long>(std::floor((target - t) / dt * (1 + 1e-12)));
    for (long long k = 0; k < full; ++k) s = P * s;
    t += full * dt;
    const double rest = target - t;
    if (rest > 1e-12 * std::max(1.0, target)) {
      s = op.step(rest) * s;
    }
    t = target;
    record(t);
  }
  return run;
}

PropagatorRun propagate(const ShearProfile& p, const GridFunction& omega0, double alpha, double nu,
                        double t_end, double dt, const PropagateOptions& opt) {
  ModeOperator op(p, alpha, nu, omega0.grid);
  return propagate(op, omega0, t_end, dt > 0 ? dt : default_dt(p, alpha, nu), opt);
}

double semigroup_envelope(double nu, double alpha, double gamma1, double t) {
  return c_nu_alpha(nu, alpha) * std::exp(gamma1 * std::pow(nu, 0.25) * t - 0.25 * alpha * alpha * std::sqrt(nu) * t);
}

BoundFit verify_semigroup_bound(const PropagatorRun& run, double gamma1) {
  BoundFit f;
  if (run.norm.empty()) return f;
  const double n0 = run.norm.front();
  for (std::size_t k = 0; k < run.t.size(); ++k) {
    const double env = semigroup_envelope(run.nu, run.alpha, gamma1, run.t[k]) * n0;
    const double r = env > 0 ? run.norm[k] / env : 0.0;
    f.ratio.push_back(r);
    if (r > f.C) {
      f.C = r;
      f.t_at_max = run.t[k];
    }
  }
  return f;
}

BoundFit verify_derivative_bound(const PropagatorRun& run, double gamma1) {
  BoundFit f;
  if (run.norm.empty()) return f;
  const double n0 = run.norm.front();
  for (std::size_t k = 0; k < run.t.size(); ++k) {
    const double t = run.t[k];
    double r = 0.0;
    if (t > 0) {
      const double fac = std::pow(run.nu, -0.125) + 1.0 / std::sqrt(std::sqrt(run.nu) * t);
      const double env = fac * semigroup_envelope(run.nu, run.alpha, gamma1, t) * n0;
      r = env > 0 ? run.dz_norm[k] / env : 0.0;
    }
    f.ratio.push_back(r);
    if (r > f.C) {
      f.C = r;
      f.t_at_max = t;
    }
  }
  return f;
}

}  // namespace tsbl
