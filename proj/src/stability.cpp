#include "tsbl/stability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>

#include "tsbl/errors.hpp"

namespace tsbl {

namespace {

constexpr cplx I(0.0, 1.0);

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

double sup(const VecC& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Fraction of the energy of w beyond half the filter horizon.
double tail_fraction(const SemiInfiniteGrid& g, const VecC& w) {
  const double h = 0.5 * g.filter_horizon();
  double all = 0.0, far = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double e = g.weights()[k] * std::norm(w[k]);
    all += e;
    if (g.z()[k] > h) far += e;
  }
  // Nodes carry no weight at the truncation end; fall back to nodal sums.
  if (!(all > 0)) return 1.0;
  return far / all;
}

void normalize(VecC& phi, VecC& omega) {
  Eigen::Index k;
  omega.cwiseAbs().maxCoeff(&k);
  const cplx s = omega[k];
  if (std::abs(s) == 0.0) return;
  const cplx f = 1.0 / s;
  phi *= f;
  omega *= f;
}

void check_resolution(const SemiInfiniteGrid& g, double nu, int min_nodes) {
  const double delta = std::pow(nu, 0.125);
  if (g.nodes_below(delta) < min_nodes) {
    const int need = required_N(g.spec(), delta, min_nodes);
    throw NumericalError("sublayer nu^(1/8) = " + std::to_string(delta) + " has " +
                         std::to_string(g.nodes_below(delta)) + " nodes (need " +
                         std::to_string(min_nodes) + "); use N >= " + std::to_string(need));
  }
}

struct Candidate {
  cplx lambda;
  VecC phi, omega;
  double residual;
};

SpectrumReport finish(std::vector<Candidate>& cands, const ShearProfile& p, double alpha, double nu,
                      const GridPtr& grid, const OsOptions& opt) {
  (void)p;
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return a.lambda.real() > b.lambda.real(); });
  SpectrumReport rep;
  rep.raw = static_cast<int>(cands.size());
  for (auto& c : cands) {
    if (!(c.residual <= opt.residual_tol)) {
      ++rep.removed_residual;
      continue;
    }
    const double tail = tail_fraction(*grid, c.omega);
    if (!(tail < opt.tail_tol)) {
      ++rep.removed_tail;
      continue;
    }
    EigenSolution s;
    s.alpha = alpha;
    s.nu = nu;
    s.lambda = c.lambda;
    s.c = alpha != 0.0 ? c.lambda / (-I * alpha) : cplx(0.0);
    normalize(c.phi, c.omega);
    s.phi = GridFunction(grid, std::move(c.phi), alpha);
    s.omega = GridFunction(grid, std::move(c.omega), alpha);
    s.residual = c.residual;
    s.tail = tail;
    s.backend = grid->backend();
    rep.modes.push_back(std::move(s));
    if (opt.max_modes > 0 && static_cast<int>(rep.modes.size()) >= opt.max_modes) break;
  }
  return rep;
}

std::vector<Candidate> os_dense_spectral(const ShearProfile& p, double alpha, double nu,
                                         const SemiInfiniteGrid& g, const OsOptions& opt) {
  const auto& P = g.clamped().P;
  const Eigen::Index N = g.size() - 1, m = N - 1;
  const double a2 = alpha * alpha, sn = std::sqrt(nu);
  Eigen::MatrixXd Pi[5];
  for (int k = 0; k < 5; ++k) Pi[k] = P[k].middleRows(1, m);
  const Eigen::MatrixXd B = Pi[2] - a2 * Pi[0];
  const Eigen::MatrixXd D4 = Pi[4] - 2.0 * a2 * Pi[2] + a2 * a2 * Pi[0];
  Eigen::VectorXd U(m), U2(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Jet j = p.jet(g.z()[k + 1]);
    U[k] = j[0];
    U2[k] = j[2];
  }
  MatC A(m, m);
  A.real() = sn * D4;
  A.imag() = -alpha * (U.asDiagonal() * B) + alpha * (U2.asDiagonal() * Pi[0]);

  Eigen::PartialPivLU<Eigen::MatrixXd> luB(B);
  MatC M(m, m);
  M.real() = luB.solve(A.real());
  M.imag() = luB.solve(A.imag());
  Eigen::ComplexEigenSolver<MatC> es(M, true);
  if (es.info() != Eigen::Success) {
    const double rc = luB.rcond();
    throw NumericalError("Orr-Sommerfeld eigensolver failed (rcond(B) = " + std::to_string(rc) + ")");
  }
  const Eigen::MatrixXd Bfull = P[2] - a2 * P[0];
  std::vector<Candidate> out;
  out.reserve(m);
  // Cheap ordering first so the filters only look at what they need.
  std::vector<Eigen::Index> order(m);
  for (Eigen::Index k = 0; k < m; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return es.eigenvalues()[a].real() > es.eigenvalues()[b].real();
  });
  int accepted = 0;
  for (auto k : order) {
    const cplx lam = es.eigenvalues()[k];
    if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag())) continue;
    VecC q = es.eigenvectors().col(k);
    auto residual_of = [&](const VecC& v) {
      const VecC Bq = B * v;
      const VecC r = A * v - lam * Bq;
      const double s = sup(Bq);
      return s > 0 ? sup(r) / s : std::numeric_limits<double>::infinity();
    };
    double res = residual_of(q);
    if (res > opt.residual_tol && res < 1e3 * opt.residual_tol) {
      // One step of inverse iteration at the computed eigenvalue.
      MatC K = A;
      K.real() -= lam.real() * B;
      K.imag() -= lam.imag() * B;
      const VecC y = Eigen::PartialPivLU<MatC>(K).solve(B.cast<cplx>() * q);
      if (y.allFinite() && y.norm() > 0) {
        const VecC qn = y / y.norm();
        const double r2 = residual_of(qn);
        if (r2 < res) {
          q = qn;
          res = r2;
        }
      }
    }
    Candidate c;
    c.lambda = lam;
    c.phi = VecC::Zero(N + 1);
    c.phi.segment(1, m) = q;
    c.omega = Bfull.cast<cplx>() * q;
    c.residual = res;
    out.push_back(std::move(c));
    if (opt.max_modes > 0 && res <= opt.residual_tol && tail_fraction(g, out.back().omega) < opt.tail_tol &&
        ++accepted >= opt.max_modes)
      break;
  }
  return out;
}

// Sparse (omega, phi) system on all nodes. Returns A and B with
// x = [omega_0..omega_N, phi_0..phi_N].
void os_sparse_system(const ShearProfile& p, double alpha, double nu, const SemiInfiniteGrid& g,
                      Eigen::SparseMatrix<cplx>& A, Eigen::SparseMatrix<cplx>& B) {
  const Eigen::Index n = g.size(), N = n - 1;
  const double a2 = alpha * alpha, sn = std::sqrt(nu);
  const auto& D1 = g.sparse(1);
  const auto& D2 = g.sparse(2);
  std::vector<Eigen::Triplet<cplx>> ta, tb;
  auto row_of = [](const Eigen::SparseMatrix<double>& M, Eigen::Index r) {
    std::vector<std::pair<Eigen::Index, double>> v;
    const Eigen::SparseMatrix<double, Eigen::RowMajor> R = M.middleRows(r, 1);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, 0); it; ++it)
      v.emplace_back(it.col(), it.value());
    return v;
  };
  const Eigen::SparseMatrix<double, Eigen::RowMajor> D2r = D2;
  for (Eigen::Index k = 1; k < N; ++k) {
    const Jet j = p.jet(g.z()[k]);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(D2r, k); it; ++it) {
      ta.emplace_back(k, it.col(), sn * it.value());
      ta.emplace_back(n + k, n + it.col(), it.value());
    }
    ta.emplace_back(k, k, -sn * a2 - I * alpha * j[0]);
    ta.emplace_back(k, n + k, I * alpha * j[2]);
    ta.emplace_back(n + k, n + k, -a2);
    ta.emplace_back(n + k, k, -1.0);
    tb.emplace_back(k, k, 1.0);
  }
  ta.emplace_back(0, n, 1.0);
  ta.emplace_back(N, n + N, 1.0);
  for (auto [c, v] : row_of(D1, 0)) ta.emplace_back(n, n + c, v);
  for (auto [c, v] : row_of(D1, N)) ta.emplace_back(n + N, n + c, v);
  A.resize(2 * n, 2 * n);
  B.resize(2 * n, 2 * n);
  A.setFromTriplets(ta.begin(), ta.end());
  B.setFromTriplets(tb.begin(), tb.end());
}

std::vector<Candidate> os_sparse_fd(const ShearProfile& p, double alpha, double nu,
                                    const SemiInfiniteGrid& g, const OsOptions& opt) {
  Eigen::SparseMatrix<cplx> A, B;
  os_sparse_system(p, alpha, nu, g, A, B);
  const Eigen::Index n = g.size(), dim = 2 * n;
  const cplx sigma = opt.shift ? *opt.shift : -I * alpha * 0.3 * p.u_plus();
  Eigen::SparseMatrix<cplx> K = A - sigma * B;
  K.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success)
    throw NumericalError("finite-difference Orr-Sommerfeld factorization failed at shift " +
                         std::to_string(sigma.real()) + "+" + std::to_string(sigma.imag()) + "i");
  const int m = std::max(2, opt.block);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  MatC V(dim, m);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (int j = 0; j < m; ++j) V(i, j) = cplx(nd(rng), nd(rng));
  auto orth = [&](MatC& X) {
    Eigen::HouseholderQR<MatC> qr(X);
    X = qr.householderQ() * MatC::Identity(dim, m);
  };
  orth(V);
  Eigen::VectorXcd mu_prev = Eigen::VectorXcd::Zero(m);
  Eigen::ComplexEigenSolver<MatC> es;
  MatC W(dim, m);
  for (int it = 0; it < opt.iterations; ++it) {
    const MatC BV = B * V;
    for (int j = 0; j < m; ++j) W.col(j) = lu.solve(BV.col(j));
    const MatC H = V.adjoint() * W;
    es.compute(H, false);
    Eigen::VectorXcd mu = es.eigenvalues();
    std::sort(mu.data(), mu.data() + m, [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
    V = W;
    orth(V);
    // Converged when the leading half of the Ritz values settled.
    double change = 0.0;
    for (int j = 0; j < m / 2; ++j) change = std::max(change, std::abs(mu[j] - mu_prev[j]) / std::abs(mu[j]));
    mu_prev = mu;
    if (it > 3 && change < 1e-12) break;
  }
  // Rayleigh-Ritz on the final subspace.
  {
    const MatC BV = B * V;
    for (int j = 0; j < m; ++j) W.col(j) = lu.solve(BV.col(j));
  }
  es.compute(V.adjoint() * W, true);
  std::vector<Candidate> out;
  const Eigen::SparseMatrix<cplx> Bc = B;
  for (int j = 0; j < m; ++j) {
    const cplx mu = es.eigenvalues()[j];
    if (std::abs(mu) < 1e-300) continue;
    cplx lam = sigma + 1.0 / mu;
    VecC x = V * es.eigenvectors().col(j);
    // Polish by inverse iteration at the Ritz value.
    Eigen::SparseMatrix<cplx> Kl = A - lam * B;
    Kl.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lul;
    lul.compute(Kl);
    if (lul.info() == Eigen::Success) {
      for (int s = 0; s < 2; ++s) {
        VecC y = lul.solve(Bc * x);
        if (!y.allFinite() || y.norm() == 0) break;
        x = y / y.norm();
      }
      const VecC Bx = Bc * x;
      const cplx den = Bx.dot(Bx);
      if (std::abs(den) > 0) lam = Bx.dot(A * x) / den;
    }
    Candidate c;
    c.lambda = lam;
    c.omega = x.head(n);
    c.phi = x.tail(n);
    const VecC r = A * x - lam * (Bc * x);
    // Operator residual on the vorticity rows; the remaining rows are exact
    // constraints and must hold to the same relative level.
    const double s = sup(c.omega.segment(1, n - 2));
    c.residual = s > 0 ? sup(r) / s : std::numeric_limits<double>::infinity();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

double unstable_threshold(double nu) { return 1e-10 * std::pow(nu, 0.25); }

double SpectrumReport::growth() const {
  if (modes.empty()) return 0.0;
  return modes.front().unstable() ? modes.front().lambda.real() : 0.0;
}

SpectrumReport os_spectrum(const ShearProfile& p, double alpha, double nu, const GridPtr& grid,
                           const OsOptions& opt) {
  if (!(nu > 0)) throw DomainError("os_spectrum: nu must be > 0");
  if (!std::isfinite(alpha)) throw DomainError("os_spectrum: alpha must be finite");
  check_resolution(*grid, nu, opt.min_sublayer_nodes);
  std::vector<Candidate> c = grid->backend() == Backend::Spectral
                                 ? os_dense_spectral(p, alpha, nu, *grid, opt)
                                 : os_sparse_fd(p, alpha, nu, *grid, opt);
  return finish(c, p, alpha, nu, grid, opt);
}

RayleighReport rayleigh_spectrum(const ShearProfile& p, double alpha, const GridPtr& grid,
                                 double im_threshold) {
  if (!(alpha > 0)) throw DomainError("rayleigh_spectrum: alpha must be > 0");
  struct Raw {
    cplx c;
    VecC phi;
  };
  auto solve = [&](const SemiInfiniteGrid& g) {
    const Eigen::Index N = g.size() - 1, m = N - 1;
    const Eigen::MatrixXd D2 = g.dense(2).block(1, 1, m, m);
    Eigen::MatrixXd B = D2;
    B.diagonal().array() -= alpha * alpha;
    Eigen::VectorXd U(m), U2(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const Jet j = p.jet(g.z()[k + 1]);
      U[k] = j[0];
      U2[k] = j[2];
    }
    Eigen::MatrixXd A = U.asDiagonal() * B;
    A.diagonal() -= U2;
    const Eigen::MatrixXd M = B.partialPivLu().solve(A);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
    if (es.info() != Eigen::Success) throw NumericalError("Rayleigh eigensolver failed");
    std::vector<Raw> out;
    for (Eigen::Index k = 0; k < m; ++k) {
      const cplx c = es.eigenvalues()[k];
      if (!(c.imag() > im_threshold)) continue;
      VecC phi = VecC::Zero(N + 1);
      phi.segment(1, m) = es.eigenvectors().col(k);
      out.push_back({c, std::move(phi)});
    }
    return out;
  };

  RayleighReport rep;
  rep.alpha = alpha;
  auto cands = solve(*grid);
  rep.raw_unstable = static_cast<int>(cands.size());
  if (cands.empty()) return rep;

  // Howard semicircle over the range of U.
  double umin = 0.0, umax = p.u_plus();
  for (Eigen::Index k = 0; k < grid->size(); ++k) {
    if (!grid->is_finite_node(k)) continue;
    const double u = p.U(grid->z()[k]);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  const double centre = 0.5 * (umin + umax), radius = 0.5 * (umax - umin);

  GridSpec fine = grid->spec();
  fine.N = fine.N * 3 / 2;
  std::optional<std::vector<Raw>> refined;
  for (auto& r : cands) {
    if (std::abs(r.c - centre) > radius * (1.0 + 1e-9)) {
      ++rep.removed_semicircle;
      continue;
    }
    const VecC w = grid->apply(2, r.phi) - alpha * alpha * r.phi;
    if (!(tail_fraction(*grid, r.phi) < 1e-6) || !w.allFinite()) {
      ++rep.removed_tail;
      continue;
    }
    if (!refined) refined = solve(*build_grid(fine));
    bool persists = false;
    for (const auto& q : *refined)
      if (std::abs(q.c - r.c) <= 1e-3 * std::max(1.0, std::abs(r.c))) persists = true;
    if (!persists) {
      ++rep.removed_refinement;
      continue;
    }
    VecC phi = r.phi;
    Eigen::Index k;
    phi.cwiseAbs().maxCoeff(&k);
    phi /= phi[k];
    rep.unstable.push_back({r.c, GridFunction(grid, std::move(phi), alpha)});
  }
  std::sort(rep.unstable.begin(), rep.unstable.end(),
            [](const RayleighMode& a, const RayleighMode& b) { return a.c.imag() > b.c.imag(); });
  return rep;
}

std::pair<double, double> default_alpha_range(double nu) {
  return {std::pow(nu, 0.125) / 4.0, 4.0 * std::pow(nu, 1.0 / 12.0)};
}

GridSpec resolved_spec(GridSpec spec, double nu, int min_nodes) {
  spec.N = required_N(spec, std::pow(nu, 0.125), min_nodes);
  return spec;
}

GrowthSample leading_growth(const ShearProfile& p, double alpha, double nu, const GridPtr& grid,
                            const OsOptions& opt) {
  OsOptions o = opt;
  o.max_modes = 1;
  const auto rep = os_spectrum(p, alpha, nu, grid, o);
  GrowthSample s;
  s.alpha = alpha;
  if (const auto* l = rep.leading()) {
    s.lambda = l->lambda;
    s.re_lambda = l->lambda.real();
  } else {
    s.re_lambda = -std::numeric_limits<double>::infinity();
  }
  return s;
}

MaxGrowth max_growth(const ShearProfile& p, double nu, double a_lo, double a_hi,
                     const GridSpec& spec, const ScanOptions& opt) {
  if (!(a_lo > 0 && a_hi > a_lo)) throw UsageError("max_growth: need 0 < a_lo < a_hi");
  const GridPtr grid = build_grid(resolved_spec(spec, nu, opt.os.min_sublayer_nodes));
  const auto alphas = geomspace(a_lo, a_hi, std::max(3, opt.samples));
  MaxGrowth out;
  out.samples.resize(alphas.size());
  parallel_for(alphas.size(), opt.workers, [&](std::size_t i) {
    out.samples[i] = leading_growth(p, alphas[i], nu, grid, opt.os);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (out.samples[i].re_lambda > out.samples[best].re_lambda) best = i;
  const double thr = unstable_threshold(nu);
  // Refine around the best sample even when stable so the maximum is honest.
  const double lo = std::log(alphas[best == 0 ? 0 : best - 1]);
  const double hi = std::log(alphas[std::min(best + 1, alphas.size() - 1)]);
  GrowthSample top = out.samples[best];
  if (hi > lo) {
    std::mutex mx;
    auto f = [&](double la) {
      const auto s = leading_growth(p, std::exp(la), nu, grid, opt.os);
      std::lock_guard<std::mutex> g(mx);
      if (s.re_lambda > top.re_lambda) top = s;
      return s.re_lambda;
    };
    golden_maximize(f, lo, hi, std::log1p(opt.alpha_rtol));
  }
  out.best = top;
  if (top.re_lambda > thr) {
    out.alpha_star = top.alpha;
    out.lambda_star = top.re_lambda;
    out.lambda = top.lambda;
  }
  return out;
}

GrowthScan estimate_gamma0(const ShearProfile& p, const std::vector<double>& nus,
                           const GridSpec& spec, const ScanOptions& opt) {
  if (nus.size() < 2) throw UsageError("estimate_gamma0: need at least two viscosities");
  const auto [mn, mx] = std::minmax_element(nus.begin(), nus.end());
  if (std::log10(*mx / *mn) < 2.0 - 1e-9)
    throw UsageError("estimate_gamma0: the nu grid must span at least two decades");
  GrowthScan scan;
  for (double nu : nus) {
    const auto [lo, hi] = default_alpha_range(nu);
    const auto mg = max_growth(p, nu, lo, hi, spec, opt);
    GrowthRow r;
    r.nu = nu;
    r.alpha_star = mg.alpha_star;
    r.growth = mg.lambda_star;
    r.lambda = mg.lambda;
    r.N = resolved_spec(spec, nu, opt.os.min_sublayer_nodes).N;
    scan.rows.push_back(r);
  }
  std::vector<double> lx, ly, la;
  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  for (const auto& r : scan.rows) {
    const double g = r.growth * std::pow(r.nu, -0.25);
    scan.gamma0 = std::max(scan.gamma0, g);
    if (r.growth > 0 && r.alpha_star) {
      lx.push_back(std::log(r.nu));
      ly.push_back(std::log(r.growth));
      la.push_back(std::log(*r.alpha_star));
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
  }
  if (lx.size() >= 2) {
    scan.growth_fit = fit_line(lx, ly);
    scan.alpha_fit = fit_line(lx, la);
    scan.gamma0_spread = gmax / gmin;
  }
  return scan;
}

NeutralCurve trace_neutral_curve(const ShearProfile& p, const std::vector<double>& Rs,
                                 const GridSpec& spec, const ScanOptions& opt) {
  NeutralCurve nc;
  nc.points.resize(Rs.size());
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    const double R = Rs[i];
    const double nu = 1.0 / (R * R);
    NeutralPoint& pt = nc.points[i];
    pt.R = R;
    const GridPtr grid = build_grid(resolved_spec(spec, nu, opt.os.min_sublayer_nodes));
    auto growth = [&](double a) { return leading_growth(p, a, nu, grid, opt.os).re_lambda; };
    double lo = 0.2 * std::pow(R, -0.25), hi = 3.0 * std::pow(R, -1.0 / 6.0);
    std::vector<double> as, gs;
    bool found = false;
    for (int widen = 0; widen < 3 && !found; ++widen) {
      as = geomspace(lo, hi, std::max(8, opt.samples));
      gs.assign(as.size(), 0.0);
      parallel_for(as.size(), opt.workers, [&](std::size_t k) { gs[k] = growth(as[k]); });
      const bool any = std::any_of(gs.begin(), gs.end(), [](double g) { return g > 0; });
      const bool ends = gs.front() > 0 || gs.back() > 0;
      if (any && !ends) found = true;
      else if (!any) break;
      else {
        if (gs.front() > 0) lo /= 2.0;
        if (gs.back() > 0) hi *= 2.0;
      }
    }
    if (!found) {
      pt.note = std::any_of(gs.begin(), gs.end(), [](double g) { return g > 0; })
                    ? "growth positive at the bracket ends"
                    : "no unstable band";
      continue;
    }
    std::size_t first = 0, last = 0;
    for (std::size_t k = 0; k < gs.size(); ++k)
      if (gs[k] > 0) {
        if (first == 0) first = k;
        last = k;
      }
    auto cross = [&](double a, double b) -> std::optional<double> {
      auto f = [&](double la) { return growth(std::exp(la)); };
      auto r = bisect(f, std::log(a), std::log(b), std::log1p(opt.alpha_rtol));
      if (!r) return std::nullopt;
      return std::exp(*r);
    };
    pt.alpha_low = cross(as[first - 1], as[first]);
    pt.alpha_up = cross(as[last], as[last + 1]);
    if (!pt.alpha_low || !pt.alpha_up) pt.note = "bisection failed";
  }
  std::vector<double> xl, yl, xu, yu;
  for (const auto& pt : nc.points) {
    if (pt.alpha_low) {
      xl.push_back(std::log(pt.R));
      yl.push_back(std::log(*pt.alpha_low));
    }
    if (pt.alpha_up) {
      xu.push_back(std::log(pt.R));
      yu.push_back(std::log(*pt.alpha_up));
    }
  }
  if (xl.size() >= 2) nc.low_fit = fit_line(xl, yl);
  if (xu.size() >= 2) nc.up_fit = fit_line(xu, yu);
  return nc;
}

std::optional<double> critical_reynolds(const ShearProfile& p, double R_lo, double R_hi,
                                        const GridSpec& spec, const ScanOptions& opt, double rtol) {
  auto g = [&](double lr) {
    const double nu = std::exp(-2.0 * lr);
    const auto [lo, hi] = default_alpha_range(nu);
    const auto mg = max_growth(p, nu, lo, hi, spec, opt);
    return mg.best.re_lambda - unstable_threshold(nu);
  };
  auto r = bisect(g, std::log(R_lo), std::log(R_hi), std::log1p(rtol));
  if (!r) return std::nullopt;
  return std::exp(*r);
}

ModeFamily build_growing_mode(const EigenSolution& sol, double amplitude, double phase) {
  const auto& g = *sol.phi.grid;
  const double a = sol.alpha;
  const VecC dphi = g.apply(1, sol.phi.values);
  double vmax = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const cplx u = dphi[k], v = -I * a * sol.phi.values[k];
    const double m2 = 2.0 * (std::norm(u) + std::norm(v) + std::abs(u * u + v * v));
    vmax = std::max(vmax, std::sqrt(m2));
  }
  const cplx s = vmax > 0 ? amplitude / vmax * std::exp(I * phase) : cplx(0.0);
  ModeFamily f;
  f.alpha = a;
  f.lambda = sol.lambda;
  f.amplitude = amplitude;
  f.omega.emplace_back(sol.omega.grid, s * sol.omega.values, a);
  f.omega.emplace_back(sol.omega.grid, (s * sol.omega.values).conjugate(), -a);
  f.phi.emplace_back(sol.phi.grid, s * sol.phi.values, a);
  f.phi.emplace_back(sol.phi.grid, (s * sol.phi.values).conjugate(), -a);
  return f;
}

ModeStructure mode_structure(const ShearProfile& p, const EigenSolution& sol) {
  ModeStructure ms;
  const double R = 1.0 / std::sqrt(sol.nu);
  const double a = std::abs(sol.alpha);
  const cplx c = sol.c;
  ms.nu18 = std::pow(sol.nu, 0.125);
  ms.delta_cr_pred = std::pow(a * R, -1.0 / 3.0);
  ms.delta_bl_pred = std::pow(a * std::abs(p.U(0.0) - c) * R, -0.5);
  ms.delta_bl_pred_alt = std::pow(a * std::abs(p.dU(0.0) - c) * R, -0.5);

  const auto& g = *sol.omega.grid;
  const double zmax = std::min(20.0 * ms.nu18 + 10.0, g.z_far());
  const int n = 4000;
  Eigen::VectorXd zs(n);
  for (int k = 0; k < n; ++k) zs[k] = zmax * std::pow(static_cast<double>(k) / (n - 1), 2.0);
  const VecC w = g.interpolate(sol.omega.values, zs);
  const VecC ph = g.interpolate(sol.phi.values, zs);

  // Viscous part of the vorticity: omega minus its inviscid value U'' phi / (U - c).
  Eigen::VectorXd av(n);
  for (int k = 0; k < n; ++k) {
    const Jet j = p.jet(zs[k]);
    av[k] = std::abs(w[k] - j[2] * ph[k] / (j[0] - c));
  }
  // Sublayer: 1/e point of |omega_v| from the wall.
  int kb = -1;
  for (int k = 1; k < n; ++k)
    if (av[k] <= av[0] / std::exp(1.0)) {
      kb = k;
      break;
    }
  if (kb > 0) ms.delta_bl_fit = zs[kb];

  const auto zc = bisect([&](double z) { return p.U(z) - c.real(); }, 0.0, zmax, 1e-12);
  if (zc) ms.z_c = *zc;
  if (!zc) {
    ms.note = "no critical point (Re c outside the range of U)";
  } else if (kb > 0) {
    // Critical layer: first local maximum of |omega_v| beyond the sublayer,
    // measured to its upper 1/e point.
    int kp = -1;
    for (int k = kb + 1; k + 1 < n && zs[k] < 3.0 * (*zc) + 1.0; ++k)
      if (av[k] >= av[k - 1] && av[k] > av[k + 1]) {
        kp = k;
        break;
      }
    if (kp < 0) {
      ms.note = "critical layer merged with the sublayer";
      kp = static_cast<int>(std::lower_bound(zs.data(), zs.data() + n, *zc) - zs.data());
    }
    for (int k = kp; k < n; ++k)
      if (av[k] <= av[kp] / std::exp(1.0)) {
        ms.delta_cr_fit = zs[k] - zs[kp];
        break;
      }
  }

  // Far field: fit ln|phi| against z where |phi| sits between 1e-3 and 1e-8 of its max.
  {
    const double pm = ph.cwiseAbs().maxCoeff();
    std::vector<double> x, y;
    const int nf = 400;
    const double zf = std::min(g.filter_horizon() / 2.0, 40.0 / std::max(a, 1e-3));
    for (int k = 0; k < nf; ++k) {
      const double z = zf * (k + 1) / nf;
      const double v = std::abs(g.interpolate(sol.phi.values, z));
      if (v < 1e-3 * pm && v > 1e-8 * pm) {
        x.push_back(z);
        y.push_back(std::log(v));
      }
    }
    if (x.size() >= 3) ms.inviscid_tail_rate = -fit_line(x, y).slope;
  }
  ms.ok = ms.delta_bl_fit > 0 && ms.delta_cr_fit > 0;
  if (!ms.ok && ms.note.empty()) ms.note = "mode not localized";
  return ms;
}

}  // namespace tsbl
