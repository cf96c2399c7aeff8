#include "tsbl/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tsbl/elliptic.hpp"
#include "tsbl/errors.hpp"
#include "tsbl/numerics.hpp"

namespace tsbl {

namespace {

using VecC = Eigen::VectorXcd;
using VecD = Eigen::VectorXd;
constexpr cplx I{0.0, 1.0};

std::pair<VecD, VecD> deviation_direct(const ShearProfile& p, const SemiInfiniteGrid& g, double nu,
                                       double t) {
  const Eigen::Index N = g.size();
  VecD dU = VecD::Zero(N), d2U = VecD::Zero(N);
  if (t <= 0) return {dU, d2U};
  const double s = std::sqrt(nu) * t;
  for (Eigen::Index k = 0; k < N; ++k) {
    if (!g.is_finite_node(k)) continue;
    const double z = g.z()[k];
    const Jet j = p.jet(z);
    dU[k] = heat_evolve(p, s, z) - j[0];
    d2U[k] = heat_evolve_d2(p, s, z) - j[2];
  }
  return {dU, d2U};
}

VecC s_apply(const VecD& dU, const VecD& d2U, const ModeFields& f, double alpha_nu, double nu) {
  const double an = f.n * alpha_nu;
  if (f.n == 0) return VecC::Zero(f.omega.size());
  const double scale = std::pow(nu, -0.125);
  VecC r = (I * an) * dU.cast<cplx>().cwiseProduct(f.omega) +
           (-I * an) * d2U.cast<cplx>().cwiseProduct(f.phi);
  return scale * r;
}

bool contains(const std::vector<int>& v, int n) {
  return std::find(v.begin(), v.end(), std::abs(n)) != v.end();
}

std::vector<int> signed_support(const std::vector<int>& v) {
  std::vector<int> out;
  for (int n : v) {
    out.push_back(n);
    if (n != 0) out.push_back(-n);
  }
  return out;
}

}  // namespace

std::string to_string(ProfileMode m) {
  return m == ProfileMode::Stationary ? "stationary" : "time-dependent";
}

ProfileMode profile_mode_from_string(const std::string& s) {
  if (s == "stationary") return ProfileMode::Stationary;
  if (s == "time-dependent" || s == "time_dependent") return ProfileMode::TimeDependent;
  throw ConfigError("unknown profile mode '" + s + "' (stationary | time-dependent)");
}

ModeFields ModeFields::conj() const {
  return {-n, phi.conjugate(), dphi.conjugate(), omega.conjugate(), domega.conjugate()};
}

ModeFields ModeFields::scaled(cplx a) const { return {n, a * phi, a * dphi, a * omega, a * domega}; }

ModeFields mode_fields(const GridFunction& omega, int n, double alpha_nu) {
  ModeFields f;
  f.n = n;
  f.omega = omega.values;
  f.domega = omega.grid->apply(1, omega.values);
  if (n == 0) {
    GridFunction neg(omega.grid, -omega.values, 0.0);
    const auto zm = solve_zero_mode(neg);
    f.phi = zm.phi.values;
    f.dphi = zm.v1.values;
  } else {
    const auto r = solve_halfline_operator(omega, n * alpha_nu);
    f.phi = r.phi.values;
    f.dphi = r.dphi.values;
  }
  return f;
}

VecC apply_Q(const ModeFields& a, const ModeFields& b, double alpha_nu) {
  if (a.omega.size() != b.omega.size()) throw UsageError("apply_Q: size mismatch");
  VecC r = static_cast<double>(b.n) * a.dphi.cwiseProduct(b.omega);
  if (a.n != 0) r -= static_cast<double>(a.n) * a.phi.cwiseProduct(b.domega);
  return (I * alpha_nu) * r;
}

GridFunction apply_Q(const GridFunction& omega_k, int n1, const GridFunction& omega_l, int n2,
                     double alpha_nu) {
  const auto a = mode_fields(omega_k, n1, alpha_nu);
  const auto b = mode_fields(omega_l, n2, alpha_nu);
  return GridFunction(omega_k.grid, apply_Q(a, b, alpha_nu), (n1 + n2) * alpha_nu);
}

ShearDeviation::ShearDeviation(const ShearProfile& p, GridPtr grid, double nu, ProfileMode mode,
                               double t_max, int table)
    : mode_(mode), nu_(nu), grid_(std::move(grid)) {
  if (mode_ == ProfileMode::Stationary || t_max <= 0) return;
  if (table < 2) throw UsageError("ShearDeviation: table needs >= 2 entries");
  for (int i = 0; i <= table; ++i) {
    const double r = static_cast<double>(i) / table;
    const double t = t_max * r * r;
    auto [a, b] = deviation_direct(p, *grid_, nu, t);
    t_.push_back(t);
    dU_.push_back(std::move(a));
    d2U_.push_back(std::move(b));
  }
}

std::pair<VecD, VecD> ShearDeviation::at(double t) const {
  const Eigen::Index N = grid_->size();
  if (t_.empty() || t <= 0) return {VecD::Zero(N), VecD::Zero(N)};
  if (t > t_.back() * (1 + 1e-12))
    throw UsageError("ShearDeviation: t = " + std::to_string(t) + " beyond the table");
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  if (it == t_.end()) return {dU_.back(), d2U_.back()};
  const auto i1 = static_cast<std::size_t>(it - t_.begin());
  const std::size_t i0 = i1 - 1;
  const double w = (t - t_[i0]) / (t_[i1] - t_[i0]);
  return {(1 - w) * dU_[i0] + w * dU_[i1], (1 - w) * d2U_[i0] + w * d2U_[i1]};
}

VecC ShearDeviation::apply(const ModeFields& f, double alpha_nu, double t) const {
  if (mode_ == ProfileMode::Stationary || f.n == 0) return VecC::Zero(f.omega.size());
  const auto [dU, d2U] = at(t);
  return s_apply(dU, d2U, f, alpha_nu, nu_);
}

GridFunction apply_S(const GridFunction& omega, int n, double alpha_nu, double t,
                     const ShearProfile& p, double nu, ProfileMode mode) {
  const double an = n * alpha_nu;
  if (mode == ProfileMode::Stationary || n == 0 || t <= 0)
    return GridFunction(omega.grid, VecC::Zero(omega.size()), an);
  const auto f = mode_fields(omega, n, alpha_nu);
  const auto [dU, d2U] = deviation_direct(p, *omega.grid, nu, t);
  return GridFunction(omega.grid, s_apply(dU, d2U, f, alpha_nu, nu), an);
}

const LadderEntry* ModeLadder::entry(int j, int n) const {
  auto it = entries.find({j, std::abs(n)});
  return it == entries.end() ? nullptr : &it->second;
}

ModeFields ModeLadder::fields(int j, int n, std::size_t k) const {
  const auto* e = entry(j, n);
  if (!e || k >= e->fields.size()) {
    const auto N = grid->size();
    return {n, VecC::Zero(N), VecC::Zero(N), VecC::Zero(N), VecC::Zero(N)};
  }
  return n < 0 ? e->fields[k].conj() : e->fields[k];
}

int ModeLadder::max_mode() const {
  int m = 0;
  for (const auto& s : support)
    for (int n : s) m = std::max(m, n);
  return m;
}

std::vector<std::vector<int>> ladder_support(int p8, int M, ProfileMode mode) {
  if (p8 < 1) throw UsageError("ladder_support: 8 p must be >= 1");
  std::vector<std::vector<int>> S(static_cast<std::size_t>(M + 1));
  S[0] = {1};
  for (int j = 1; j <= M; ++j) {
    std::set<int> out;
    if (mode == ProfileMode::TimeDependent)
      for (int n : S[j - 1])
        if (n != 0) out.insert(n);
    for (int k = 0; k <= j - p8; ++k) {
      const int l = j - p8 - k;
      for (int n1 : signed_support(S[k]))
        for (int n2 : signed_support(S[l]))
          if (!(n1 == 0 && n2 == 0) && n1 + n2 >= 0) out.insert(n1 + n2);
    }
    S[j].assign(out.begin(), out.end());
  }
  return S;
}

ModeLadder build_ladder(const ShearProfile& p, double p_exp, int M, const EigenSolution& sol,
                        const std::vector<double>& t_grid, const LadderOptions& opt) {
  const double p8d = 8.0 * p_exp;
  const int p8 = static_cast<int>(std::lround(p8d));
  if (p8 < 1 || std::abs(p8d - p8) > 1e-9) throw UsageError("build_ladder: 8 p_exp must be a positive integer");
  if (M < 0) throw UsageError("build_ladder: M must be >= 0");
  if (t_grid.empty()) throw UsageError("build_ladder: empty t_grid");
  for (double t : t_grid)
    if (!(t >= 0) || !std::isfinite(t)) throw UsageError("build_ladder: snapshot times must be finite and >= 0");
  if (!sol.omega.grid) throw UsageError("build_ladder: seed mode has no grid");

  ModeLadder L;
  L.p_exp = p_exp;
  L.p8 = p8;
  L.M = M;
  L.nu = sol.nu;
  L.alpha_nu = sol.alpha;
  L.lambda_nu = sol.lambda;
  L.gamma0 = sol.lambda.real() * std::pow(sol.nu, -0.25);
  L.mode = opt.mode;
  L.params = opt.params;
  L.params.nu = sol.nu;
  L.params = L.params.with_p(1);
  L.grid = sol.omega.grid;
  L.profile = std::make_shared<const ShearProfile>(p);
  L.support = ladder_support(p8, M, opt.mode);

  std::vector<double> times = t_grid;
  std::sort(times.begin(), times.end());
  const double t_end = times.back();
  const int nmax = L.max_mode();
  const double dt_max = opt.dt > 0 ? opt.dt : default_dt(p, std::max(1, nmax) * L.alpha_nu, L.nu);
  const long long nsteps = t_end > 0 ? static_cast<long long>(std::ceil(t_end / dt_max - 1e-9)) : 0;
  L.dt = nsteps > 0 ? t_end / static_cast<double>(nsteps) : 0.0;
  std::vector<long long> snap;
  for (double t : times) snap.push_back(nsteps > 0 ? std::llround(t / L.dt) : 0);
  snap.erase(std::unique(snap.begin(), snap.end()), snap.end());
  for (long long s : snap) L.t.push_back(static_cast<double>(s) * L.dt);

  std::map<int, std::unique_ptr<ModeOperator>> ops;
  for (const auto& lvl : L.support)
    for (int n : lvl)
      if (!ops.count(n)) ops[n] = std::make_unique<ModeOperator>(p, n * L.alpha_nu, L.nu, L.grid);

  const ShearDeviation dev(p, L.grid, L.nu, opt.mode, t_end, opt.table);

  struct Slot {
    int n = 0;
    VecC s, F;
    ModeFields f, fc;
  };
  std::vector<std::vector<Slot>> lv(static_cast<std::size_t>(M + 1));
  const Eigen::Index N = L.grid->size();
  auto fields_of = [&](const ModeOperator& op, int n, const VecC& s, bool with_mean_phi) {
    ModeFields f;
    f.n = n;
    f.omega = op.omega(s);
    f.domega = op.dz_omega(s);
    f.dphi = op.v1(s);
    // phi of the mean mode only enters Q with a zero prefactor.
    f.phi = (n != 0 || with_mean_phi) ? op.phi(s) : VecC::Zero(N);
    return f;
  };
  auto lookup = [&](int k, int n) -> const ModeFields* {
    for (const auto& sl : lv[static_cast<std::size_t>(k)])
      if (sl.n == std::abs(n)) return n < 0 ? &sl.fc : &sl.f;
    return nullptr;
  };

  // Seed: omega_{0,1} = e^{lambda t} times the normalized eigenmode.
  const auto fam = build_growing_mode(sol, opt.amplitude);
  const ModeOperator& op1 = *ops.at(1);
  const VecC s0 = op1.state_from_omega(fam.omega[0].values);
  const ModeFields f0 = fields_of(op1, 1, s0, false);
  {
    Slot sl;
    sl.n = 1;
    sl.s = s0;
    sl.f = f0;
    sl.fc = f0.conj();
    lv[0].push_back(std::move(sl));
  }
  for (int j = 1; j <= M; ++j)
    for (int n : L.support[static_cast<std::size_t>(j)]) {
      Slot sl;
      sl.n = n;
      const auto m = ops.at(n)->dim();
      sl.s = VecC::Zero(m);
      sl.f = {n, VecC::Zero(N), VecC::Zero(N), VecC::Zero(N), VecC::Zero(N)};
      sl.fc = sl.f.conj();
      lv[static_cast<std::size_t>(j)].push_back(std::move(sl));
    }

  auto forcing = [&](int j, int n, double t) {
    VecC r = VecC::Zero(N);
    if (opt.mode == ProfileMode::TimeDependent && n != 0)
      if (const auto* f = lookup(j - 1, n)) r += dev.apply(*f, L.alpha_nu, t);
    for (int k = 0; k <= j - p8; ++k) {
      const int l = j - p8 - k;
      for (int n1 : signed_support(L.support[static_cast<std::size_t>(k)])) {
        const int n2 = n - n1;
        if ((n1 == 0 && n2 == 0) || !contains(L.support[static_cast<std::size_t>(l)], n2)) continue;
        const auto* a = lookup(k, n1);
        const auto* b = lookup(l, n2);
        if (a && b) r += apply_Q(*a, *b, L.alpha_nu);
      }
    }
    return VecC(-r);
  };

  auto record = [&](double t) {
    for (int j = 0; j <= M; ++j)
      for (const auto& sl : lv[static_cast<std::size_t>(j)]) {
        auto& e = L.entries[{j, sl.n}];
        e.j = j;
        e.n = sl.n;
        const VecC s = j == 0 ? VecC(std::exp(L.lambda_nu * t) * sl.s) : sl.s;
        ModeFields f = fields_of(*ops.at(sl.n), sl.n, s, true);
        e.norm.push_back(bl_norm(*L.grid, f.omega, L.params));
        e.dz_norm.push_back(bl_norm(*L.grid, f.domega, L.params));
        e.state.push_back(s);
        e.fields.push_back(std::move(f));
      }
  };

  // Forcing at t = 0; level fields are still zero above level 0.
  for (int j = 1; j <= M; ++j)
    for (auto& sl : lv[static_cast<std::size_t>(j)]) sl.F = ops.at(sl.n)->forcing_to_state(forcing(j, sl.n, 0.0));

  std::size_t next = 0;
  if (!snap.empty() && snap[0] == 0) {
    record(0.0);
    ++next;
  }
  const double h = L.dt;
  for (long long step = 1; step <= nsteps && next < snap.size(); ++step) {
    const double t = static_cast<double>(step) * h;
    {
      auto& sl = lv[0][0];
      sl.f = f0.scaled(std::exp(L.lambda_nu * t));
      sl.fc = sl.f.conj();
    }
    for (int j = 1; j <= M; ++j) {
      auto& slots = lv[static_cast<std::size_t>(j)];
      parallel_for(slots.size(), opt.workers, [&](std::size_t i) {
        auto& sl = slots[i];
        const ModeOperator& op = *ops.at(sl.n);
        const VecC Fn = op.forcing_to_state(forcing(j, sl.n, t));
        sl.s = op.step(h) * VecC(sl.s + 0.5 * h * sl.F) + 0.5 * h * Fn;
        sl.F = Fn;
        sl.f = fields_of(op, sl.n, sl.s, false);
        sl.fc = sl.f.conj();
      });
      bool ok = true;
      for (const auto& sl : slots) ok = ok && sl.s.allFinite();
      if (!ok) {
        L.failure = "non-finite state at level " + std::to_string(j) + ", t = " + std::to_string(t);
        L.failed_level = j;
        for (auto it = L.entries.begin(); it != L.entries.end();)
          it = it->first.first >= j ? L.entries.erase(it) : std::next(it);
        return L;
      }
    }
    if (step == snap[next]) {
      record(t);
      ++next;
    }
  }
  return L;
}

std::vector<InductiveBound> check_inductive_bounds(const ModeLadder& L, std::optional<double> gamma0,
                                                   double max_factor) {
  const double g0 = gamma0.value_or(L.gamma0);
  const double n14 = std::pow(L.nu, 0.25);
  const double t_half = L.t.empty() ? 0.0 : 0.5 * L.t.back();
  std::vector<InductiveBound> out;
  for (int j = 0; j <= L.M; ++j) {
    if (L.failure && j >= L.failed_level) break;
    const double jp = static_cast<double>(j) / L.p8;
    for (int a = 0; a <= 1; ++a)
      for (int b = 0; b <= 1; ++b) {
        InductiveBound B;
        B.j = j;
        B.a = a;
        B.b = b;
        double sup_all = 0.0, sup_half = 0.0;
        for (std::size_t k = 0; k < L.t.size(); ++k) {
          double nrm = 0.0;
          for (int n : L.support[static_cast<std::size_t>(j)]) {
            const auto* e = L.entry(j, n);
            if (!e) continue;
            const double v = b ? e->dz_norm[k] : e->norm[k];
            nrm = std::max(nrm, std::pow(std::abs(n * L.alpha_nu), a) * v);
          }
          const double env = std::pow(L.nu, (a - b) / 8.0) * std::pow(L.nu, -0.25 * (j / L.p8)) *
                             std::exp(g0 * (1.0 + jp) * n14 * L.t[k]);
          const double r = nrm / env;
          B.ratio.push_back(r);
          sup_all = std::max(sup_all, r);
          if (L.t[k] <= t_half * (1 + 1e-12)) sup_half = std::max(sup_half, r);
        }
        B.C0 = sup_all;
        B.uniformity = sup_half > 0 ? sup_all / sup_half : (sup_all > 0 ? INFINITY : 1.0);
        B.uniform = B.uniformity <= max_factor;
        out.push_back(std::move(B));
      }
  }
  return out;
}

ResidualReport assemble_and_residual(const ModeLadder& L, std::size_t snapshot) {
  if (snapshot >= L.t.size()) throw UsageError("assemble_and_residual: snapshot out of range");
  if (L.failure) throw UsageError("assemble_and_residual: ladder is incomplete (" + *L.failure + ")");
  ResidualReport rep;
  const double t = L.t[snapshot];
  rep.t = t;
  const double nu = L.nu, p = L.p8 / 8.0;
  const Eigen::Index N = L.grid->size();
  const int M = L.M;

  std::set<int> app_modes;
  for (const auto& s : L.support) app_modes.insert(s.begin(), s.end());
  for (int n : app_modes) {
    VecC w = VecC::Zero(N);
    for (int j = 0; j <= M; ++j)
      if (L.entry(j, n)) w += std::pow(nu, p + j / 8.0) * L.fields(j, n, snapshot).omega;
    rep.omega_app_modes.emplace_back(L.grid, w, n * L.alpha_nu);
    rep.omega_app = std::max(rep.omega_app, bl_norm(*L.grid, w, L.params));
  }

  std::map<int, VecC> total;
  auto add = [&](int n, const VecC& v) {
    auto it = total.find(n);
    if (it == total.end()) total.emplace(n, v);
    else it->second += v;
  };

  if (L.mode == ProfileMode::TimeDependent) {
    const auto [dU, d2U] = deviation_direct(*L.profile, *L.grid, nu, t);
    ResidualTerm term{"S", M, -1, 0.0};
    const double c = std::pow(nu, p + (M + 1) / 8.0);
    for (int n : L.support[static_cast<std::size_t>(M)]) {
      if (n == 0) continue;
      const VecC v = c * s_apply(dU, d2U, L.fields(M, n, snapshot), L.alpha_nu, nu);
      term.norm = std::max(term.norm, bl_norm(*L.grid, v, L.params));
      add(n, v);
    }
    rep.terms.push_back(term);
  }
  for (int k = 0; k <= M; ++k)
    for (int l = 0; l <= M; ++l) {
      if (k + l + L.p8 <= M) continue;
      const double c = std::pow(nu, 2 * p + (k + l) / 8.0);
      std::map<int, VecC> part;
      for (int n1 : signed_support(L.support[static_cast<std::size_t>(k)]))
        for (int n2 : signed_support(L.support[static_cast<std::size_t>(l)])) {
          const int n = n1 + n2;
          if ((n1 == 0 && n2 == 0) || n < 0) continue;
          const VecC v = c * apply_Q(L.fields(k, n1, snapshot), L.fields(l, n2, snapshot), L.alpha_nu);
          auto it = part.find(n);
          if (it == part.end()) part.emplace(n, v);
          else it->second += v;
        }
      ResidualTerm term{"Q(" + std::to_string(k) + "," + std::to_string(l) + ")", k, l, 0.0};
      for (const auto& [n, v] : part) {
        term.norm = std::max(term.norm, bl_norm(*L.grid, v, L.params));
        add(n, v);
      }
      rep.terms.push_back(term);
    }
  for (const auto& term : rep.terms) rep.sum_of_parts += term.norm;
  for (const auto& [n, v] : total) {
    rep.total = std::max(rep.total, bl_norm(*L.grid, v, L.params));
    rep.residual_modes.emplace_back(L.grid, v, n * L.alpha_nu);
  }
  const double base = std::pow(nu, p) * std::exp(L.gamma0 * std::pow(nu, 0.25) * t);
  for (int j = M + 1; j <= 2 * M; ++j)
    rep.envelope += std::pow(nu, -0.25 * (j / L.p8)) * std::pow(base, 1.0 + static_cast<double>(j) / L.p8);
  rep.envelope *= std::pow(nu, 0.25);
  return rep;
}

std::vector<ResidualReport> residual_trace(const ModeLadder& L) {
  std::vector<ResidualReport> out;
  for (std::size_t k = 0; k < L.t.size(); ++k) {
    auto r = assemble_and_residual(L, k);
    r.omega_app_modes.clear();
    r.residual_modes.clear();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tsbl
