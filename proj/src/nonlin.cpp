#include "tsbl/nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include "json.hpp"
#include "tsbl/errors.hpp"
#include "tsbl/linprop.hpp"

namespace tsbl {

namespace {

using VecC = Eigen::VectorXcd;
using json = nlohmann::json;
constexpr cplx I{0.0, 1.0};

json to_json(const VecC& v) {
  std::vector<double> re(v.size()), im(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    re[k] = v[k].real();
    im[k] = v[k].imag();
  }
  return json{{"re", re}, {"im", im}};
}

VecC from_json(const json& j) {
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != im.size()) throw ConfigError("checkpoint: re/im length mismatch");
  VecC v(static_cast<Eigen::Index>(re.size()));
  for (std::size_t k = 0; k < re.size(); ++k) v[static_cast<Eigen::Index>(k)] = {re[k], im[k]};
  return v;
}

struct Checkpoint {
  double t = 0.0;
  double dt = 0.0;
  std::vector<VecC> s, F_old;
};

void write_checkpoint(const std::string& path, const Checkpoint& c, double nu, double alpha) {
  json j;
  j["t"] = c.t;
  j["dt"] = c.dt;
  j["nu"] = nu;
  j["alpha_nu"] = alpha;
  j["N_modes"] = static_cast<int>(c.s.size()) - 1;
  for (std::size_t n = 0; n < c.s.size(); ++n) {
    j["state"].push_back(to_json(c.s[n]));
    j["F_old"].push_back(to_json(c.F_old[n]));
  }
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const auto tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write checkpoint " + tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint read_checkpoint(const std::string& path, double nu, double alpha, int K) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path);
  json j;
  try {
    in >> j;
    Checkpoint c;
    c.t = j.at("t").get<double>();
    c.dt = j.at("dt").get<double>();
    if (j.at("N_modes").get<int>() != K) throw ConfigError("checkpoint: N_modes differs from the run");
    if (std::abs(j.at("nu").get<double>() - nu) > 1e-12 * nu ||
        std::abs(j.at("alpha_nu").get<double>() - alpha) > 1e-12 * std::abs(alpha))
      throw ConfigError("checkpoint: (nu, alpha_nu) differ from the run");
    for (const auto& e : j.at("state")) c.s.push_back(from_json(e));
    for (const auto& e : j.at("F_old")) c.F_old.push_back(from_json(e));
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace

NonlinRun run_experiment(const ShearProfile& p, const EigenSolution& sol, const NonlinOptions& opt) {
  const int K = opt.N_modes;
  if (K < 8) throw UsageError("run_experiment: N_modes must be >= 8");
  if (!sol.omega.grid) throw UsageError("run_experiment: seed mode has no grid");
  if (opt.sample_every < 1) throw UsageError("run_experiment: sample_every must be >= 1");
  const GridPtr grid = sol.omega.grid;
  const double nu = sol.nu;
  const double delta = std::pow(nu, 0.125);
  if (grid->nodes_below(delta) < 12)
    throw NumericalError("run_experiment: sublayer nu^{1/8} under-resolved; use N >= " +
                         std::to_string(required_N(grid->spec(), delta, 12)));

  NonlinRun run;
  run.nu = nu;
  run.alpha_nu = sol.alpha;
  run.lambda_nu = sol.lambda;
  run.p_exp = opt.p_exp;
  run.seed = opt.seed.value_or(std::pow(nu, opt.p_exp));
  run.theta0 = opt.theta0;
  run.N_modes = K;
  if (sol.lambda.real() > 0) {
    TimeScales ts;
    ts.p_exp = opt.p_exp;
    ts.theta0 = opt.theta0;
    ts.nu = nu;
    ts.gamma0 = sol.lambda.real() * std::pow(nu, -0.25);
    run.T1 = critical_times(ts).T_1;
  }
  const double t_end = opt.t_end > 0 ? opt.t_end : 1.5 * run.T1;
  if (!(t_end > 0)) throw UsageError("run_experiment: t_end must be > 0 (the seed mode is not growing)");
  const double a = sol.alpha;
  const double dt_max = opt.dt > 0 ? opt.dt : default_dt(p, a, nu);
  const auto nsteps = static_cast<long long>(std::ceil(t_end / dt_max - 1e-9));
  const double h = t_end / static_cast<double>(nsteps);
  run.dt = h;
  BLNormParams params = opt.params;
  params.nu = nu;
  params = params.with_p(1);

  std::vector<std::unique_ptr<ModeOperator>> ops;
  for (int n = 0; n <= K; ++n) ops.push_back(std::make_unique<ModeOperator>(p, n * a, nu, grid));
  const Eigen::Index N = grid->size();
  const Eigen::VectorXd& w = grid->weights();
  Eigen::VectorXd U2 = Eigen::VectorXd::Zero(N);
  for (Eigen::Index k = 0; k < N; ++k)
    if (grid->is_finite_node(k)) U2[k] = p.d2U(grid->z()[k]);

  std::vector<VecC> s(K + 1), F(K + 1), F_old(K + 1);
  std::vector<ModeFields> f(K + 1), fc(K + 1);
  for (int n = 0; n <= K; ++n) s[n] = VecC::Zero(ops[n]->dim());
  double t0 = 0.0;
  bool restarted = false;
  if (!opt.restart_from.empty()) {
    auto c = read_checkpoint(opt.restart_from, nu, a, K);
    if (c.s.size() != s.size()) throw ConfigError("checkpoint: wrong number of modes");
    for (int n = 0; n <= K; ++n)
      if (c.s[n].size() != ops[n]->dim()) throw ConfigError("checkpoint: grid size differs from the run");
    s = std::move(c.s);
    F_old = std::move(c.F_old);
    if (std::abs(c.dt - h) > 1e-12 * h) throw ConfigError("checkpoint: step size differs from the run");
    t0 = c.t;
    restarted = true;
  } else if (run.seed > 0) {
    const auto fam = build_growing_mode(sol, run.seed);
    s[1] = ops[1]->state_from_omega(fam.omega[0].values);
  }

  auto update_fields = [&](int n) {
    const ModeOperator& op = *ops[n];
    f[n].n = n;
    f[n].omega = op.omega(s[n]);
    f[n].domega = op.dz_omega(s[n]);
    f[n].dphi = op.v1(s[n]);
    f[n].phi = n == 0 ? VecC::Zero(N) : op.phi(s[n]);
    fc[n] = f[n].conj();
  };
  auto field = [&](int n) -> const ModeFields& { return n < 0 ? fc[-n] : f[n]; };
  auto nonlinear = [&](int n) {
    VecC r = VecC::Zero(N);
    for (int n1 = -K; n1 <= K; ++n1) {
      const int n2 = n - n1;
      if (n2 < -K || n2 > K || (n1 == 0 && n2 == 0)) continue;
      r += apply_Q(field(n1), field(n2), a);
    }
    return r;
  };

  std::vector<VecC> Nl(K + 1), ext(K + 1);
  auto eval_rhs = [&](double t) {
    parallel_for(static_cast<std::size_t>(K + 1), opt.workers, [&](std::size_t i) {
      const int n = static_cast<int>(i);
      Nl[n] = nonlinear(n);
      ext[n] = opt.forcing ? opt.forcing(n, t) : VecC::Zero(N);
      F[n] = ops[n]->forcing_to_state(ext[n] - Nl[n]);
    });
  };

  // Enstrophy and its rate terms.
  struct Rates {
    double E = 0, diss = 0, flux = 0, prod = 0, transfer = 0;
    double total() const { return diss + flux + prod + transfer; }
  };
  const double sn = std::sqrt(nu);
  auto rates = [&]() {
    Rates r;
    for (int n = 0; n <= K; ++n) {
      const double c = n == 0 ? 1.0 : 2.0;
      const double an = n * a;
      const VecC& om = f[n].omega;
      const VecC& dom = f[n].domega;
      double e = 0, d = 0, pr = 0, tr = 0;
      for (Eigen::Index k = 0; k < N; ++k) {
        if (w[k] == 0.0) continue;
        e += w[k] * std::norm(om[k]);
        d += w[k] * (std::norm(dom[k]) + an * an * std::norm(om[k]));
        if (n != 0) pr += w[k] * std::real(std::conj(om[k]) * I * an * U2[k] * f[n].phi[k]);
        tr += w[k] * std::real(std::conj(om[k]) * (ext[n][k] - Nl[n][k]));
      }
      r.E += 0.5 * c * e;
      r.diss -= c * sn * d;
      r.flux -= c * sn * std::real(std::conj(om[0]) * dom[0]);
      r.prod += c * pr;
      r.transfer += c * tr;
    }
    return r;
  };

  // Diagnostics on a physical x grid over one period.
  const int Nx = 8 * K;
  Eigen::MatrixXcd ex(Nx, K + 1);
  for (int m = 0; m < Nx; ++m)
    for (int n = 0; n <= K; ++n) ex(m, n) = std::exp(I * (2.0 * M_PI * m * n / Nx));
  auto sample_now = [&](double t) {
    NonlinSample smp;
    smp.t = t;
    for (Eigen::Index k = 0; k < N; ++k) {
      if (!grid->is_finite_node(k)) continue;
      for (int m = 0; m < Nx; ++m) {
        double u1 = f[0].dphi[k].real(), u2 = 0.0, om = f[0].omega[k].real();
        for (int n = 1; n <= K; ++n) {
          const cplx e = ex(m, n);
          u1 += 2.0 * std::real(f[n].dphi[k] * e);
          u2 += 2.0 * std::real(-I * (n * a) * f[n].phi[k] * e);
          om += 2.0 * std::real(f[n].omega[k] * e);
        }
        smp.v_inf = std::max(smp.v_inf, std::hypot(u1, u2));
        smp.omega_inf = std::max(smp.omega_inf, std::abs(om));
      }
    }
    std::vector<GridFunction> fam, dz;
    for (int n = 0; n <= K; ++n) {
      fam.emplace_back(grid, f[n].omega, n * a);
      dz.emplace_back(grid, f[n].domega, n * a);
    }
    smp.triple = triple_norm(fam, nu, params, dz).value;
    double e_all = 0, e_tail = 0;
    for (int n = 0; n <= K; ++n) {
      const double e = (n == 0 ? 1.0 : 2.0) * (w.array() * f[n].omega.array().abs2()).sum();
      e_all += e;
      if (3 * n > 2 * K) e_tail += e;
    }
    smp.tail_ratio = e_all > 0 ? e_tail / e_all : 0.0;
    if (!run.series.empty()) {
      const auto& prev = run.series.back();
      if (prev.v_inf > 0 && smp.v_inf > 0 && t > prev.t)
        smp.running_rate = std::log(smp.v_inf / prev.v_inf) / (t - prev.t);
    }
    return smp;
  };

  for (int n = 0; n <= K; ++n) update_fields(n);
  eval_rhs(t0);
  if (!restarted) F_old = F;
  Rates r_prev = rates();
  {
    auto smp = sample_now(t0);
    smp.enstrophy = r_prev.E;
    run.series.push_back(smp);
  }
  const bool zero_seed = run.seed == 0.0 && !restarted && !opt.forcing;
  double max_rate = std::abs(r_prev.total());
  double max_defect = 0.0;

  run.stop_reason = "t_end reached";
  const long long nrem = std::max(0LL, std::llround((t_end - t0) / h));
  for (long long step = 1; step <= nrem; ++step) {
    const double t = t0 + static_cast<double>(step) * h;
    parallel_for(static_cast<std::size_t>(K + 1), opt.workers, [&](std::size_t i) {
      const int n = static_cast<int>(i);
      const VecC Fx = 2.0 * F[n] - F_old[n];
      s[n] = ops[n]->step(h) * VecC(s[n] + 0.5 * h * F[n]) + 0.5 * h * Fx;
    });
    F_old = F;
    bool finite = true;
    for (int n = 0; n <= K; ++n) {
      finite = finite && s[n].allFinite();
      update_fields(n);
    }
    if (!finite) {
      run.stop_reason = "non-finite state at t = " + std::to_string(t);
      run.blew_up = true;
      break;
    }
    eval_rhs(t);
    const Rates r = rates();
    max_rate = std::max(max_rate, std::abs(r.total()));
    max_defect = std::max(max_defect, std::abs(r.E - r_prev.E - 0.5 * h * (r.total() + r_prev.total())));
    r_prev = r;
    if (opt.checkpoint_every > 0 && !opt.checkpoint_path.empty() && step % opt.checkpoint_every == 0)
      write_checkpoint(opt.checkpoint_path, {t, h, s, F_old}, nu, a);
    if (step % opt.sample_every == 0 || step == nrem) {
      auto smp = sample_now(t);
      smp.enstrophy = r.E;
      run.series.push_back(smp);
      run.max_tail_ratio = std::max(run.max_tail_ratio, smp.tail_ratio);
      if (zero_seed) run.stationarity_drift = std::max(run.stationarity_drift, smp.omega_inf);
      if (run.seed > 0 && smp.v_inf > opt.blowup_factor * run.seed) {
        run.blew_up = true;
        run.stop_reason = "velocity exceeded " + std::to_string(opt.blowup_factor) + " x seed at t = " +
                          std::to_string(t);
        break;
      }
    }
  }
  run.under_resolved = run.max_tail_ratio > opt.tail_tol;
  run.budget.closure = max_rate > 0 ? max_defect / (h * max_rate) : 0.0;
  run.budget.dissipation = r_prev.diss;
  run.budget.boundary_flux = r_prev.flux;
  run.budget.production = r_prev.prod;
  run.budget.transfer = r_prev.transfer;
  for (int n = 0; n <= K; ++n) run.omega.emplace_back(grid, f[n].omega, n * a);
  return run;
}

std::optional<double> crossing_time(const std::vector<NonlinSample>& s, double level) {
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k - 1].v_inf < level && s[k].v_inf >= level) {
      const double a = std::log(s[k - 1].v_inf), b = std::log(s[k].v_inf), l = std::log(level);
      if (!std::isfinite(a)) return s[k].t;
      return s[k - 1].t + (l - a) / (b - a) * (s[k].t - s[k - 1].t);
    }
  }
  if (!s.empty() && s.front().v_inf >= level) return s.front().t;
  return std::nullopt;
}

InstabilityMeasure measure_instability(const NonlinRun& run, std::vector<double> levels,
                                       std::optional<double> linear_cap, double dU_sup) {
  const double nu = run.nu;
  if (levels.empty()) levels = {std::pow(nu, 0.75), std::pow(nu, 0.625)};
  const double cap = linear_cap.value_or(1e-2 * std::pow(nu, 0.625));
  std::vector<double> t, y;
  for (const auto& s : run.series)
    if (s.v_inf > 0 && s.v_inf < cap) {
      t.push_back(s.t);
      y.push_back(std::log(s.v_inf));
    }
  if (t.size() < 3) throw NumericalError("measure_instability: no linear phase (fewer than 3 samples below the cap)");
  InstabilityMeasure m;
  m.fit = fit_line(t, y);
  m.growth_rate = m.fit.slope;
  for (double l : levels) m.crossings.emplace_back(l, crossing_time(run.series, l));
  m.final_omega = run.series.empty() ? 0.0 : run.series.back().omega_inf;
  double peak = 0.0;
  for (const auto& s : run.series) peak = std::max(peak, s.omega_inf);
  m.reached_order_one = peak >= 0.1 * dU_sup;
  return m;
}

}  // namespace tsbl
