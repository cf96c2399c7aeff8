#include "tsbl/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tsbl/errors.hpp"
#include "tsbl/numerics.hpp"

namespace tsbl {

ShearProfile::ShearProfile(std::string name, Evaluator eval, double u_plus, double eta0,
                           bool analytic)
    : name_(std::move(name)), eval_(std::move(eval)), u_plus_(u_plus), eta0_(eta0),
      analytic_(analytic) {
  if (!(eta0 > 0.0)) throw ConfigError("profile " + name_ + ": eta0 must be > 0");
}

namespace profiles {

ShearProfile exponential(double eta0) {
  return ShearProfile(
      "exponential",
      [](double z) {
        const double e = std::exp(-z);
        return Jet{1.0 - e, e, -e, e, -e};
      },
      1.0, eta0);
}

ShearProfile erf_profile(double eta0) {
  return ShearProfile(
      "erf",
      [](double z) {
        const double g = std::exp(-0.25 * z * z) / std::sqrt(std::numbers::pi);
        return Jet{std::erf(0.5 * z), g, -0.5 * z * g, (0.25 * z * z - 0.5) * g,
                   (0.75 * z - 0.125 * z * z * z) * g};
      },
      1.0, eta0);
}

ShearProfile z_exp() {
  return ShearProfile(
      "z_exp",
      [](double z) {
        const double e = std::exp(-z);
        return Jet{z * e, (1 - z) * e, (z - 2) * e, (3 - z) * e, (z - 4) * e};
      },
      0.0, 0.5);
}

ShearProfile inflected(double z0, double eta0) {
  const double scale = 1.0 / (1.0 + std::tanh(z0));
  const double shift = std::tanh(z0);
  return ShearProfile(
      "inflected",
      [=](double z) {
        const double t = std::tanh(z - z0);
        const double s = 1.0 - t * t;
        return Jet{(t + shift) * scale, s * scale, -2 * t * s * scale,
                   (-2 * s * s + 4 * t * t * s) * scale, (16 * t * s * s - 8 * t * t * t * s) * scale};
      },
      1.0, eta0);
}

ShearProfile tabulated(std::string name, std::vector<double> z, std::vector<double> u,
                       double u_plus, double eta0) {
  const std::size_t n = z.size();
  if (n < 4 || u.size() != n) throw ConfigError("tabulated profile needs >= 4 (z, U) rows");
  for (std::size_t i = 1; i < n; ++i)
    if (!(z[i] > z[i - 1])) throw ConfigError("tabulated profile: z must be increasing");

  // Natural cubic spline second derivatives (Thomas algorithm).
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = z[i] - z[i - 1], h1 = z[i + 1] - z[i];
    const double a = h0 / 6, b = (h0 + h1) / 3, cc = h1 / 6;
    const double rhs = (u[i + 1] - u[i]) / h1 - (u[i] - u[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) m[i] = d[i] - c[i] * m[i + 1];

  auto eval = [z = std::move(z), u = std::move(u), m = std::move(m), u_plus, eta0](double x) {
    const std::size_t n = z.size();
    if (x >= z.back()) {
      const double a = u.back() - u_plus;
      const double e = a * std::exp(-eta0 * (x - z.back()));
      return Jet{u_plus + e, -eta0 * e, eta0 * eta0 * e, -eta0 * eta0 * eta0 * e,
                 eta0 * eta0 * eta0 * eta0 * e};
    }
    std::size_t i = std::upper_bound(z.begin(), z.end(), x) - z.begin();
    i = std::clamp<std::size_t>(i, 1, n - 1);
    const double h = z[i] - z[i - 1];
    const double A = (z[i] - x) / h, B = (x - z[i - 1]) / h;
    const double val = A * u[i - 1] + B * u[i] + ((A * A * A - A) * m[i - 1] + (B * B * B - B) * m[i]) * h * h / 6;
    const double d1 = (u[i] - u[i - 1]) / h - (3 * A * A - 1) / 6 * h * m[i - 1] + (3 * B * B - 1) / 6 * h * m[i];
    const double d2 = A * m[i - 1] + B * m[i];
    const double d3 = (m[i] - m[i - 1]) / h;
    return Jet{val, d1, d2, d3, 0.0};
  };
  return ShearProfile(std::move(name), eval, u_plus, eta0, false);
}

ShearProfile from_csv(const std::string& path, double u_plus, double eta0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile table " + path);
  std::vector<double> z, u;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a >> b)) {
      if (z.empty()) continue;  // header
      throw ConfigError("malformed row in " + path + ": " + line);
    }
    z.push_back(a);
    u.push_back(b);
  }
  return tabulated(path, std::move(z), std::move(u), u_plus, eta0);
}

ShearProfile by_id(const std::string& id, double eta0) {
  if (id == "exponential") return exponential(eta0);
  if (id == "erf") return erf_profile(eta0);
  if (id == "z_exp") return z_exp();
  if (id == "inflected") return inflected(3.0, eta0);
  throw ConfigError("unknown profile formula id '" + id + "'");
}

}  // namespace profiles

double stationary_forcing(const ShearProfile& p, double z) { return -p.d2U(z); }

ValidationReport validate_profile(const ShearProfile& p, int n_samples, double tol, double z_max) {
  if (n_samples < 2) throw UsageError("validate_profile: need at least 2 samples");
  if (z_max <= 0) z_max = 40.0 / p.eta0();
  return validate_profile(p, linspace(0.0, z_max, n_samples), tol);
}

ValidationReport validate_profile(const ShearProfile& p, const std::vector<double>& z, double tol) {
  if (z.empty()) throw UsageError("validate_profile: empty grid");
  if (!(tol > 0)) throw UsageError("validate_profile: tol must be > 0");
  ValidationReport rep;
  rep.profile = p.name();
  rep.tol = tol;
  rep.z_max = z.back();
  rep.min_dU = std::numeric_limits<double>::infinity();

  // Weighted tail values, to separate "bounded" from "growing".
  std::array<double, 5> head_sup{}, tail_max{};
  const double z_half = 0.5 * z.back();
  for (double x : z) {
    const Jet j = p.jet(x);
    for (double v : j)
      if (!std::isfinite(v)) throw EvaluationError("non-finite profile evaluation", x);
    if (j[1] < rep.min_dU) {
      rep.min_dU = j[1];
      rep.min_dU_at = x;
    }
    const double w = std::exp(p.eta0() * x);
    for (int k = 0; k < 5; ++k) {
      const double v = std::abs(k == 0 ? j[0] - p.u_plus() : j[k]) * w;
      rep.weighted_sup[k] = std::max(rep.weighted_sup[k], v);
      if (x <= z_half) head_sup[k] = std::max(head_sup[k], v);
      else tail_max[k] = std::max(tail_max[k], v);
    }
  }
  const Jet j0 = p.jet(0.0);
  rep.U0 = j0[0];
  rep.dU0 = j0[1];

  rep.checks.push_back({"U(0) = 0", std::abs(rep.U0) <= tol, rep.U0});
  rep.checks.push_back({"U'(0) > 0", rep.dU0 > tol, rep.dU0});
  rep.checks.push_back({"U' > 0 on grid", rep.min_dU > 0.0, rep.min_dU});
  for (int k = 0; k < 5; ++k) {
    // Finite: the weighted quantity must not grow over the far half of the grid.
    const bool bounded = std::isfinite(rep.weighted_sup[k]) &&
                         tail_max[k] <= head_sup[k] * (1.0 + tol) + tol;
    rep.checks.push_back({"weighted sup k=" + std::to_string(k), bounded, rep.weighted_sup[k]});
  }
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](auto& c) { return c.pass; });
  return rep;
}

namespace {

constexpr double kCut = 9.0;  // exp(-81) is far below double resolution

// (1/sqrt(pi)) * integral over x in [lo, kCut] of exp(-x^2) f(x).
double gauss_window(const std::function<double(double)>& f, double lo) {
  if (lo >= kCut) return 0.0;
  const int panels = std::max(4, static_cast<int>(std::ceil((kCut - lo) / 0.6)));
  return integrate([&](double x) { return std::exp(-x * x) * f(x); }, lo, kCut, panels, 12) /
         std::sqrt(std::numbers::pi);
}

// integral_0^inf [G(z-y) - G(z+y)] f(y) dy for the unit-diffusivity heat kernel at time s.
double odd_kernel_apply(const std::function<double(double)>& f, double s, double z) {
  const double r = 2.0 * std::sqrt(s);
  const double a = gauss_window([&](double x) { return f(z + r * x); }, std::max(-kCut, -z / r));
  const double b = gauss_window([&](double x) { return f(-z + r * x); }, z / r);
  return a - b;
}

}  // namespace

double heat_evolve(const ShearProfile& p, double s, double z) {
  if (s < 0) throw DomainError("heat_evolve: slow time s must be >= 0");
  if (s == 0.0) return p.U(z);
  const double up = p.u_plus();
  return up * std::erf(z / (2.0 * std::sqrt(s))) +
         odd_kernel_apply([&](double y) { return p.U(y) - up; }, s, z);
}

double heat_evolve_d2(const ShearProfile& p, double s, double z) {
  if (s < 0) throw DomainError("heat_evolve: slow time s must be >= 0");
  if (s == 0.0) return p.d2U(z);
  // The odd extension of U has a piecewise-continuous second derivative,
  // so the kernel can be applied to U'' directly.
  return odd_kernel_apply([&](double y) { return p.d2U(y); }, s, z);
}

}  // namespace tsbl
