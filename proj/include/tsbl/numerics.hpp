#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tsbl {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1, 1] (cached per n, thread-safe).
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 16,
                 int order = 12);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  /// Half-width of the 95% interval on the slope (Student t).
  double slope_ci95 = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = slope x + intercept. Needs n >= 2.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Two-sided 97.5% Student t quantile for `dof` degrees of freedom.
double student_t975(std::size_t dof);

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

/// Maximizes f on [a, b] by golden-section search.
GoldenResult golden_maximize(const std::function<double(double)>& f, double a, double b,
                             double xtol, int max_iter = 60);

/// Bisection for a sign change of f on [a, b]; requires f(a) f(b) <= 0.
std::optional<double> bisect(const std::function<double(double)>& f, double a, double b,
                             double xtol, int max_iter = 80);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; exceptions are rethrown on the caller's thread.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

/// Logarithmically spaced points, inclusive of both ends.
std::vector<double> geomspace(double a, double b, int n);
std::vector<double> linspace(double a, double b, int n);

}  // namespace tsbl
