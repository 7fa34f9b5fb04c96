#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace parasrc {

// Problem data for du/dt - div(A grad u) + b u = f with Robin boundary
// condition A grad u . n + sigma u = g and initial value q. A is symmetric,
// stored as {a11, a12, a22}. `ellipticity` is the declared lower bound on the
// smallest eigenvalue of A; assembly verifies it by sampling.
struct CoefficientSet {
  std::function<std::array<double, 3>(double, double, double)> A;
  std::function<double(double, double, double)> b;
  std::function<double(double, double, double)> sigma;
  std::function<double(double, double, double)> g;
  std::function<double(double, double)> q;
  double ellipticity = 0.0;
  bool time_independent = false;
};

inline double min_eigenvalue_sym2(double a11, double a12, double a22) {
  const double tr = a11 + a22;
  const double rad = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
  return 0.5 * (tr - rad);
}

inline CoefficientSet constant_coefficients(double a11, double a12, double a22, double b, double sigma,
                                            double g = 0.0, double q = 0.0) {
  const double lam = min_eigenvalue_sym2(a11, a12, a22);
  if (!(lam > 0.0)) throw std::invalid_argument("constant_coefficients: A is not positive definite");
  if (b < 0.0 || sigma < 0.0) throw std::invalid_argument("constant_coefficients: b and sigma must be >= 0");
  CoefficientSet c;
  c.A = [a11, a12, a22](double, double, double) { return std::array<double, 3>{a11, a12, a22}; };
  c.b = [b](double, double, double) { return b; };
  c.sigma = [sigma](double, double, double) { return sigma; };
  c.g = [g](double, double, double) { return g; };
  c.q = [q](double, double) { return q; };
  c.ellipticity = lam;
  c.time_independent = true;
  return c;
}

}  // namespace parasrc
