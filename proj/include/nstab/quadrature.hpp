#pragma once

#include <functional>
#include <vector>

namespace nstab {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (G7/K15) integration on [a, b].
/// The worst panel is bisected until the summed error estimate drops below
/// max(abs_tol, rel_tol * |value|) or the panel budget runs out.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-10,
                     int max_panels = 4000);

/// Same, but throws std::runtime_error when the tolerance was not reached.
double integrate_or_throw(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-12,
                          double rel_tol = 1e-10, int max_panels = 4000);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (or remapped to [a, b]).
QuadratureRule gauss_legendre(int n);
QuadratureRule gauss_legendre(int n, double a, double b);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);

}  // namespace nstab
