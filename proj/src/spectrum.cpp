#include "nstab/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "nstab/quadrature.hpp"
#include "nstab/specfun.hpp"

namespace nstab::spectrum {

using specfun::bessel_ratio;
using specfun::gaussian_tail_log;
using specfun::gegenbauer;
using specfun::langevin;
using specfun::rising_factorial;

double concentration(double rho, double r, double s) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::domain_error("concentration: rho must lie in (0, 1)");
  if (!(r > 0.0) || !(s > 0.0))
    throw std::domain_error("concentration: radii must be positive");
  return rho * r * s / (1.0 - rho * rho);
}

namespace {

// int_{-1}^{1} (1-t^2)^{(n-3)/2} e^{a(t-1)} dt via t = sin(theta).
double weighted_exp_integral(int n, double a) {
  return integrate_or_throw(
      [&](double th) {
        const double t = std::sin(th);
        return std::pow(std::cos(th), n - 2.0) * std::exp(a * (t - 1.0));
      },
      -0.5 * M_PI, 0.5 * M_PI, 0.0, 1e-12, 8000);
}

}  // namespace

double KernelSpec::normalization() const {
  if (n < 2) throw std::domain_error("KernelSpec: dimension must be >= 2");
  if (!(rho > -1.0 && rho < 1.0) || !(r > 0.0) || !(s > 0.0))
    throw std::domain_error("KernelSpec: invalid parameters");
  const double a = concentration();
  return std::exp(a) * weighted_exp_integral(n, a);
}

double KernelSpec::operator()(double t) const {
  if (t < -1.0 || t > 1.0)
    throw std::domain_error("KernelSpec: t must lie in [-1, 1]");
  const double a = concentration();
  // int (1-u^2)^{(n-3)/2} du = sqrt(pi) Gamma((n-1)/2) / Gamma(n/2).
  const double flat = std::sqrt(M_PI) * std::tgamma(0.5 * (n - 1)) /
                      std::tgamma(0.5 * n);
  return std::exp(a * (t - 1.0)) * flat / weighted_exp_integral(n, a);
}

double lambda1(int n, double a) {
  if (n < 2) throw std::domain_error("lambda1: dimension must be >= 2");
  return bessel_ratio(0.5 * n - 1.0, a);
}

namespace {

// C_d^{(n/2-1)}(t) / C_d^{(n/2-1)}(1).  For n = 2 the normalized limit is the
// Chebyshev polynomial T_d.
double normalized_gegenbauer(int d, int n, double t) {
  if (d == 0) return 1.0;
  if (n == 2) return std::cos(d * std::acos(t));
  const double alpha = 0.5 * n - 1.0;
  double fac = 1.0;
  for (int j = 1; j <= d; ++j) fac *= j;
  const double at_one = rising_factorial(n - 2.0, d) / fac;
  return gegenbauer(d, alpha, t) / at_one;
}

}  // namespace

double lambda_d_quadrature(const EigenvalueQuery& q, double tol) {
  if (q.d < 0) throw std::domain_error("lambda_d_quadrature: d must be >= 0");
  if (q.n < 2) throw std::domain_error("lambda_d_quadrature: n must be >= 2");
  if (!(q.rho >= 0.0 && q.rho < 1.0))
    throw std::domain_error("lambda_d_quadrature: rho must lie in [0, 1)");
  if (!(q.r >= 0.0) || !(q.s >= 0.0))
    throw std::domain_error("lambda_d_quadrature: radii must be >= 0");
  if (q.d == 0) return 1.0;

  const double a = q.rho * q.r * q.s / (1.0 - q.rho * q.rho);
  if (a == 0.0) return 0.0;  // Gegenbauer orthogonality against the flat kernel

  // Substitute t = sin(theta): the weight (1-t^2)^{(n-3)/2} dt becomes
  // cos^{n-2}(theta) d(theta), smooth at the endpoints for every n >= 2.
  // Both integrands carry e^{a(t-1)} instead of e^{at} to keep them bounded.
  const int n = q.n;
  const int d = q.d;
  auto weighted = [&](double theta, bool with_poly) {
    const double t = std::sin(theta);
    const double w = std::pow(std::cos(theta), n - 2.0);
    const double e = std::exp(a * (t - 1.0));
    return with_poly ? w * e * normalized_gegenbauer(d, n, t) : w * e;
  };
  const double half_pi = 0.5 * M_PI;
  QuadResult den = integrate([&](double th) { return weighted(th, false); },
                             -half_pi, half_pi, 0.0, tol, 8000);
  // High degrees cancel the numerator almost completely, so its tolerance is
  // anchored to the denominator: the *ratio* then carries absolute error tol.
  QuadResult num = integrate([&](double th) { return weighted(th, true); },
                             -half_pi, half_pi, tol * std::fabs(den.value),
                             tol, 8000);
  if (!num.converged || !den.converged)
    throw std::runtime_error("lambda_d_quadrature: quadrature did not converge");
  return num.value / den.value;
}

double phi(double rho, double r) {
  if (!(rho > 0.0)) throw std::domain_error("phi: rho must be positive");
  if (!(r > 0.0)) throw std::domain_error("phi: r must be positive");
  return langevin(rho * r);
}

double radial_avg_lower_bound(double a) {
  if (!(a > 0.0))
    throw std::domain_error("radial_avg_lower_bound: a must be positive");
  return std::exp(9.0 / (8.0 * a * a) + gaussian_tail_log(1.5 / a));
}

double radial_integral_identity_defect(double a) {
  if (!(a > 0.0))
    throw std::domain_error("radial_integral_identity_defect: a must be > 0");
  // Left side with r = a u, so the Gaussian factor has unit scale.
  auto f = [&](double u) {
    const double r = a * u;
    return a * r * r * r * std::exp(-0.5 * u * u) /
           (1.0 + std::sqrt(1.0 + r * r));
  };
  const double lhs = integrate_or_throw(f, 0.0, 14.0, 1e-14, 5e-14, 20000);
  const double rhs =
      std::exp(0.5 / (a * a) + 3.0 * std::log(a) + gaussian_tail_log(1.0 / a));
  return std::fabs(lhs - rhs);
}

double mean_lambda1_radial(double rho, double s) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::domain_error("mean_lambda1_radial: rho must lie in (0, 1)");
  if (!(s > 0.0))
    throw std::domain_error("mean_lambda1_radial: s must be positive");
  const double atilde = rho * s / std::sqrt(1.0 - rho * rho);
  auto f = [&](double r) {
    return r * r * langevin(atilde * r) * std::exp(-0.5 * r * r);
  };
  const double v = integrate_or_throw(f, 0.0, 40.0, 1e-13, 1e-11, 20000);
  return std::sqrt(2.0 / M_PI) * v;
}

}  // namespace nstab::spectrum
