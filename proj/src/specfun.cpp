#include "nstab/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nstab::specfun {

double rising_factorial(double x, int d) {
  if (d < 0) throw std::domain_error("rising_factorial: d must be >= 0");
  double p = 1.0;
  for (int j = 0; j < d; ++j) p *= x + j;
  return p;
}

double gegenbauer(int degree, double alpha, double t) {
  if (degree < 0) throw std::domain_error("gegenbauer: degree must be >= 0");
  if (alpha <= -0.5) throw std::domain_error("gegenbauer: alpha must be > -1/2");
  if (t < -1.0 || t > 1.0)
    throw std::domain_error("gegenbauer: t must lie in [-1, 1]");
  if (degree == 0) return 1.0;
  double c0 = 1.0;
  double c1 = 2.0 * alpha * t;
  for (int k = 2; k <= degree; ++k) {
    const double c2 =
        (2.0 * t * (k + alpha - 1.0) * c1 - (k + 2.0 * alpha - 2.0) * c0) / k;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

double hermite(int degree, double x) {
  if (degree < 0) throw std::domain_error("hermite: degree must be >= 0");
  if (degree == 0) return 1.0;
  double h0 = 1.0;
  double h1 = x;
  for (int m = 1; m < degree; ++m) {
    const double h2 = (x * h1 - h0) / (m + 1.0);
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

double bessel_ratio(double alpha, double a) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::domain_error("bessel_ratio: alpha must be finite and >= 0");
  if (!(a >= 0.0) || !std::isfinite(a))
    throw std::domain_error("bessel_ratio: a must be finite and >= 0");
  if (a == 0.0) return 0.0;

  // Modified Lentz on  ratio = a / (2(alpha+1) + a^2 / (2(alpha+2) + ...)),
  // the continued fraction from the three-term recurrence
  // I_{nu-1}(a) - I_{nu+1}(a) = (2 nu / a) I_nu(a).
  constexpr double tiny = 1e-290;
  constexpr double eps = 1e-16;
  double f = tiny;
  double c = f;
  double d = 0.0;
  double numer = a;
  for (int k = 1; k < 200000; ++k) {
    const double b = 2.0 * (alpha + k);
    d = b + numer * d;
    if (d == 0.0) d = tiny;
    c = b + numer / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < eps) return f;
    numer = a * a;  // all partial numerators after the first are a^2
  }
  throw std::runtime_error("bessel_ratio: continued fraction did not converge");
}

double langevin(double a) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw std::domain_error("langevin: a must be finite and >= 0");
  if (a < 0.25) {
    // coth(a) - 1/a cancels ~1/a digits; the series stays below 1e-15
    // relative truncation on this branch while the direct formula would
    // already be off by ~5e-10 near a ~ 1e-3.
    const double a2 = a * a;
    return a *
           (1.0 / 3.0 +
            a2 * (-1.0 / 45.0 +
                  a2 * (2.0 / 945.0 +
                        a2 * (-1.0 / 4725.0 +
                              a2 * (2.0 / 93555.0 +
                                    a2 * (-1382.0 / 638512875.0 +
                                          a2 * (4.0 / 18243225.0)))))));
  }
  if (a > 350.0) return 1.0 - 1.0 / a;  // e^{2a} - 1 overflows; term is ~0
  return 1.0 - 1.0 / a + 2.0 / std::expm1(2.0 * a);
}

double gaussian_tail(double x) {
  return std::sqrt(M_PI / 2.0) * std::erfc(x / std::sqrt(2.0));
}

double gaussian_tail_log(double x) {
  if (x < 25.0) {
    const double v = gaussian_tail(x);
    return std::log(v);
  }
  // Asymptotic series: tail(x) = e^{-x^2/2}/x (1 - 1/x^2 + 3/x^4 - 15/x^6 ...)
  const double ix2 = 1.0 / (x * x);
  const double series =
      1.0 + ix2 * (-1.0 + ix2 * (3.0 + ix2 * (-15.0 + ix2 * 105.0)));
  return -0.5 * x * x - std::log(x) + std::log(series);
}

}  // namespace nstab::specfun
