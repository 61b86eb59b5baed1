#pragma once

namespace nstab::specfun {

/// Rising factorial (x)_d = x (x+1) ... (x+d-1), with (x)_0 = 1.
double rising_factorial(double x, int d);

/// Gegenbauer polynomial C_d^(alpha)(t) by three-term recurrence.
/// Requires alpha > -1/2 and t in [-1, 1]; satisfies C_d(1) = (2 alpha)_d / d!.
double gegenbauer(int degree, double alpha, double t);

/// Hermite polynomial h_m(x) = He_m(x) / m!, so that {sqrt(m!) h_m} is
/// orthonormal for the standard Gaussian weight.
double hermite(int degree, double x);

/// I_{alpha+1}(a) / I_alpha(a) for alpha >= 0, a >= 0, evaluated by a
/// continued fraction so the bounded ratio never goes through the
/// individually overflowing Bessel values.  Lies in [0, 1), increasing in a,
/// and sandwiched by
///   a / (alpha+1 + sqrt((alpha+1)^2 + a^2)) <= ratio
///                                          <= a / (alpha + sqrt(alpha^2 + a^2)).
double bessel_ratio(double alpha, double a);

/// coth(a) - 1/a = 1 - 1/a + 2/(e^{2a} - 1), with a series branch near zero.
/// Equals bessel_ratio(1/2, a).
double langevin(double a);

/// Upper Gaussian tail integral int_x^inf exp(-t^2/2) dt.
double gaussian_tail(double x);

/// log of gaussian_tail(x); stays finite far into the tail where the
/// integral itself underflows.
double gaussian_tail_log(double x);

}  // namespace nstab::specfun
