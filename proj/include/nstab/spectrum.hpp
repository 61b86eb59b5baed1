#pragma once

namespace nstab::spectrum {

/// Query for the Funk-Hecke eigenvalue lambda_{d,n}^{r,s} of the kernel
/// g_{rho,r,s}(t) ~ exp(rho r s t / (1 - rho^2)) on S^{n-1}.
struct EigenvalueQuery {
  int d = 0;        // spherical-harmonic degree, >= 0
  int n = 3;        // ambient dimension, >= 2
  double rho = 0.0; // correlation in [0, 1)
  double r = 1.0;   // first radius, > 0
  double s = 1.0;   // second radius, > 0
};

/// The kernel g_{rho,r,s}(t) = e^{a t} * int (1-u^2)^{(n-3)/2} du /
/// int (1-u^2)^{(n-3)/2} e^{a u} du, normalized so that its weighted average
/// against the (1-t^2)^{(n-3)/2} marginal weight is 1.
struct KernelSpec {
  int n = 3;
  double rho = 0.0;
  double r = 1.0;
  double s = 1.0;

  double concentration() const { return rho * r * s / (1.0 - rho * rho); }
  /// z = int_{-1}^{1} (1-t^2)^{(n-3)/2} e^{a t} dt.
  double normalization() const;
  double operator()(double t) const;
};

/// Tilt strength a = rho r s / (1 - rho^2).  Requires rho in (0,1), r,s > 0.
double concentration(double rho, double r, double s);

/// First eigenvalue lambda_1 = I_{n/2}(a) / I_{n/2-1}(a); for n = 3 this is
/// the Langevin function.
double lambda1(int n, double a);

/// lambda_d by adaptive quadrature of the defining ratio of integrals
///   int C_d(t)/C_d(1) (1-t^2)^{(n-3)/2} e^{a t} dt
///   ------------------------------------------------
///   int            (1-t^2)^{(n-3)/2} e^{a t} dt
/// Degenerate tilt (rho r s = 0) returns the analytic limit instead of 0/0.
double lambda_d_quadrature(const EigenvalueQuery& q, double tol = 1e-10);

/// Radial weight phi(rho, r) = 1 - 1/(rho r) + 2/(e^{2 rho r} - 1), the exact
/// form all downstream constants are calibrated against.  Equals
/// langevin(rho * r).
double phi(double rho, double r);

/// e^{9/(8 a^2)} * gaussian_tail(3/(2a)), the closed-form lower bound for the
/// chi-weighted radial average of lambda_1 in dimension 3.  Evaluated in the
/// log domain so small a does not overflow.
double radial_avg_lower_bound(double a);

/// | int_0^inf r^3 e^{-r^2/(2a^2)} / (1 + sqrt(1+r^2)) dr
///   - e^{1/(2a^2)} a^3 gaussian_tail(1/a) |,
/// both sides evaluated independently.  The identity is exact; the returned
/// defect is pure numerical error and stays below 1e-8 for a in [0.05, 20].
double radial_integral_identity_defect(double a);

/// sqrt(2/pi) int_0^inf r^2 lambda_1(3, rho r sqrt(1-rho^2) s / (1-rho^2))
///            e^{-r^2/2} dr,
/// the chi(3)-averaged first eigenvalue at deflated first radius.
double mean_lambda1_radial(double rho, double s);

}  // namespace nstab::spectrum
