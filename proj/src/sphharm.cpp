#include "nstab/sphharm.hpp"

#include <cmath>
#include <stdexcept>

#include "nstab/quadrature.hpp"

namespace nstab::sphharm {

void evaluate_basis(int lmax, const Eigen::Vector3d& u, std::span<double> out) {
  if (lmax < 0) throw std::domain_error("evaluate_basis: lmax must be >= 0");
  if (out.size() < static_cast<size_t>(basis_size(lmax)))
    throw std::domain_error("evaluate_basis: output span too small");

  const double ct = u.z();                       // cos(theta)
  const double st = std::hypot(u.x(), u.y());    // sin(theta) >= 0
  double cp = 1.0, sp = 0.0;                     // cos/sin of phi
  if (st > 1e-300) {
    cp = u.x() / st;
    sp = u.y() / st;
  }

  // Normalized associated Legendre P̃_l^m via the standard stable recurrence,
  // scaled so that Y_lm below are orthonormal for the normalized measure.
  // Thread-local scratch: this sits inside the Monte Carlo inner loops.
  thread_local std::vector<double> plm;
  plm.assign(basis_size(lmax), 0.0);
  auto P = [](int l, int m) -> double& { return plm[index(l, m)]; };

  P(0, 0) = 1.0;
  for (int m = 1; m <= lmax; ++m)
    P(m, m) = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * P(m - 1, m - 1);
  for (int m = 0; m < lmax; ++m)
    P(m + 1, m) = std::sqrt(2.0 * m + 3.0) * ct * P(m, m);
  for (int m = 0; m <= lmax; ++m) {
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) /
                                 (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      P(l, m) = a * (ct * P(l - 1, m) - b * P(l - 2, m));
    }
  }

  // Azimuthal factors cos(m phi), sin(m phi) by recurrence.
  thread_local std::vector<double> cm, sm;
  cm.assign(lmax + 1, 0.0);
  sm.assign(lmax + 1, 0.0);
  cm[0] = 1.0;
  sm[0] = 0.0;
  for (int m = 1; m <= lmax; ++m) {
    cm[m] = cm[m - 1] * cp - sm[m - 1] * sp;
    sm[m] = sm[m - 1] * cp + cm[m - 1] * sp;
  }

  const double sqrt2 = std::sqrt(2.0);
  for (int l = 0; l <= lmax; ++l) {
    out[index(l, 0)] = P(l, 0);
    for (int m = 1; m <= l; ++m) {
      out[index(l, m)] = sqrt2 * P(l, m) * cm[m];
      out[index(l, -m)] = sqrt2 * P(l, m) * sm[m];
    }
  }
}

SphereQuadrature SphereQuadrature::for_degree(int degree) {
  if (degree < 0)
    throw std::domain_error("SphereQuadrature: degree must be >= 0");
  SphereQuadrature q;
  q.degree = degree;
  const int ntheta = degree / 2 + 1;  // GL integrates cos-polys to 2*ntheta-1
  const int nphi = degree + 1;
  const QuadratureRule gl = gauss_legendre(ntheta);
  q.points.reserve(static_cast<size_t>(ntheta) * nphi);
  q.weights.reserve(static_cast<size_t>(ntheta) * nphi);
  for (int i = 0; i < ntheta; ++i) {
    const double ct = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double w = gl.weights[i] / (2.0 * nphi);
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / nphi;
      q.points.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      q.weights.push_back(w);
    }
  }
  return q;
}

}  // namespace nstab::sphharm
