#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace nstab::sphharm {

/// Packed index of the real harmonic Y_{l,m}: l*(l+1) + m, m in [-l, l].
inline int index(int l, int m) { return l * (l + 1) + m; }
inline int basis_size(int lmax) { return (lmax + 1) * (lmax + 1); }

/// Evaluates all real spherical harmonics up to degree lmax at the unit
/// vector u, orthonormal with respect to the *normalized* surface measure
/// (so Y_00 = 1 and E[Y_lm Y_l'm'] = delta).  out must hold basis_size(lmax).
void evaluate_basis(int lmax, const Eigen::Vector3d& u, std::span<double> out);

/// Product quadrature on S^2: Gauss-Legendre in cos(theta) times uniform
/// longitudes.  Exact for spherical polynomials of total degree <= degree;
/// weights sum to 1 (normalized measure).
struct SphereQuadrature {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int degree = 0;
  static SphereQuadrature for_degree(int degree);
};

}  // namespace nstab::sphharm
