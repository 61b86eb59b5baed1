#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nstab/rng.hpp"

namespace nstab::measures {

/// Joint law of rho-correlated standard Gaussians on R^n x R^n.
struct GaussianPairLaw {
  int n = 3;
  double rho = 0.0;
  void validate() const;
};

/// Law N_rho^{r,s} on S^{n-1} x S^{n-1}: first marginal uniform, conditional
/// density of the second proportional to exp(a <u,v>) with
/// a = rho r s / (1 - rho^2).  Exact sampling is implemented for n = 3.
struct SpherePairLaw {
  int n = 3;
  double rho = 0.0;
  double r = 1.0;
  double s = 1.0;
  void validate() const;
  double concentration() const { return rho * r * s / (1.0 - rho * rho); }
};

/// Joint density G_rho(x, y) of the correlated Gaussian pair.
double density_G(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                 double rho);

/// Streams `count` correlated pairs (X, Y) with Y = rho X + sqrt(1-rho^2) Z.
void sample_gaussian_pairs(
    const GaussianPairLaw& law, SeededStream& stream, long count,
    const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        visit);

/// Fast fixed-dimension variant used by the Monte Carlo estimators.
std::pair<Eigen::Vector3d, Eigen::Vector3d> sample_gaussian_pair3(
    double rho, SeededStream& stream);

/// Streams `count` sphere pairs (U, V) ~ N_rho^{r,s}; n = 3 only (the tilted
/// cosine is drawn by exact inverse CDF, then V is completed by a uniform
/// rotation about U).
void sample_sphere_pairs(
    const SpherePairLaw& law, SeededStream& stream, long count,
    const std::function<void(const Eigen::Vector3d&, const Eigen::Vector3d&)>&
        visit);

std::pair<Eigen::Vector3d, Eigen::Vector3d> sample_sphere_pair3(
    double a, SeededStream& stream);

/// Uniform point on S^2.
Eigen::Vector3d sample_uniform_sphere(SeededStream& stream);

enum class HermiteIndexSet {
  coordinate_even,  // every coordinate of the multi-index even
  total_even        // only the total degree even
};

struct MehlerEvenResult {
  double partial_sum = 0.0;   // truncated Hermite sum over the index set
  double closed_form = 0.0;   // [G(x,x) + G(x,-x)] / (2 gamma(x)^2) - 1
  int terms = 0;              // degrees actually accumulated
  double last_increment = 0.0;
};

/// Truncated even-part Mehler sum
///   sum_{d even, 2 <= d <= D} rho^d sum_{|k|_1 = d} k! h_k(x)^2
/// against its closed form.  The partial sum is monotone in D and dominated
/// by the closed form; with the total_even index set it converges to it.
MehlerEvenResult mehler_even_defect(const Eigen::Vector3d& x, double rho,
                                    int degree_cap,
                                    HermiteIndexSet set =
                                        HermiteIndexSet::coordinate_even);

/// Closed form of the change-of-measure sum: the two-line expression bounding
///   sum_{d even >= 2} rho^d sum_k int |sqrt(k!) h_k / sqrt(phi)|^2 dgamma
/// after r^2/phi <= 3r/rho + r^2.  Defined for rho in (0, 1/9); bounded by
/// 9.4 rho there.
double change_of_measure_constant(double rho);

/// The same quantity as a radial quadrature of the kernel-difference
/// integrand; used to cross-validate the closed form.
double change_of_measure_quadrature(double rho);

}  // namespace nstab::measures
