#include "nstab/measures.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nstab/quadrature.hpp"
#include "nstab/specfun.hpp"

namespace nstab::measures {

void GaussianPairLaw::validate() const {
  if (n < 1) throw std::domain_error("GaussianPairLaw: n must be >= 1");
  if (!(rho > -1.0 && rho < 1.0))
    throw std::domain_error("GaussianPairLaw: rho must lie in (-1, 1)");
}

void SpherePairLaw::validate() const {
  if (n != 3)
    throw std::domain_error("SpherePairLaw: exact sampling requires n = 3");
  if (!(rho > -1.0 && rho < 1.0))
    throw std::domain_error("SpherePairLaw: rho must lie in (-1, 1)");
  if (!(r > 0.0) || !(s > 0.0))
    throw std::domain_error("SpherePairLaw: radii must be positive");
}

double density_G(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                 double rho) {
  if (x.size() != y.size())
    throw std::domain_error("density_G: dimension mismatch");
  if (!(rho > -1.0 && rho < 1.0))
    throw std::domain_error("density_G: rho must lie in (-1, 1)");
  const double n = static_cast<double>(x.size());
  const double omr2 = 1.0 - rho * rho;
  const double quad =
      (x.squaredNorm() + y.squaredNorm() - 2.0 * rho * x.dot(y)) / (2.0 * omr2);
  const double log_density =
      -n * std::log(2.0 * M_PI) - 0.5 * n * std::log(omr2) - quad;
  return std::exp(log_density);
}

void sample_gaussian_pairs(
    const GaussianPairLaw& law, SeededStream& stream, long count,
    const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        visit) {
  law.validate();
  if (count < 1) throw std::domain_error("sample_gaussian_pairs: count >= 1");
  const double c = std::sqrt(1.0 - law.rho * law.rho);
  Eigen::VectorXd x(law.n), y(law.n);
  for (long i = 0; i < count; ++i) {
    for (int j = 0; j < law.n; ++j) {
      x[j] = stream.next_normal();
      y[j] = law.rho * x[j] + c * stream.next_normal();
    }
    visit(x, y);
  }
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> sample_gaussian_pair3(
    double rho, SeededStream& stream) {
  const double c = std::sqrt(1.0 - rho * rho);
  Eigen::Vector3d x, y;
  for (int j = 0; j < 3; ++j) {
    x[j] = stream.next_normal();
    y[j] = rho * x[j] + c * stream.next_normal();
  }
  return {x, y};
}

Eigen::Vector3d sample_uniform_sphere(SeededStream& stream) {
  const double z = 1.0 - 2.0 * stream.next_uniform();
  const double angle = 2.0 * M_PI * stream.next_uniform();
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {rxy * std::cos(angle), rxy * std::sin(angle), z};
}

namespace {

// Cosine t with density proportional to e^{a t} on [-1, 1], by inverse CDF.
// Negative tilt reflects: e^{a t} with a < 0 is the mirror image in t.
double sample_tilted_cosine(double a, SeededStream& stream) {
  const double sign = a < 0.0 ? -1.0 : 1.0;
  a = std::fabs(a);
  const double xi = stream.next_uniform();
  if (a < 1e-12) return sign * (2.0 * xi - 1.0);
  // F^{-1}(xi) = 1 + log(xi + (1-xi) e^{-2a}) / a, written with log1p/expm1.
  return sign * (1.0 + std::log1p((xi - 1.0) * (-std::expm1(-2.0 * a))) / a);
}

}  // namespace

std::pair<Eigen::Vector3d, Eigen::Vector3d> sample_sphere_pair3(
    double a, SeededStream& stream) {
  const Eigen::Vector3d u = sample_uniform_sphere(stream);
  const double t = sample_tilted_cosine(a, stream);
  const double psi = 2.0 * M_PI * stream.next_uniform();
  // Orthonormal frame perpendicular to u.
  const Eigen::Vector3d pick =
      std::fabs(u.x()) < 0.5 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = u.cross(pick).normalized();
  const Eigen::Vector3d e2 = u.cross(e1);
  const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
  const Eigen::Vector3d v =
      t * u + st * (std::cos(psi) * e1 + std::sin(psi) * e2);
  return {u, v};
}

void sample_sphere_pairs(
    const SpherePairLaw& law, SeededStream& stream, long count,
    const std::function<void(const Eigen::Vector3d&, const Eigen::Vector3d&)>&
        visit) {
  law.validate();
  if (count < 1) throw std::domain_error("sample_sphere_pairs: count >= 1");
  const double a = law.concentration();
  for (long i = 0; i < count; ++i) {
    auto [u, v] = sample_sphere_pair3(a, stream);
    visit(u, v);
  }
}

MehlerEvenResult mehler_even_defect(const Eigen::Vector3d& x, double rho,
                                    int degree_cap, HermiteIndexSet set) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::domain_error("mehler_even_defect: rho must lie in [0, 1)");
  if (degree_cap < 2 || degree_cap % 2 != 0 || degree_cap > 24)
    throw std::domain_error(
        "mehler_even_defect: degree cap must be even in [2, 24]");

  MehlerEvenResult res;

  // Closed form via the Mehler kernel: averaging G_rho(x, +-x) kills the odd
  // part, and the d = 0 term is removed explicitly.
  const double omr2 = 1.0 - rho * rho;
  const double x2 = x.squaredNorm();
  // G(x,x) / gamma(x)^2 = (1-rho^2)^{-3/2} exp(x^2 (1 -/+ rho) rho/(1-rho^2))
  // with sign from <x, +-x>; combined here in one exponential each.
  const double e_plus = std::exp(rho * x2 / (1.0 + rho));
  const double e_minus = std::exp(-rho * x2 / (1.0 - rho));
  res.closed_form = 0.5 * std::pow(omr2, -1.5) * (e_plus + e_minus) - 1.0;

  if (rho == 0.0) return res;

  // Hermite tables h_m(x_i) up to the cap.
  std::vector<std::array<double, 3>> h(degree_cap + 1);
  std::vector<double> fact(degree_cap + 1, 1.0);
  for (int m = 0; m <= degree_cap; ++m) {
    for (int i = 0; i < 3; ++i) h[m][i] = specfun::hermite(m, x[i]);
    if (m > 0) fact[m] = fact[m - 1] * m;
  }

  double rho_d = rho * rho;
  for (int d = 2; d <= degree_cap; d += 2) {
    double layer = 0.0;
    for (int k1 = 0; k1 <= d; ++k1) {
      for (int k2 = 0; k2 + k1 <= d; ++k2) {
        const int k3 = d - k1 - k2;
        if (set == HermiteIndexSet::coordinate_even &&
            (k1 % 2 || k2 % 2 || k3 % 2))
          continue;
        const double hk = h[k1][0] * h[k2][1] * h[k3][2];
        layer += fact[k1] * fact[k2] * fact[k3] * hk * hk;
      }
    }
    const double incr = rho_d * layer;
    res.partial_sum += incr;
    res.last_increment = incr;
    ++res.terms;
    rho_d *= rho * rho;
    if (incr < 1e-12 && d >= 4) break;  // early termination, sum is monotone
  }
  return res;
}

double change_of_measure_constant(double rho) {
  if (!(rho > 0.0 && rho < 1.0 / 9.0))
    throw std::domain_error(
        "change_of_measure_constant: rho must lie in (0, 1/9)");
  const double c1 = 1.0 / (1.0 + rho) - 0.5;
  const double c2 = 1.0 / (1.0 - rho) - 0.5;
  const double omr32 = std::pow(1.0 - rho * rho, 1.5);
  const double sq2pi = std::sqrt(2.0 / M_PI);
  const double line1 = sq2pi * (1.0 / (2.0 * omr32)) * (3.0 / rho) *
                       (-2.0 * omr32 + 0.5 / c1 + 0.5 / c2);
  const double line2 =
      sq2pi * (1.0 / omr32) * (std::sqrt(M_PI) / 8.0) *
      (-2.0 * std::pow(2.0, 1.5) * omr32 + std::pow(c1, -1.5) +
       std::pow(c2, -1.5));
  return line1 + line2;
}

double change_of_measure_quadrature(double rho) {
  if (!(rho > 0.0 && rho < 1.0 / 9.0))
    throw std::domain_error(
        "change_of_measure_quadrature: rho must lie in (0, 1/9)");
  const double c1 = 1.0 / (1.0 + rho) - 0.5;
  const double c2 = 1.0 / (1.0 - rho) - 0.5;
  const double omr32 = std::pow(1.0 - rho * rho, 1.5);
  auto f = [&](double r) {
    const double r2 = r * r;
    const double kernel = -2.0 * omr32 * std::exp(-0.5 * r2) +
                          std::exp(-c1 * r2) + std::exp(-c2 * r2);
    return (3.0 * r / rho + r2) * kernel / (2.0 * omr32);
  };
  // The slowest factor decays like exp(-c1 r^2) with c1 ~ (1-rho)/2.
  const double upper = 14.0 / std::sqrt(std::min(c1, 0.5));
  const double v = integrate_or_throw(f, 0.0, upper, 1e-13, 1e-11, 20000);
  return std::sqrt(2.0 / M_PI) * v;
}

}  // namespace nstab::measures
