#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nstab/measures.hpp"
#include "nstab/specfun.hpp"
#include "nstab/sphharm.hpp"
#include "nstab/stability.hpp"

using namespace nstab;
using namespace nstab::stability;

namespace {
const Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();
const Eigen::Vector3d e3 = Eigen::Vector3d::UnitZ();

double combined_se(const StabilityEstimate& a, const StabilityEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}
}  // namespace

TEST_CASE("constant function has stability exactly 1") {
  const SphereValuedFunction f = SphereValuedFunction::constant(2.0 * e1);
  const StabilityEstimate est = noise_stability_mc(f, 0.4, 7, 20000);
  CHECK(est.value == 1.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("fopt Monte Carlo agrees with the quadrature value") {
  const SphereValuedFunction f = SphereValuedFunction::fopt();
  for (double rho : {0.05, 0.1}) {
    const StabilityEstimate est = noise_stability_mc(f, rho, 11, 400000);
    CHECK(std::fabs(est.value - fopt_stability(rho)) <= 4.0 * est.std_error);
  }
}

TEST_CASE("mean-zero function at rho = 0 has zero stability") {
  SeededStream stream(31, 0);
  const SphereValuedFunction f =
      random_shell_harmonic(stream, default_shell_grid(), 2, true);
  const StabilityEstimate est = noise_stability_mc(f, 0.0, 13, 200000);
  CHECK(std::fabs(est.value) <= 4.0 * est.std_error);
}

TEST_CASE("stability estimates are bounded and worker-count invariant") {
  SeededStream stream(37, 0);
  const SphereValuedFunction f =
      random_shell_harmonic(stream, default_shell_grid(), 2, false);
  const StabilityEstimate serial = noise_stability_mc(f, 0.2, 5, 150000, 1);
  const StabilityEstimate parallel = noise_stability_mc(f, 0.2, 5, 150000, 4);
  CHECK(serial.value == parallel.value);  // bitwise, by chunked reduction
  CHECK(std::fabs(serial.value) <= 1.0 + 4.0 * serial.std_error);
}

TEST_CASE("non-unit outputs abort with diagnostics") {
  const SphereValuedFunction bad = SphereValuedFunction::closed_form(
      "bad", [](const Eigen::Vector3d&) { return Eigen::Vector3d(0.5, 0, 0); });
  CHECK_THROWS_AS(noise_stability_mc(bad, 0.1, 1, 100), std::runtime_error);
}

TEST_CASE("fopt stability is increasing in rho and vanishes at zero") {
  CHECK(fopt_stability(0.0) == 0.0);
  double prev = 0.0;
  for (double rho = 0.01; rho <= 0.2 + 1e-12; rho += 0.01) {
    const double v = fopt_stability(rho);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("projection norms: constants, the identity map, Parseval") {
  // Constant c: all mass at degree 0.
  const Eigen::Vector3d c(0.3, -0.2, 0.9);
  const std::vector<double> nc = spherical_projection_norms(
      [&](const Eigen::Vector3d&) { return c; }, 4);
  CHECK(nc[0] == doctest::Approx(c.squaredNorm()).epsilon(1e-12));
  for (int d = 1; d <= 4; ++d) CHECK(std::fabs(nc[d]) < 1e-20);

  // Identity map: unit mass at degree 1 (1/3 per coordinate).
  const std::vector<double> ni = spherical_projection_norms(
      [](const Eigen::Vector3d& u) { return u; }, 4);
  CHECK(std::fabs(ni[0]) < 1e-20);
  CHECK(ni[1] == doctest::Approx(1.0).epsilon(1e-12));
  for (int d = 2; d <= 4; ++d) CHECK(std::fabs(ni[d]) < 1e-18);

  // Sphere-valued function: total projected mass approaches E|F|^2 = 1.
  auto F = [](const Eigen::Vector3d& u) {
    return Eigen::Vector3d((u + 0.4 * Eigen::Vector3d::UnitZ()).normalized());
  };
  double total = 0.0;
  for (double v : spherical_projection_norms(F, 10)) total += v;
  CHECK(total <= 1.0 + 1e-10);
  CHECK(total > 0.999);
}

TEST_CASE("quadrature degree below 2D is rejected") {
  CHECK_THROWS_AS(spherical_projection_norms(
                      [](const Eigen::Vector3d& u) { return u; }, 5, 6),
                  std::domain_error);
}

TEST_CASE("spherical noise stability: spectral identities") {
  // F(x) = x carries all mass at d = 1, so the stability is lambda_1.
  const double rho = 0.3, r = 1.2, s = 0.9;
  const double a = rho * r * s / (1.0 - rho * rho);
  const double spec = spherical_noise_stability(
      [](const Eigen::Vector3d& u) { return u; }, rho, r, s, 3);
  CHECK(spec == doctest::Approx(specfun::langevin(a)).epsilon(1e-8));

  // Constants are fixed by the smoothing operator.
  const Eigen::Vector3d c = Eigen::Vector3d(0.1, 0.5, -0.2).normalized();
  CHECK(spherical_noise_stability([&](const Eigen::Vector3d&) { return c; },
                                  rho, r, s, 3) ==
        doctest::Approx(1.0).epsilon(1e-10));

  // Zero tilt keeps only the squared mean.
  const double at_zero = spherical_noise_stability(
      [&](const Eigen::Vector3d& u) {
        return Eigen::Vector3d(0.6 * c + 0.5 * u);
      },
      0.0, r, s, 3);
  CHECK(at_zero == doctest::Approx(0.36).epsilon(1e-10));
}

TEST_CASE("spectral form agrees with sphere-pair Monte Carlo") {
  SeededStream gen(4242);
  for (int trial = 0; trial < 6; ++trial) {
    // Random band-limited F (degree <= 2), not normalized: the spectral sum
    // at D = 2 is then exact, so only MC noise separates the two routes.
    const int nlm = 9;
    std::vector<double> coefs(3 * nlm);
    for (double& c : coefs) c = 0.4 * gen.next_normal();
    auto F = [&coefs, nlm](const Eigen::Vector3d& u) {
      double basis[9];
      nstab::sphharm::evaluate_basis(2, u, basis);
      Eigen::Vector3d out = Eigen::Vector3d::Zero();
      for (int coord = 0; coord < 3; ++coord)
        for (int lm = 0; lm < nlm; ++lm)
          out[coord] += coefs[coord * nlm + lm] * basis[lm];
      return out;
    };
    const double rho = 0.1 + 0.5 * gen.next_uniform();
    const double r = 0.4 + 1.6 * gen.next_uniform();
    const double s = 0.4 + 1.6 * gen.next_uniform();
    const double spectral = spherical_noise_stability(F, rho, r, s, 2);

    measures::SpherePairLaw law{3, rho, r, s};
    SeededStream stream(900 + trial, 0);
    const long count = 200000;
    double sum = 0.0, sumsq = 0.0;
    measures::sample_sphere_pairs(
        law, stream, count,
        [&](const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
          const double q = F(u).dot(F(v));
          sum += q;
          sumsq += q * q;
        });
    const double mean = sum / count;
    const double se =
        std::sqrt((sumsq / count - mean * mean) / (count - 1.0));
    CHECK(std::fabs(spectral - mean) <= 4.0 * se);

    // Parseval with equality for band-limited F.
    double mass = 0.0;
    for (double nrm : spherical_projection_norms(F, 2)) mass += nrm;
    double e_norm = 0.0;
    const auto quad = nstab::sphharm::SphereQuadrature::for_degree(8);
    for (size_t q = 0; q < quad.points.size(); ++q)
      e_norm += quad.weights[q] * F(quad.points[q]).squaredNorm();
    CHECK(mass == doctest::Approx(e_norm).epsilon(1e-10));
  }
}

TEST_CASE("radial mean profiles of the builtin functions") {
  const std::vector<double> shells = {0.5, 1.0, 2.0, 4.0};

  const RadialMeanProfile p_opt =
      radial_mean_profile(SphereValuedFunction::fopt(), shells);
  for (const Eigen::Vector3d& m : p_opt.means) CHECK(m.norm() < 1e-14);
  CHECK(p_opt.gaussian_mean.norm() < 1e-12);

  const RadialMeanProfile p_const =
      radial_mean_profile(SphereValuedFunction::constant(e1), shells);
  for (const Eigen::Vector3d& m : p_const.means)
    CHECK((m - e1).norm() < 1e-13);
  CHECK((p_const.gaussian_mean - e1).norm() < 1e-9);

  // Identity map inside r < 1, constant e1 outside.
  const SphereValuedFunction piecewise = SphereValuedFunction::closed_form(
      "piecewise", [](const Eigen::Vector3d& x) {
        const double r = x.norm();
        if (r >= 1.0) return Eigen::Vector3d::UnitX().eval();
        return r > 0 ? Eigen::Vector3d(x / r) : Eigen::Vector3d::UnitZ().eval();
      });
  const RadialMeanProfile p_mix = radial_mean_profile(piecewise, shells);
  CHECK(p_mix.means[0].norm() < 1e-14);
  CHECK((p_mix.means[2] - e1).norm() < 1e-14);
  CHECK((p_mix.means[3] - e1).norm() < 1e-14);
  // per-shell norms stay inside the unit ball
  for (const Eigen::Vector3d& m : p_mix.means) CHECK(m.norm() <= 1.0 + 1e-14);
}

TEST_CASE("profile interpolation clamps and reports coverage") {
  RadialMeanProfile p;
  p.shells = {1.0, 2.0};
  p.means = {e1, e3};
  CHECK((p.at(0.5) - e1).norm() == 0.0);   // clamped low
  CHECK((p.at(3.0) - e3).norm() == 0.0);   // clamped high
  CHECK((p.at(1.5) - 0.5 * (e1 + e3)).norm() < 1e-15);
  CHECK(p.covers(1.5));
  CHECK(!p.covers(0.5));
  CHECK(!p.covers(2.5));
}

TEST_CASE("function spec parsing round-trips and rejects bad input") {
  SeededStream stream(41, 0);
  const std::vector<double> shells = {0.5, 1.0, 2.0};
  const SphereValuedFunction f = random_shell_harmonic(stream, shells, 2, true);
  std::ostringstream text;
  write_function_spec(text, *f.spec());
  std::istringstream in(text.str());
  const SphereValuedFunction g = parse_function_spec(in);
  SeededStream probe(99);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d x;
    for (int k = 0; k < 3; ++k) x[k] = probe.next_normal();
    CHECK((f(x) - g(x)).norm() < 1e-15);
  }

  auto expect_throw = [](const std::string& body) {
    std::istringstream bad(body);
    CHECK_THROWS_AS(parse_function_spec(bad), std::runtime_error);
  };
  expect_throw("kind nonsense\n");
  expect_throw("kind shell_harmonic\ndegree 1\nshells 1 2\ncoef 5 0 1 0 0.3\n");
  expect_throw("kind shell_harmonic\ndegree 1\nshells 1 2\ncoef 0 0 3 0 0.3\n");
  expect_throw("kind shell_harmonic\ndegree 1\nshells 2 1\n");
  expect_throw("wibble 3\n");

  std::istringstream builtin("kind fopt\n");
  CHECK(parse_function_spec(builtin).name() == "fopt");
}

TEST_CASE("random shell-harmonic functions are unit-valued and mean-zero") {
  SeededStream stream(43, 0);
  const SphereValuedFunction f =
      random_shell_harmonic(stream, default_shell_grid(), 3, true);
  SeededStream probe(17);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d x;
    for (int k = 0; k < 3; ++k) x[k] = probe.next_normal();
    CHECK(std::fabs(f(x).norm() - 1.0) <= 1e-12);
  }
  const RadialMeanProfile p = radial_mean_profile(f, default_shell_grid());
  CHECK(p.gaussian_mean.norm() < 0.02);
}

TEST_CASE("quadratic bound: closed-form families") {
  // f constant: lambda + 1 - lambda = 1 pointwise.
  const SphereValuedFunction c = SphereValuedFunction::constant(e1);
  const BoundEstimate bc = quadratic_bound_rhs(c, 0.1, 3, 5000);
  CHECK(bc.estimate.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bc.estimate.std_error < 1e-9);

  // f = fopt: the profile vanishes, so the bound reduces to E lambda.
  const SphereValuedFunction fopt = SphereValuedFunction::fopt();
  const BoundEstimate bo = quadratic_bound_rhs(fopt, 0.05, 3, 400000);
  CHECK(std::fabs(bo.estimate.value - fopt_stability(0.05)) <=
        4.0 * bo.estimate.std_error);
}

TEST_CASE("bilinear bound: closed-form families") {
  const SphereValuedFunction fopt = SphereValuedFunction::fopt();
  const SphereValuedFunction neg = SphereValuedFunction::closed_form(
      "neg_fopt", [](const Eigen::Vector3d& x) {
        const double r = x.norm();
        return r > 0 ? Eigen::Vector3d(-x / r) : e3;
      });
  const BoundEstimate bo = bilinear_bound_rhs(fopt, neg, 0.05, 3, 400000);
  CHECK(std::fabs(bo.estimate.value + fopt_stability(0.05)) <=
        4.0 * bo.estimate.std_error);

  const SphereValuedFunction c = SphereValuedFunction::constant(e1);
  const BoundEstimate bc = bilinear_bound_rhs(c, c, 0.1, 3, 5000);
  CHECK(bc.estimate.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bound estimators bracket the stability of random functions") {
  const std::vector<double> shells = default_shell_grid();
  for (int k = 0; k < 4; ++k) {
    SeededStream gen(1000 + k, 0);
    const SphereValuedFunction f =
        random_shell_harmonic(gen, shells, 2, k % 2 == 0);
    const double rho = 0.05;
    const RadialMeanProfile profile = radial_mean_profile(f, shells);
    const StabilityEstimate lhs = noise_stability_mc(f, rho, 50 + k, 120000);
    const BoundEstimate rhs =
        quadratic_bound_rhs(f, rho, 60 + k, 120000, &profile);
    CHECK(lhs.value <= rhs.estimate.value +
                           4.0 * combined_se(lhs, rhs.estimate));

    SeededStream gen2(2000 + k, 0);
    const SphereValuedFunction g =
        random_shell_harmonic(gen2, shells, 2, k % 2 == 0);
    const RadialMeanProfile gprofile = radial_mean_profile(g, shells);
    const StabilityEstimate blhs =
        noise_stability_mc(f, g, rho, 70 + k, 120000);
    const BoundEstimate brhs = bilinear_bound_rhs(f, g, rho, 80 + k, 120000,
                                                  &profile, &gprofile);
    CHECK(blhs.value >= brhs.estimate.value -
                            4.0 * combined_se(blhs, brhs.estimate));
  }
}

TEST_CASE("negative correlation reduces to the bilinear form at +rho") {
  // E_{X ~_{-rho} Y} <f(X), f(Y)> = E_{X ~_rho Y} <f(X), f(-Y)>: the sign
  // reduction behind certifying negative correlations with rho > 0.
  SeededStream gen(71, 0);
  const SphereValuedFunction f =
      random_shell_harmonic(gen, default_shell_grid(), 2, false);
  const SphereValuedFunction reflected = SphereValuedFunction::closed_form(
      "reflected", [f](const Eigen::Vector3d& x) { return f(-x); });
  const double rho = 0.07;
  const StabilityEstimate neg = noise_stability_mc(f, -rho, 81, 200000);
  const StabilityEstimate red =
      noise_stability_mc(f, reflected, rho, 82, 200000);
  CHECK(std::fabs(neg.value - red.value) <= 4.0 * combined_se(neg, red));
}

TEST_CASE("readout profile matches quadrature when projection is exact") {
  // A radial sign function as a shell-harmonic table: the l = 0 coefficient
  // is a unit vector per shell, so projection is the identity and the
  // declared coefficients ARE the shell means.
  const std::vector<double> shells = {0.5, 1.0, 2.0, 4.0};
  ShellHarmonicSpec spec;
  spec.degree = 0;
  spec.shells = shells;
  spec.coefs.assign(shells.size() * 3, 0.0);
  for (size_t sh = 0; sh < shells.size(); ++sh)
    spec.coef(static_cast<int>(sh), 0, 0) = shells[sh] < 1.5 ? 1.0 : -1.0;
  const SphereValuedFunction f = SphereValuedFunction::shell_harmonic(spec);
  const RadialMeanProfile by_quad =
      radial_mean_profile(f, shells, 24, ProfileMethod::quadrature);
  const RadialMeanProfile by_readout =
      radial_mean_profile(f, shells, 24, ProfileMethod::readout);
  for (size_t i = 0; i < shells.size(); ++i)
    CHECK((by_quad.means[i] - by_readout.means[i]).norm() < 1e-13);
  CHECK(f.projection_flags() == 0);
  // readout needs the table representation
  CHECK_THROWS_AS(radial_mean_profile(SphereValuedFunction::fopt(), shells, 24,
                                      ProfileMethod::readout),
                  std::domain_error);
}

TEST_CASE("bound estimators flag radii outside a narrow profile grid") {
  const std::vector<double> narrow = {0.9, 1.0, 1.1};
  const SphereValuedFunction c = SphereValuedFunction::constant(e1);
  const RadialMeanProfile p = radial_mean_profile(c, narrow);
  const BoundEstimate b = quadratic_bound_rhs(c, 0.1, 3, 5000, &p);
  CHECK(b.clamped > 0);
}
