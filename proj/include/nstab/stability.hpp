#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nstab/rng.hpp"

namespace nstab::stability {

/// Shell-harmonic parametrization: a grid of shell radii and, per shell, a
/// real spherical-harmonic coefficient table up to `degree` for each of the
/// three output coordinates.  Between shells the coefficients interpolate
/// linearly; outside the grid they clamp to the boundary shell.
struct ShellHarmonicSpec {
  int degree = 0;
  std::vector<double> shells;
  std::vector<double> coefs;  // [shell][coord][lm] flattened

  int lm_count() const { return (degree + 1) * (degree + 1); }
  double& coef(int shell, int coord, int lm);
  double coef(int shell, int coord, int lm) const;
  void validate() const;
};

/// Map R^3 -> S^2.  Closed-form functions supply their own evaluator;
/// shell-harmonic functions evaluate the expansion and radially project to
/// the unit sphere.  Projections with pre-projection norm off by more than
/// 0.2 are counted on a shared flag counter, since they distort the declared
/// coefficients.
class SphereValuedFunction {
 public:
  using Evaluator = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

  static SphereValuedFunction closed_form(std::string name, Evaluator raw);
  static SphereValuedFunction fopt();
  static SphereValuedFunction constant(const Eigen::Vector3d& direction);
  static SphereValuedFunction shell_harmonic(ShellHarmonicSpec spec);

  /// Unit-norm value (radially projected).
  Eigen::Vector3d operator()(const Eigen::Vector3d& x) const;
  /// Pre-projection value.
  Eigen::Vector3d raw(const Eigen::Vector3d& x) const;

  const std::string& name() const;
  const ShellHarmonicSpec* spec() const;  // null for closed-form functions
  long projection_flags() const;
  void reset_projection_flags() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Parses the structured text format (kind/degree/shells/coef lines);
/// throws std::runtime_error with a line diagnostic on malformed input.
SphereValuedFunction parse_function_spec(std::istream& in);
SphereValuedFunction load_function_spec(const std::string& path);
void write_function_spec(std::ostream& out, const ShellHarmonicSpec& spec);

/// Random shell-harmonic sphere-valued function.  With mean_zero, the
/// angular part uses odd degrees only and the radial part is sign-balanced
/// under the chi(3) weight, so the Gaussian mean vanishes by symmetry.
SphereValuedFunction random_shell_harmonic(SeededStream& stream,
                                           std::span<const double> shells,
                                           int degree, bool mean_zero);

/// 64 geometrically spaced shells on [0.05, 8].
std::vector<double> default_shell_grid();

struct StabilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long count = 0;
  std::string method;  // "mc" | "spectral" | "quadrature"
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of E <f(X), g(Y)> over rho-correlated Gaussian
/// pairs.  Chunked by stream id and reduced in chunk order, so the result is
/// independent of `workers`.  Throws if either function returns a non-unit
/// vector (tolerance 1e-9).
StabilityEstimate noise_stability_mc(const SphereValuedFunction& f,
                                     const SphereValuedFunction& g, double rho,
                                     std::uint64_t seed, long count,
                                     int workers = 1);
StabilityEstimate noise_stability_mc(const SphereValuedFunction& f, double rho,
                                     std::uint64_t seed, long count,
                                     int workers = 1);

/// Noise stability of f_opt(x) = x/|x| by quadrature: the chi(3)-radial
/// reduction of E lambda_1^{|X|,|Y|} over the Ornstein-Uhlenbeck
/// representation Y = rho X + sqrt(1-rho^2) Z.
double fopt_stability(double rho);

/// Vector-valued function on the unit sphere (scalar checks embed in one
/// coordinate).
using SphereFunction = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

/// Per-degree squared projection norms |Proj_d F|^2, d = 0..D, with respect
/// to the normalized surface measure.  quad_degree must be at least 2D (the
/// default uses 2D + 8); smaller values are rejected.
std::vector<double> spherical_projection_norms(const SphereFunction& F, int D,
                                               int quad_degree = -1);

/// Spectral form |Proj_0 F|^2 + sum_d lambda_{d,3}^{r,s} |Proj_d F|^2.
double spherical_noise_stability(const SphereFunction& F, double rho, double r,
                                 double s, int D, int quad_degree = -1);

struct RadialMeanProfile {
  std::vector<double> shells;
  std::vector<Eigen::Vector3d> means;   // E f_r per shell
  Eigen::Vector3d gaussian_mean = Eigen::Vector3d::Zero();  // E_gamma f

  /// Linear interpolation, clamped to the boundary shells.
  Eigen::Vector3d at(double r) const;
  bool covers(double r) const;
};

enum class ProfileMethod {
  quadrature,  // spherical quadrature of the projected function (default)
  readout      // declared l = 0 coefficients; exact only when undistorted
};

RadialMeanProfile radial_mean_profile(const SphereValuedFunction& f,
                                      std::span<const double> shells,
                                      int sphere_quad_degree = 24,
                                      ProfileMethod method =
                                          ProfileMethod::quadrature);

struct BoundEstimate {
  StabilityEstimate estimate;
  long clamped = 0;  // samples whose radius fell outside the profile grid
};

/// Monte Carlo estimate of the quadratic upper bound
///   E[ lambda + <E f_R, E f_S> - |E f_R|^2 lambda ],
/// lambda = lambda_{1,3}^{R,S}, profile means linearly interpolated.
BoundEstimate quadratic_bound_rhs(const SphereValuedFunction& f, double rho,
                                  std::uint64_t seed, long count,
                                  const RadialMeanProfile* profile = nullptr,
                                  int workers = 1);

/// Monte Carlo estimate of the bilinear lower bound
///   E[ -lambda + <E f_R, E g_S> + (|E f_R|^2 + |E g_R|^2) lambda / 2 ].
BoundEstimate bilinear_bound_rhs(const SphereValuedFunction& f,
                                 const SphereValuedFunction& g, double rho,
                                 std::uint64_t seed, long count,
                                 const RadialMeanProfile* f_profile = nullptr,
                                 const RadialMeanProfile* g_profile = nullptr,
                                 int workers = 1);

}  // namespace nstab::stability
