#include "nstab/stability.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nstab/measures.hpp"
#include "nstab/quadrature.hpp"
#include "nstab/specfun.hpp"
#include "nstab/spectrum.hpp"
#include "nstab/sphharm.hpp"

namespace nstab::stability {

namespace {
constexpr long kChunkSize = 1 << 16;
constexpr double kUnitTol = 1e-9;
}  // namespace

double& ShellHarmonicSpec::coef(int shell, int coord, int lm) {
  return coefs[(static_cast<size_t>(shell) * 3 + coord) * lm_count() + lm];
}

double ShellHarmonicSpec::coef(int shell, int coord, int lm) const {
  return coefs[(static_cast<size_t>(shell) * 3 + coord) * lm_count() + lm];
}

void ShellHarmonicSpec::validate() const {
  if (degree < 0) throw std::domain_error("ShellHarmonicSpec: degree >= 0");
  if (shells.empty())
    throw std::domain_error("ShellHarmonicSpec: shell grid is empty");
  for (size_t i = 0; i < shells.size(); ++i) {
    if (!(shells[i] > 0.0))
      throw std::domain_error("ShellHarmonicSpec: shells must be positive");
    if (i > 0 && !(shells[i] > shells[i - 1]))
      throw std::domain_error("ShellHarmonicSpec: shells must increase");
  }
  if (coefs.size() != shells.size() * 3 * static_cast<size_t>(lm_count()))
    throw std::domain_error("ShellHarmonicSpec: coefficient table size");
}

struct SphereValuedFunction::Impl {
  std::string name;
  Evaluator raw;                             // closed-form path
  std::optional<ShellHarmonicSpec> spec;     // shell-harmonic path
  mutable std::atomic<long> flags{0};

  Eigen::Vector3d raw_value(const Eigen::Vector3d& x) const {
    if (!spec) return raw(x);
    const ShellHarmonicSpec& s = *spec;
    const double r = x.norm();
    Eigen::Vector3d u = r > 0.0 ? Eigen::Vector3d(x / r)
                                : Eigen::Vector3d::UnitZ();
    // Clamped linear interpolation weights on the shell grid.
    size_t hi = std::lower_bound(s.shells.begin(), s.shells.end(), r) -
                s.shells.begin();
    size_t lo;
    double w_hi;
    if (hi == 0) {
      lo = 0;
      w_hi = 1.0;
    } else if (hi == s.shells.size()) {
      lo = hi = s.shells.size() - 1;
      w_hi = 1.0;
    } else {
      lo = hi - 1;
      w_hi = (r - s.shells[lo]) / (s.shells[hi] - s.shells[lo]);
    }
    const int nlm = s.lm_count();
    thread_local std::vector<double> basis;
    basis.resize(nlm);
    sphharm::evaluate_basis(s.degree, u, basis);
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int coord = 0; coord < 3; ++coord) {
      double acc = 0.0;
      for (int lm = 0; lm < nlm; ++lm) {
        const double c = (1.0 - w_hi) * s.coef(static_cast<int>(lo), coord, lm) +
                         w_hi * s.coef(static_cast<int>(hi), coord, lm);
        acc += c * basis[lm];
      }
      out[coord] = acc;
    }
    return out;
  }

  Eigen::Vector3d projected(const Eigen::Vector3d& x) const {
    Eigen::Vector3d v = raw_value(x);
    if (!spec) return v;  // closed-form evaluators are unit by contract
    const double norm = v.norm();
    if (std::fabs(norm - 1.0) > 0.2)
      flags.fetch_add(1, std::memory_order_relaxed);
    if (norm == 0.0) return v;  // caught by the estimators' unit check
    return v / norm;
  }
};

SphereValuedFunction SphereValuedFunction::closed_form(std::string name,
                                                       Evaluator raw) {
  SphereValuedFunction f;
  f.impl_ = std::make_shared<Impl>();
  f.impl_->name = std::move(name);
  f.impl_->raw = std::move(raw);
  return f;
}

SphereValuedFunction SphereValuedFunction::fopt() {
  return closed_form("fopt", [](const Eigen::Vector3d& x) {
    const double r = x.norm();
    return r > 0.0 ? Eigen::Vector3d(x / r) : Eigen::Vector3d::UnitZ();
  });
}

SphereValuedFunction SphereValuedFunction::constant(
    const Eigen::Vector3d& direction) {
  const double norm = direction.norm();
  if (norm == 0.0)
    throw std::domain_error("constant function: zero direction");
  const Eigen::Vector3d e = direction / norm;
  return closed_form("constant", [e](const Eigen::Vector3d&) { return e; });
}

SphereValuedFunction SphereValuedFunction::shell_harmonic(
    ShellHarmonicSpec spec) {
  spec.validate();
  SphereValuedFunction f;
  f.impl_ = std::make_shared<Impl>();
  f.impl_->name = "shell_harmonic";
  f.impl_->spec = std::move(spec);
  return f;
}

Eigen::Vector3d SphereValuedFunction::operator()(
    const Eigen::Vector3d& x) const {
  return impl_->projected(x);
}

Eigen::Vector3d SphereValuedFunction::raw(const Eigen::Vector3d& x) const {
  return impl_->raw_value(x);
}

const std::string& SphereValuedFunction::name() const { return impl_->name; }

const ShellHarmonicSpec* SphereValuedFunction::spec() const {
  return impl_->spec ? &*impl_->spec : nullptr;
}

long SphereValuedFunction::projection_flags() const {
  return impl_->flags.load(std::memory_order_relaxed);
}

void SphereValuedFunction::reset_projection_flags() const {
  impl_->flags.store(0, std::memory_order_relaxed);
}

std::vector<double> default_shell_grid() {
  std::vector<double> shells(64);
  const double lo = 0.05, hi = 8.0;
  const double step = std::pow(hi / lo, 1.0 / 63.0);
  double r = lo;
  for (int i = 0; i < 64; ++i, r *= step) shells[i] = r;
  shells.back() = hi;
  return shells;
}

// ---------------------------------------------------------------------------
// Function spec text format

SphereValuedFunction parse_function_spec(std::istream& in) {
  std::string kind;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  ShellHarmonicSpec spec;
  std::vector<std::array<double, 5>> coef_lines;  // shell coord l m value
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("function spec line " + std::to_string(lineno) +
                             ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "kind") {
      if (!(ls >> kind)) fail("missing kind value");
    } else if (key == "direction") {
      if (!(ls >> direction.x() >> direction.y() >> direction.z()))
        fail("direction needs three components");
    } else if (key == "degree") {
      if (!(ls >> spec.degree)) fail("bad degree");
    } else if (key == "shells") {
      double r;
      while (ls >> r) spec.shells.push_back(r);
      if (spec.shells.empty()) fail("shells line has no radii");
    } else if (key == "shells_geometric") {
      int n;
      double lo, hi;
      if (!(ls >> n >> lo >> hi) || n < 1 || !(lo > 0) || !(hi > lo))
        fail("shells_geometric needs: count r_min r_max");
      spec.shells.resize(n);
      const double step = n > 1 ? std::pow(hi / lo, 1.0 / (n - 1)) : 1.0;
      double r = lo;
      for (int i = 0; i < n; ++i, r *= step) spec.shells[i] = r;
      spec.shells.back() = hi;
    } else if (key == "coef") {
      std::array<double, 5> c{};
      if (!(ls >> c[0] >> c[1] >> c[2] >> c[3] >> c[4]))
        fail("coef needs: shell coord l m value");
      coef_lines.push_back(c);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (kind == "fopt") return SphereValuedFunction::fopt();
  if (kind == "constant") return SphereValuedFunction::constant(direction);
  if (kind != "shell_harmonic")
    throw std::runtime_error("function spec: unknown or missing kind '" +
                             kind + "'");
  spec.coefs.assign(spec.shells.size() * 3 *
                        static_cast<size_t>(std::max(spec.lm_count(), 0)),
                    0.0);
  for (const auto& c : coef_lines) {
    const int shell = static_cast<int>(c[0]);
    const int coord = static_cast<int>(c[1]);
    const int l = static_cast<int>(c[2]);
    const int m = static_cast<int>(c[3]);
    if (shell < 0 || shell >= static_cast<int>(spec.shells.size()))
      throw std::runtime_error("function spec: coef shell out of range");
    if (coord < 0 || coord > 2)
      throw std::runtime_error("function spec: coef coord out of range");
    if (l < 0 || l > spec.degree || m < -l || m > l)
      throw std::runtime_error("function spec: coef (l, m) out of range");
    spec.coef(shell, coord, sphharm::index(l, m)) = c[4];
  }
  try {
    return SphereValuedFunction::shell_harmonic(std::move(spec));
  } catch (const std::domain_error& e) {
    throw std::runtime_error(std::string("function spec: ") + e.what());
  }
}

SphereValuedFunction load_function_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open function spec: " + path);
  return parse_function_spec(in);
}

void write_function_spec(std::ostream& out, const ShellHarmonicSpec& spec) {
  out << "kind shell_harmonic\n";
  out << "degree " << spec.degree << "\n";
  out << "shells";
  out.precision(17);
  for (double r : spec.shells) out << ' ' << r;
  out << "\n";
  for (size_t shell = 0; shell < spec.shells.size(); ++shell)
    for (int coord = 0; coord < 3; ++coord)
      for (int lm = 0; lm < spec.lm_count(); ++lm) {
        const double v = spec.coef(static_cast<int>(shell), coord, lm);
        if (v == 0.0) continue;
        const int l = static_cast<int>(std::sqrt(static_cast<double>(lm)));
        const int m = lm - l * (l + 1);
        out << "coef " << shell << ' ' << coord << ' ' << l << ' ' << m << ' '
            << v << "\n";
      }
}

SphereValuedFunction random_shell_harmonic(SeededStream& stream,
                                           std::span<const double> shells,
                                           int degree, bool mean_zero) {
  ShellHarmonicSpec spec;
  spec.degree = degree;
  spec.shells.assign(shells.begin(), shells.end());
  spec.coefs.assign(spec.shells.size() * 3 * spec.lm_count(), 0.0);

  // Radial unit direction, sign-balanced at the chi(3) median (~1.5382) so
  // the Gaussian mean cancels between the inner and outer shells.
  const double chi3_median = 1.5381722783538699;
  Eigen::Vector3d v = measures::sample_uniform_sphere(stream);
  const double radial_weight = mean_zero ? 0.6 : stream.next_uniform();

  // Angular coefficients: odd degrees only under mean_zero (odd harmonics
  // are antipodally odd, so shell means vanish identically).
  const int nshells = static_cast<int>(spec.shells.size());
  std::vector<double> angular(3 * static_cast<size_t>(spec.lm_count()), 0.0);
  double total = 0.0;
  for (int l = 1; l <= degree; ++l) {
    if (mean_zero && l % 2 == 0) continue;
    const double scale = 1.0 / (1.0 + l);
    for (int m = -l; m <= l; ++m)
      for (int coord = 0; coord < 3; ++coord) {
        const double c = scale * stream.next_normal();
        angular[coord * spec.lm_count() + sphharm::index(l, m)] = c;
        total += c * c;
      }
  }
  // Normalize so the mean square norm of the expansion is ~1 (the angular
  // basis is orthonormal, so E|F_ang|^2 = sum of squares).
  const double ang_norm = std::sqrt(std::max(total, 1e-12));
  const double ang_scale = std::sqrt(1.0 - radial_weight * radial_weight);
  for (double& c : angular) c *= ang_scale / ang_norm;

  for (int shell = 0; shell < nshells; ++shell) {
    const double sign = spec.shells[shell] < chi3_median ? 1.0 : -1.0;
    for (int coord = 0; coord < 3; ++coord) {
      spec.coef(shell, coord, 0) = radial_weight * sign * v[coord];
      for (int lm = 1; lm < spec.lm_count(); ++lm)
        spec.coef(shell, coord, lm) = angular[coord * spec.lm_count() + lm];
    }
  }
  return SphereValuedFunction::shell_harmonic(std::move(spec));
}

// ---------------------------------------------------------------------------
// Monte Carlo machinery

namespace {

struct ChunkStats {
  double sum = 0.0;
  double sumsq = 0.0;
  long n = 0;
  long clamped = 0;

  void add(double q) {
    sum += q;
    sumsq += q * q;
    ++n;
  }
};

// Runs per-chunk work with chunk-indexed streams; the reduction is done in
// chunk order, so results do not depend on the worker count.
template <typename PerChunk>
ChunkStats run_chunked(std::uint64_t seed, long count, int workers,
                       const PerChunk& per_chunk) {
  const long nchunks = (count + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkStats> stats(nchunks);
  auto run_range = [&](long first, long stride) {
    for (long c = first; c < nchunks; c += stride) {
      const long n =
          std::min<long>(kChunkSize, count - c * kChunkSize);
      SeededStream stream(seed, static_cast<std::uint64_t>(c));
      per_chunk(stream, n, stats[c]);
    }
  };
  if (workers <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        try {
          run_range(w, workers);
        } catch (...) {
          std::scoped_lock lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  ChunkStats total;
  for (const ChunkStats& s : stats) {
    total.sum += s.sum;
    total.sumsq += s.sumsq;
    total.n += s.n;
    total.clamped += s.clamped;
  }
  return total;
}

StabilityEstimate to_estimate(const ChunkStats& s, std::uint64_t seed,
                              const std::string& method) {
  StabilityEstimate est;
  est.count = s.n;
  est.seed = seed;
  est.method = method;
  est.value = s.sum / s.n;
  const double var =
      s.n > 1 ? std::max(0.0, (s.sumsq - s.n * est.value * est.value) /
                                  (s.n - 1.0))
              : 0.0;
  est.std_error = std::sqrt(var / s.n);
  return est;
}

void check_unit(const Eigen::Vector3d& value, const Eigen::Vector3d& x,
                const std::string& name) {
  if (std::fabs(value.norm() - 1.0) > kUnitTol) {
    std::ostringstream msg;
    msg << "noise_stability_mc: non-unit output of '" << name << "' at x=("
        << x.transpose() << "): |f| = " << value.norm();
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

StabilityEstimate noise_stability_mc(const SphereValuedFunction& f,
                                     const SphereValuedFunction& g, double rho,
                                     std::uint64_t seed, long count,
                                     int workers) {
  if (!(rho > -1.0 && rho < 1.0))
    throw std::domain_error("noise_stability_mc: rho must lie in (-1, 1)");
  if (count < 1) throw std::domain_error("noise_stability_mc: count >= 1");
  ChunkStats total = run_chunked(
      seed, count, workers,
      [&](SeededStream& stream, long n, ChunkStats& out) {
        for (long i = 0; i < n; ++i) {
          auto [x, y] = measures::sample_gaussian_pair3(rho, stream);
          const Eigen::Vector3d fx = f(x);
          const Eigen::Vector3d gy = g(y);
          check_unit(fx, x, f.name());
          check_unit(gy, y, g.name());
          out.add(fx.dot(gy));
        }
      });
  return to_estimate(total, seed, "mc");
}

StabilityEstimate noise_stability_mc(const SphereValuedFunction& f, double rho,
                                     std::uint64_t seed, long count,
                                     int workers) {
  return noise_stability_mc(f, f, rho, seed, count, workers);
}

double fopt_stability(double rho) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::domain_error("fopt_stability: rho must lie in [0, 1)");
  if (rho == 0.0) return 0.0;
  // E lambda_{1,3}^{|Y|,|X|}: radial coordinates R = |X|, z = |Z|, and the
  // cosine between X and Z under Y = rho X + sqrt(1-rho^2) Z.
  static const QuadratureRule r_rule = gauss_legendre(96, 0.0, 12.0);
  static const QuadratureRule u_rule = gauss_legendre(48);
  const double omr2 = 1.0 - rho * rho;
  const double chi3 = std::sqrt(2.0 / M_PI);
  double outer = 0.0;
  for (size_t i = 0; i < r_rule.nodes.size(); ++i) {
    const double R = r_rule.nodes[i];
    const double wR = r_rule.weights[i] * chi3 * R * R * std::exp(-0.5 * R * R);
    double inner = 0.0;
    for (size_t j = 0; j < r_rule.nodes.size(); ++j) {
      const double z = r_rule.nodes[j];
      const double wz =
          r_rule.weights[j] * chi3 * z * z * std::exp(-0.5 * z * z);
      double usum = 0.0;
      for (size_t k = 0; k < u_rule.nodes.size(); ++k) {
        const double u = u_rule.nodes[k];
        const double s2 = rho * rho * R * R + omr2 * z * z +
                          2.0 * rho * std::sqrt(omr2) * R * z * u;
        const double s = std::sqrt(std::max(0.0, s2));
        usum += 0.5 * u_rule.weights[k] *
                specfun::langevin(rho * R * s / omr2);
      }
      inner += wz * usum;
    }
    outer += wR * inner;
  }
  return outer;
}

std::vector<double> spherical_projection_norms(const SphereFunction& F, int D,
                                               int quad_degree) {
  if (D < 0) throw std::domain_error("spherical_projection_norms: D >= 0");
  if (quad_degree < 0) quad_degree = 2 * D + 8;
  if (quad_degree < 2 * D)
    throw std::domain_error(
        "spherical_projection_norms: quadrature degree below 2D");
  const sphharm::SphereQuadrature quad =
      sphharm::SphereQuadrature::for_degree(quad_degree);
  const int nlm = sphharm::basis_size(D);
  std::vector<double> basis(nlm);
  std::vector<double> coef(3 * static_cast<size_t>(nlm), 0.0);
  for (size_t q = 0; q < quad.points.size(); ++q) {
    const Eigen::Vector3d& u = quad.points[q];
    sphharm::evaluate_basis(D, u, basis);
    const Eigen::Vector3d Fu = F(u);
    for (int coord = 0; coord < 3; ++coord)
      for (int lm = 0; lm < nlm; ++lm)
        coef[coord * nlm + lm] += quad.weights[q] * Fu[coord] * basis[lm];
  }
  std::vector<double> norms(D + 1, 0.0);
  for (int l = 0; l <= D; ++l)
    for (int m = -l; m <= l; ++m)
      for (int coord = 0; coord < 3; ++coord) {
        const double c = coef[coord * nlm + sphharm::index(l, m)];
        norms[l] += c * c;
      }
  return norms;
}

double spherical_noise_stability(const SphereFunction& F, double rho, double r,
                                 double s, int D, int quad_degree) {
  const std::vector<double> norms =
      spherical_projection_norms(F, D, quad_degree);
  double total = norms[0];
  for (int d = 1; d <= D; ++d) {
    spectrum::EigenvalueQuery q{d, 3, rho, r, s};
    total += spectrum::lambda_d_quadrature(q) * norms[d];
  }
  return total;
}

Eigen::Vector3d RadialMeanProfile::at(double r) const {
  const size_t hi =
      std::lower_bound(shells.begin(), shells.end(), r) - shells.begin();
  if (hi == 0) return means.front();
  if (hi == shells.size()) return means.back();
  const double w = (r - shells[hi - 1]) / (shells[hi] - shells[hi - 1]);
  return (1.0 - w) * means[hi - 1] + w * means[hi];
}

bool RadialMeanProfile::covers(double r) const {
  return r >= shells.front() && r <= shells.back();
}

RadialMeanProfile radial_mean_profile(const SphereValuedFunction& f,
                                      std::span<const double> shells,
                                      int sphere_quad_degree,
                                      ProfileMethod method) {
  if (shells.empty())
    throw std::domain_error("radial_mean_profile: empty shell grid");
  RadialMeanProfile profile;
  profile.shells.assign(shells.begin(), shells.end());
  profile.means.resize(shells.size());
  if (method == ProfileMethod::readout) {
    // Y_00 = 1, so the spherical mean of the raw expansion is its l = 0
    // part; quadrature at degree 2D+2 reads it out exactly.  Projection
    // distortion is not accounted for on this path.
    const ShellHarmonicSpec* spec = f.spec();
    if (!spec)
      throw std::domain_error(
          "radial_mean_profile: readout needs a shell-harmonic function");
    const sphharm::SphereQuadrature quad =
        sphharm::SphereQuadrature::for_degree(2 * spec->degree + 2);
    for (size_t i = 0; i < shells.size(); ++i) {
      Eigen::Vector3d m = Eigen::Vector3d::Zero();
      for (size_t q = 0; q < quad.points.size(); ++q)
        m += quad.weights[q] * f.raw(shells[i] * quad.points[q]);
      profile.means[i] = m;
    }
  } else {
    const sphharm::SphereQuadrature quad =
        sphharm::SphereQuadrature::for_degree(sphere_quad_degree);
    for (size_t i = 0; i < shells.size(); ++i) {
      Eigen::Vector3d m = Eigen::Vector3d::Zero();
      for (size_t q = 0; q < quad.points.size(); ++q)
        m += quad.weights[q] * f(shells[i] * quad.points[q]);
      profile.means[i] = m;
    }
  }
  // Gaussian aggregate over the interpolated (clamped) profile.
  const double upper = std::max(12.0, profile.shells.back());
  for (int coord = 0; coord < 3; ++coord) {
    profile.gaussian_mean[coord] = integrate_or_throw(
        [&](double r) {
          return std::sqrt(2.0 / M_PI) * r * r * std::exp(-0.5 * r * r) *
                 profile.at(r)[coord];
        },
        0.0, upper, 1e-10, 1e-8, 8000);
  }
  return profile;
}

namespace {

BoundEstimate bound_mc(double rho, std::uint64_t seed, long count, int workers,
                       const std::function<double(double, double, double)>&
                           term,  // (R, S, lambda)
                       const RadialMeanProfile& cover_check) {
  const double omr2 = 1.0 - rho * rho;
  ChunkStats total = run_chunked(
      seed, count, workers,
      [&](SeededStream& stream, long n, ChunkStats& out) {
        for (long i = 0; i < n; ++i) {
          auto [x, y] = measures::sample_gaussian_pair3(rho, stream);
          const double R = x.norm();
          const double S = y.norm();
          if (!cover_check.covers(R) || !cover_check.covers(S)) ++out.clamped;
          const double lambda = specfun::langevin(rho * R * S / omr2);
          out.add(term(R, S, lambda));
        }
      });
  BoundEstimate be;
  be.estimate = to_estimate(total, seed, "mc");
  be.clamped = total.clamped;
  return be;
}

}  // namespace

BoundEstimate quadratic_bound_rhs(const SphereValuedFunction& f, double rho,
                                  std::uint64_t seed, long count,
                                  const RadialMeanProfile* profile,
                                  int workers) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::domain_error("quadratic_bound_rhs: rho must lie in (0, 1)");
  RadialMeanProfile local;
  if (!profile) {
    local = radial_mean_profile(f, default_shell_grid());
    profile = &local;
  }
  return bound_mc(
      rho, seed, count, workers,
      [&](double R, double S, double lambda) {
        const Eigen::Vector3d mR = profile->at(R);
        const Eigen::Vector3d mS = profile->at(S);
        return lambda + mR.dot(mS) - mR.squaredNorm() * lambda;
      },
      *profile);
}

BoundEstimate bilinear_bound_rhs(const SphereValuedFunction& f,
                                 const SphereValuedFunction& g, double rho,
                                 std::uint64_t seed, long count,
                                 const RadialMeanProfile* f_profile,
                                 const RadialMeanProfile* g_profile,
                                 int workers) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::domain_error("bilinear_bound_rhs: rho must lie in (0, 1)");
  RadialMeanProfile f_local, g_local;
  if (!f_profile) {
    f_local = radial_mean_profile(f, default_shell_grid());
    f_profile = &f_local;
  }
  if (!g_profile) {
    g_local = radial_mean_profile(g, default_shell_grid());
    g_profile = &g_local;
  }
  return bound_mc(
      rho, seed, count, workers,
      [&](double R, double S, double lambda) {
        const Eigen::Vector3d mfR = f_profile->at(R);
        const Eigen::Vector3d mgS = g_profile->at(S);
        const Eigen::Vector3d mgR = g_profile->at(R);
        return -lambda + mfR.dot(mgS) +
               0.5 * (mfR.squaredNorm() + mgR.squaredNorm()) * lambda;
      },
      *f_profile);
}

}  // namespace nstab::stability
