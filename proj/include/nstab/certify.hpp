#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nstab/stability.hpp"

namespace nstab::certify {

/// Certified constants.  The overrides exist so the harness can prove the
/// certifiers actually fail on corrupted values.
struct Constants {
  double change_of_measure_coeff = 9.4;
  double tail_coeff = 0.98;
  double rho_threshold = 0.104;
};

struct GridCheck {
  std::string label;          // "reference" or "extended"
  long points = 0;
  double min_margin = 0.0;
  std::array<double, 2> argmin{0.0, 0.0};  // grid coordinates of the minimum
  std::uint64_t grid_hash = 0;
};

struct CertificateReport {
  std::string id;
  std::vector<GridCheck> grids;
  double tolerance = 0.0;
  bool pass = false;
  std::string notes;

  double min_margin() const;
  nlohmann::json to_json() const;
};

/// r^2 / phi(rho, r) <= 3 r / rho + r^2 on an r grid.
CertificateReport certify_rsq_phi(double rho, std::span<const double> r_grid,
                                  Constants c = {});
/// Default grids: rho = 0.1 with r = linspace(0.1, 20, 1000) ("reference") plus
/// a sweep over rho in {0.01, ..., 0.11} with r in [0.01, 100] ("extended",
/// grid_points r values per rho).
CertificateReport certify_rsq_phi_default(Constants c = {},
                                          int grid_points = 2000);

/// sqrt(2/pi) e^{9(1-rho^2)/(8 s^2 rho^2)} tail(3 sqrt(1-rho^2)/(2 rho s))
///   >= 0.98 phi(rho, s) on an (rho, s) grid, evaluated in the log domain.
CertificateReport certify_tail_phi(std::span<const double> rho_grid,
                                   std::span<const double> s_grid,
                                   Constants c = {});
/// Default grids: rho = 0.03 with the positive points of
/// linspace(0, 1000, 1000) ("reference") plus rho in {0.01, ..., 0.19}
/// ("extended", grid_points s values per rho).
CertificateReport certify_tail_phi_default(Constants c = {},
                                           int grid_points = 1500);

/// change_of_measure_constant(rho) <= 9.4 rho; also reports the ratio sup.
CertificateReport certify_change_of_measure(std::span<const double> rho_grid,
                                            Constants c = {});
CertificateReport certify_change_of_measure_default(Constants c = {});

/// 9.4 rho - 0.98 < 0 up to rho = 0.104, with the crossover 0.98/9.4.
CertificateReport certify_threshold(Constants c = {});

/// All four analytic certifiers on their default grids; grid_points sets the
/// extended-sweep density (0 keeps the defaults).
std::vector<CertificateReport> certify_all(Constants c = {},
                                           int grid_points = 0);

struct StabilityMargin {
  stability::StabilityEstimate stability;  // MC estimate of the left side
  double fopt_value = 0.0;                 // quadrature E lambda
  double profile_term = 0.0;               // margin integral with its constant
  double slack = 0.0;                      // >= 0 (within MC error) when the
                                           // inequality holds
  bool bilinear = false;
  long clamped = 0;
};

/// Quadratic check: slack = (9.4 rho - .98) I_phi - (MC - fopt) for the
/// stable inequality; bilinear check (g given): slack = MC + fopt - (.98 -
/// 9.4 rho) I_phi.  The bilinear path requires E_gamma f = E_gamma g within
/// tolerance.
StabilityMargin stability_margin(const stability::SphereValuedFunction& f,
                             const std::optional<stability::SphereValuedFunction>& g,
                             double rho, std::uint64_t seed, long count,
                             Constants c = {}, int workers = 1,
                             double mean_match_tol = 0.05);

struct EqualityCase {
  bool is_optimal = false;
  bool degenerate = false;       // cross-moment rank < 3, no M returned
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  double residual = 0.0;         // E_gamma |f(x) - M x/|x||^2
};

/// Orthogonal-Procrustes fit of f against x -> Mx/|x| on the cross-moment
/// E_gamma[f(x) (x/|x|)^T]; optimal iff the residual is <= 1e-3.
EqualityCase equality_case_detect(const stability::SphereValuedFunction& f);

struct SearchIteration {
  int iter = 0;
  double objective = 0.0;
  double step = 0.0;
  long projection_corrections = 0;
  double mean_norm = 0.0;
};

struct SearchRecord {
  std::vector<SearchIteration> trace;
  double best_objective = 0.0;           // in-sample, on the search batch
  stability::StabilityEstimate final_estimate;  // fresh-stream estimate
  double fopt_value = 0.0;
  double gap = 0.0;                      // final_estimate.value - fopt_value
  stability::ShellHarmonicSpec best_spec;
  nlohmann::json to_json() const;
};

struct SearchConfig {
  double rho = 0.05;
  int degree = 2;
  int shells = 16;
  int iterations = 40;
  long batch = 100000;       // fixed sample batch for the ascent
  long eval_count = 1000000; // fresh-stream final evaluation
  double step = 0.05;
  std::uint64_t seed = 1;
  bool init_fopt = true;     // otherwise random initialization
  int workers = 1;
};

/// Thrown when the pre-projection expansion norm blows up; carries the
/// offending coefficient state so callers can dump it.
struct SearchDivergence : std::runtime_error {
  SearchDivergence(const std::string& msg, stability::ShellHarmonicSpec s)
      : std::runtime_error(msg), spec(std::move(s)) {}
  stability::ShellHarmonicSpec spec;
};

/// Projected gradient ascent over shell-harmonic coefficients, maximizing
/// the estimated noise stability subject to sphere-valuedness (radial
/// projection) and E_gamma f = 0 (mean subtraction per step).
SearchRecord perturbation_search(const SearchConfig& config);

}  // namespace nstab::certify
