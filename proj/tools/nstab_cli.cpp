// nstab command line: eigenvalue tables, inequality certificates, stability
// estimates, product-state Quantum MAX-CUT, and the perturbation search.
//
// Exit codes: 0 on success, k > 0 for k certificate failures, 64 for usage
// or config errors, 99 for evaluation errors.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "nstab/certify.hpp"
#include "nstab/measures.hpp"
#include "nstab/qmaxcut.hpp"
#include "nstab/specfun.hpp"
#include "nstab/spectrum.hpp"
#include "nstab/stability.hpp"

using json = nlohmann::json;

namespace {

constexpr int kExitEvaluationError = 99;
constexpr int kExitUsageError = 64;

int default_workers() {
  if (const char* env = std::getenv("NSTAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << content;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct EigenOptions {
  int d_max = 4;
  int n = 3;
  std::vector<double> rho{0.1};
  std::vector<double> r{1.0};
  std::vector<double> s{1.0};
  std::string out;
  std::string format = "csv";
};

int run_eigen(const EigenOptions& opt) {
  std::ostringstream body;
  json rows = json::array();
  if (opt.format == "csv")
    body << "d,n,rho,r,s,lambda_quadrature,lambda_closed_form_if_n3,abs_diff\n";
  for (double rho : opt.rho)
    for (double r : opt.r)
      for (double s : opt.s)
        for (int d = 0; d <= opt.d_max; ++d) {
          nstab::spectrum::EigenvalueQuery q{d, opt.n, rho, r, s};
          const double lam = nstab::spectrum::lambda_d_quadrature(q);
          std::optional<double> closed;
          if (opt.n == 3) {
            // Chained Bessel ratios I_{1/2+d}/I_{1/2}; d = 1 is the Langevin
            // function.
            const double a = rho * r * s / (1.0 - rho * rho);
            double prod = 1.0;
            for (int k = 0; k < d; ++k)
              prod *= nstab::specfun::bessel_ratio(0.5 + k, a);
            closed = prod;
          }
          if (opt.format == "csv") {
            body << d << ',' << opt.n << ',' << format_double(rho) << ','
                 << format_double(r) << ',' << format_double(s) << ','
                 << format_double(lam) << ',';
            if (closed)
              body << format_double(*closed) << ','
                   << format_double(std::fabs(lam - *closed));
            else
              body << ',';
            body << '\n';
          } else {
            json row{{"d", d},     {"n", opt.n}, {"rho", rho},
                     {"r", r},     {"s", s},     {"lambda_quadrature", lam}};
            if (closed) {
              row["lambda_closed_form"] = *closed;
              row["abs_diff"] = std::fabs(lam - *closed);
            }
            rows.push_back(row);
          }
        }
  if (opt.format == "csv")
    write_output(opt.out, body.str());
  else
    write_output(opt.out, json{{"rows", rows}}.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct CertifyOptions {
  nstab::certify::Constants constants;
  bool with_margins = false;
  double rho = 0.05;
  long count = 200000;
  std::uint64_t seed = 1;
  int workers = default_workers();
  int random_functions = 3;
  int grid_points = 0;
  std::string out;
};

int run_certify(const CertifyOptions& opt) {
  const std::vector<nstab::certify::CertificateReport> reports =
      nstab::certify::certify_all(opt.constants, opt.grid_points);
  int fails = 0;
  json report_json = json::array();
  for (const auto& rep : reports) {
    if (!rep.pass) ++fails;
    report_json.push_back(rep.to_json());
  }
  json out{{"reports", report_json},
           {"fails", fails},
           {"constants",
            {{"change_of_measure_coeff", opt.constants.change_of_measure_coeff},
             {"tail_coeff", opt.constants.tail_coeff},
             {"rho_threshold", opt.constants.rho_threshold}}}};

  if (opt.with_margins) {
    using nstab::stability::SphereValuedFunction;
    json margins = json::array();
    auto record = [&](const std::string& name,
                      const nstab::certify::StabilityMargin& m) {
      margins.push_back({{"function", name},
                         {"bilinear", m.bilinear},
                         {"stability", m.stability.value},
                         {"std_error", m.stability.std_error},
                         {"count", m.stability.count},
                         {"seed", m.stability.seed},
                         {"fopt_value", m.fopt_value},
                         {"profile_term", m.profile_term},
                         {"slack", m.slack},
                         {"slack_sigmas",
                          m.stability.std_error > 0
                              ? m.slack / m.stability.std_error
                              : 0.0}});
    };
    const SphereValuedFunction fopt = SphereValuedFunction::fopt();
    record("fopt", nstab::certify::stability_margin(
                       fopt, std::nullopt, opt.rho, opt.seed, opt.count,
                       opt.constants, opt.workers));
    const SphereValuedFunction neg = SphereValuedFunction::closed_form(
        "neg_fopt", [](const Eigen::Vector3d& x) {
          const double r = x.norm();
          return r > 0 ? Eigen::Vector3d(-x / r) : Eigen::Vector3d::UnitZ();
        });
    record("fopt,-fopt", nstab::certify::stability_margin(
                             fopt, neg, opt.rho, opt.seed + 1, opt.count,
                             opt.constants, opt.workers));
    const std::vector<double> shells = nstab::stability::default_shell_grid();
    for (int k = 0; k < opt.random_functions; ++k) {
      nstab::SeededStream stream(opt.seed, 0xf00d + k);
      const SphereValuedFunction f = nstab::stability::random_shell_harmonic(
          stream, shells, 2, /*mean_zero=*/true);
      record("random_" + std::to_string(k),
             nstab::certify::stability_margin(f, std::nullopt, opt.rho,
                                            opt.seed + 2 + k, opt.count,
                                            opt.constants, opt.workers));
    }
    out["margins"] = margins;
    out["margin_config"] = {{"rho", opt.rho},
                            {"count", opt.count},
                            {"seed", opt.seed}};
  }
  write_output(opt.out, out.dump(2) + "\n");
  return std::min(fails, 60);
}

// ---------------------------------------------------------------------------

struct StabilityOptions {
  std::string spec_path;
  std::string builtin;
  double rho = 0.05;
  long count = 1000000;
  std::uint64_t seed = 1;
  int workers = default_workers();
  bool margin = false;
  std::string dump_samples;
  long dump_count = 1000;
  std::string out;
};

int run_stability(const StabilityOptions& opt) {
  using nstab::stability::SphereValuedFunction;
  SphereValuedFunction f = SphereValuedFunction::fopt();
  std::string source;
  if (!opt.spec_path.empty()) {
    f = nstab::stability::load_function_spec(opt.spec_path);
    source = opt.spec_path;
  } else if (opt.builtin == "fopt" || opt.builtin.empty()) {
    source = "builtin:fopt";
  } else if (opt.builtin == "constant") {
    f = SphereValuedFunction::constant(Eigen::Vector3d::UnitZ());
    source = "builtin:constant";
  } else if (opt.builtin == "random") {
    nstab::SeededStream stream(opt.seed, 0xf00d);
    f = nstab::stability::random_shell_harmonic(
        stream, nstab::stability::default_shell_grid(), 2, /*mean_zero=*/true);
    source = "builtin:random";
  } else {
    throw CLI::ValidationError("--builtin must be fopt, constant or random");
  }

  const nstab::stability::StabilityEstimate mc =
      nstab::stability::noise_stability_mc(f, opt.rho, opt.seed, opt.count,
                                           opt.workers);
  json records = json::array();
  records.push_back({{"method", mc.method},
                     {"value", mc.value},
                     {"std_error", mc.std_error},
                     {"count", mc.count},
                     {"seed", mc.seed}});
  if (source == "builtin:fopt") {
    records.push_back({{"method", "quadrature"},
                       {"value", nstab::stability::fopt_stability(opt.rho)},
                       {"std_error", 0.0},
                       {"count", 0},
                       {"seed", opt.seed}});
  } else if (source == "builtin:constant") {
    records.push_back({{"method", "spectral"},
                       {"value", 1.0},
                       {"std_error", 0.0},
                       {"count", 0},
                       {"seed", opt.seed}});
  }
  json out{{"function", source}, {"rho", opt.rho}, {"estimates", records}};

  if (opt.margin) {
    const nstab::certify::StabilityMargin m = nstab::certify::stability_margin(
        f, std::nullopt, opt.rho, opt.seed + 17, opt.count, {}, opt.workers);
    out["margin"] = {{"stability", m.stability.value},
                     {"std_error", m.stability.std_error},
                     {"fopt_value", m.fopt_value},
                     {"profile_term", m.profile_term},
                     {"slack", m.slack}};
  }
  if (!opt.dump_samples.empty()) {
    std::ostringstream csv;
    csv << "x1,x2,x3,y1,y2,y3\n";
    nstab::SeededStream stream(opt.seed, 0);
    nstab::measures::GaussianPairLaw law{3, opt.rho};
    nstab::measures::sample_gaussian_pairs(
        law, stream, opt.dump_count,
        [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
          csv << format_double(x[0]) << ',' << format_double(x[1]) << ','
              << format_double(x[2]) << ',' << format_double(y[0]) << ','
              << format_double(y[1]) << ',' << format_double(y[2]) << '\n';
        });
    write_output(opt.dump_samples, csv.str());
    out["samples"] = {{"path", opt.dump_samples},
                      {"count", opt.dump_count},
                      {"seed", opt.seed}};
  }
  write_output(opt.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct QmaxcutOptions {
  std::string graph_path;
  int restarts = 20;
  int max_sweeps = 200;
  std::uint64_t seed = 1;
  int workers = default_workers();
  bool oracle = false;
  bool maxcut = false;
  std::string out;
};

int run_qmaxcut(const QmaxcutOptions& opt) {
  const nstab::qmaxcut::WeightedGraph graph =
      nstab::qmaxcut::WeightedGraph::load_edge_list(opt.graph_path);
  const nstab::qmaxcut::LocalSearchResult best =
      nstab::qmaxcut::local_search_multi(graph, opt.seed, opt.restarts,
                                         opt.max_sweeps, opt.workers);
  json assignment = json::array();
  for (const Eigen::Vector3d& a : best.assignment)
    assignment.push_back({a.x(), a.y(), a.z()});
  json out{{"n", graph.n},
           {"energy", best.energy},
           {"assignment", assignment},
           {"flagged_vertices", best.flagged},
           {"sweeps", best.sweeps},
           {"restarts", opt.restarts},
           {"seed", opt.seed}};
  if (opt.oracle) {
    if (graph.n > 12)
      throw std::runtime_error("oracle cross-check requires n <= 12");
    std::vector<nstab::qmaxcut::Spinor> spinors;
    for (const Eigen::Vector3d& a : best.assignment)
      spinors.push_back(nstab::qmaxcut::spinor_from_bloch(a));
    const double oracle_energy =
        nstab::qmaxcut::tensor_oracle_energy(graph, spinors);
    out["oracle_energy"] = oracle_energy;
    out["oracle_abs_diff"] = std::fabs(oracle_energy - best.energy);
  }
  if (opt.maxcut) {
    const nstab::qmaxcut::MaxCutResult cut =
        nstab::qmaxcut::brute_force_maxcut(graph);
    out["maxcut_energy"] = cut.energy;
    out["maxcut_spins"] = cut.spins;
  }
  write_output(opt.out, out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct SearchOptions {
  nstab::certify::SearchConfig config;
  std::string init = "fopt";
  std::string out;
};

int run_search(SearchOptions opt) {
  opt.config.init_fopt = opt.init == "fopt";
  if (opt.init != "fopt" && opt.init != "random")
    throw CLI::ValidationError("--init must be fopt or random");
  try {
    const nstab::certify::SearchRecord record =
        nstab::certify::perturbation_search(opt.config);
    json out = record.to_json();
    out["config"] = {{"rho", opt.config.rho},
                     {"degree", opt.config.degree},
                     {"shells", opt.config.shells},
                     {"iterations", opt.config.iterations},
                     {"batch", opt.config.batch},
                     {"eval_count", opt.config.eval_count},
                     {"seed", opt.config.seed},
                     {"init", opt.init}};
    write_output(opt.out, out.dump(2) + "\n");
    return 0;
  } catch (const nstab::certify::SearchDivergence& div) {
    const std::string dump_path =
        (opt.out.empty() || opt.out == "-" ? std::string("nstab_search")
                                           : opt.out) +
        ".divergence.txt";
    std::ofstream dump(dump_path);
    nstab::stability::write_function_spec(dump, div.spec);
    std::cerr << "search diverged; state dumped to " << dump_path << "\n";
    return kExitEvaluationError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise stability toolkit for sphere-valued functions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key-value config file");

  EigenOptions eig;
  CLI::App* eigen_cmd =
      app.add_subcommand("eigen", "Funk-Hecke eigenvalue tables");
  eigen_cmd->add_option("--d-max", eig.d_max, "maximum degree");
  eigen_cmd->add_option("--n", eig.n, "ambient dimension");
  eigen_cmd->add_option("--rho", eig.rho, "correlation values");
  eigen_cmd->add_option("--r", eig.r, "first radii");
  eigen_cmd->add_option("--s", eig.s, "second radii");
  eigen_cmd->add_option("--out", eig.out, "output path (default stdout)");
  eigen_cmd->add_option("--format", eig.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CertifyOptions cert;
  CLI::App* certify_cmd =
      app.add_subcommand("certify", "run the inequality certificates");
  certify_cmd->add_option("--com-coeff", cert.constants.change_of_measure_coeff,
                          "change-of-measure coefficient (test hook)");
  certify_cmd->add_option("--tail-coeff", cert.constants.tail_coeff,
                          "tail bound coefficient (test hook)");
  certify_cmd->add_option("--rho-threshold", cert.constants.rho_threshold,
                          "correlation threshold");
  certify_cmd->add_flag("--with-margins", cert.with_margins,
                        "also run the stability-margin batch");
  certify_cmd->add_option("--rho", cert.rho, "margin correlation");
  certify_cmd->add_option("--count", cert.count, "margin MC sample count");
  certify_cmd->add_option("--seed", cert.seed, "margin MC seed");
  certify_cmd->add_option("--random-functions", cert.random_functions,
                          "number of random test functions");
  certify_cmd->add_option("--grid", cert.grid_points,
                          "extended-sweep grid points (0 = defaults)");
  certify_cmd->add_option("--workers", cert.workers, "worker threads");
  certify_cmd->add_option("--out", cert.out, "output path (default stdout)");

  StabilityOptions stab;
  CLI::App* stability_cmd =
      app.add_subcommand("stability", "noise stability estimates");
  stability_cmd->add_option("--spec", stab.spec_path, "function spec file");
  stability_cmd->add_option("--builtin", stab.builtin,
                            "fopt, constant or random");
  stability_cmd->add_option("--rho", stab.rho, "correlation");
  stability_cmd->add_option("--count", stab.count, "MC sample count");
  stability_cmd->add_option("--seed", stab.seed, "MC seed");
  stability_cmd->add_option("--workers", stab.workers, "worker threads");
  stability_cmd->add_flag("--margin", stab.margin, "emit a margin record");
  stability_cmd->add_option("--dump-samples", stab.dump_samples,
                            "CSV dump of Gaussian pairs");
  stability_cmd->add_option("--dump-count", stab.dump_count,
                            "number of pairs to dump");
  stability_cmd->add_option("--out", stab.out, "output path (default stdout)");

  QmaxcutOptions qmc;
  CLI::App* qmaxcut_cmd =
      app.add_subcommand("qmaxcut", "product-state Quantum MAX-CUT");
  qmaxcut_cmd->add_option("--graph", qmc.graph_path, "edge list file")
      ->required();
  qmaxcut_cmd->add_option("--restarts", qmc.restarts, "local search restarts");
  qmaxcut_cmd->add_option("--max-sweeps", qmc.max_sweeps, "sweep cap");
  qmaxcut_cmd->add_option("--seed", qmc.seed, "restart seed");
  qmaxcut_cmd->add_option("--workers", qmc.workers, "worker threads");
  qmaxcut_cmd->add_flag("--oracle", qmc.oracle,
                        "cross-check with the 2^n tensor oracle (n <= 12)");
  qmaxcut_cmd->add_flag("--maxcut", qmc.maxcut,
                        "also brute-force the classical MAX-CUT (n <= 20)");
  qmaxcut_cmd->add_option("--out", qmc.out, "output path (default stdout)");

  SearchOptions srch;
  CLI::App* search_cmd =
      app.add_subcommand("search", "perturbation search around f_opt");
  search_cmd->add_option("--rho", srch.config.rho, "correlation (< 0.104)");
  search_cmd->add_option("--degree", srch.config.degree, "harmonic degree cap");
  search_cmd->add_option("--shells", srch.config.shells, "shell count");
  search_cmd->add_option("--iters", srch.config.iterations, "iterations");
  search_cmd->add_option("--batch", srch.config.batch, "ascent sample batch");
  search_cmd->add_option("--count", srch.config.eval_count,
                         "final evaluation sample count");
  search_cmd->add_option("--seed", srch.config.seed, "seed");
  search_cmd->add_option("--workers", srch.config.workers, "worker threads");
  search_cmd->add_option("--step", srch.config.step, "initial step size");
  search_cmd->add_option("--init", srch.init, "fopt or random");
  search_cmd->add_option("--out", srch.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsageError;
  }

  try {
    if (*eigen_cmd) return run_eigen(eig);
    if (*certify_cmd) return run_certify(cert);
    if (*stability_cmd) return run_stability(stab);
    if (*qmaxcut_cmd) return run_qmaxcut(qmc);
    if (*search_cmd) return run_search(srch);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitEvaluationError;
  }
  return kExitUsageError;
}
