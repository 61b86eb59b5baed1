#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

using json = nlohmann::json;

namespace {

int run_cli(const std::string& args, const std::string& stdout_path = "") {
  std::string cmd = std::string(NSTAB_CLI_PATH) + " " + args;
  if (!stdout_path.empty()) cmd += " > " + stdout_path;
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("eigen: CSV table with closed-form cross-checks") {
  const int code =
      run_cli("eigen --d-max 2 --rho 0 0.3 --r 1.5 --s 2 --out cli_eigen.csv");
  CHECK(code == 0);
  std::ifstream in("cli_eigen.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "d,n,rho,r,s,lambda_quadrature,lambda_closed_form_if_n3,abs_diff");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int d, n;
    double rho, r, s, lam, closed, diff;
    REQUIRE((ls >> d >> n >> rho >> r >> s >> lam >> closed >> diff));
    if (d == 0) CHECK(lam == 1.0);
    if (rho == 0.0 && d >= 1) CHECK(lam == 0.0);
    CHECK(diff <= 1e-8);
  }
  CHECK(rows == 6);  // 2 rho values x 3 degrees
}

TEST_CASE("certify: default run passes, corrupted constant fails") {
  CHECK(run_cli("certify --out cli_cert.json") == 0);
  const json report = json::parse(slurp("cli_cert.json"));
  CHECK(report["fails"] == 0);
  CHECK(report["reports"].size() == 4);
  for (const auto& rep : report["reports"]) CHECK(rep["verdict"] == "PASS");

  // 9.4 -> 0.94 must fail with a located argmin.
  const int code = run_cli("certify --com-coeff 0.94 --out cli_cert_bad.json");
  CHECK(code > 0);
  const json bad = json::parse(slurp("cli_cert_bad.json"));
  CHECK(bad["fails"].get<int>() == code);
  bool found_fail = false;
  for (const auto& rep : bad["reports"]) {
    if (rep["verdict"] == "FAIL") {
      found_fail = true;
      CHECK(rep["grid"][0]["argmin"][0].get<double>() > 0.0);
    }
  }
  CHECK(found_fail);
}

TEST_CASE("stability: builtin specs and byte-identical reruns") {
  const std::string args =
      "stability --builtin random --rho 0.05 --count 50000 --seed 42 "
      "--dump-samples cli_dump.csv --dump-count 100 --out cli_stab1.json";
  CHECK(run_cli(args) == 0);
  const std::string first = slurp("cli_stab1.json");
  const std::string dump_first = slurp("cli_dump.csv");
  CHECK(run_cli("stability --builtin random --rho 0.05 --count 50000 "
                "--seed 42 --dump-samples cli_dump.csv --dump-count 100 "
                "--out cli_stab2.json") == 0);
  CHECK(slurp("cli_stab2.json") == first);
  CHECK(slurp("cli_dump.csv") == dump_first);

  const json rec = json::parse(first);
  CHECK(rec["estimates"][0]["seed"] == 42);
  CHECK(rec["estimates"][0]["count"] == 50000);

  // constant builtin reports exactly 1
  CHECK(run_cli("stability --builtin constant --rho 0.3 --count 1000 "
                "--out cli_stab_c.json") == 0);
  const json crec = json::parse(slurp("cli_stab_c.json"));
  CHECK(crec["estimates"][0]["value"] == 1.0);
}

TEST_CASE("stability: function spec file and parse diagnostics") {
  std::ostringstream fn;
  fn << "kind shell_harmonic\ndegree 1\nshells_geometric 8 0.05 8\n";
  for (int shell = 0; shell < 8; ++shell) {
    fn << "coef " << shell << " 2 1 0 0.7\n";
    fn << "coef " << shell << " 0 1 1 0.3\n";
  }
  write_file("cli_fn.txt", fn.str());
  CHECK(run_cli("stability --spec cli_fn.txt --rho 0.05 --count 20000 "
                "--out cli_stab_f.json") == 0);
  write_file("cli_fn_bad.txt", "kind shell_harmonic\ndegree 1\nshells 2 1\n");
  CHECK(run_cli("stability --spec cli_fn_bad.txt --count 10") == 99);
}

TEST_CASE("qmaxcut: oracle match, flagged vertices, maxcut embedding") {
  write_file("cli_graph.txt", "n 4\n0 1 1.0\n1 2 1.0\n0 2 1.0\n");
  CHECK(run_cli("qmaxcut --graph cli_graph.txt --restarts 8 --oracle "
                "--maxcut --out cli_qmc.json") == 0);
  const json rec = json::parse(slurp("cli_qmc.json"));
  CHECK(rec["energy"].get<double>() == doctest::Approx(9.0).epsilon(1e-8));
  CHECK(rec["oracle_abs_diff"].get<double>() <= 1e-10);
  CHECK(rec["flagged_vertices"].size() == 1);
  CHECK(rec["flagged_vertices"][0] == 3);
  // triangle MAX-CUT: best cut weight 2, energy convention 4 * 2 = 8
  CHECK(rec["maxcut_energy"].get<double>() == doctest::Approx(8.0));
  CHECK(run_cli("qmaxcut --graph cli_missing.txt") == 99);
}

TEST_CASE("search: trace output and reproducibility") {
  const std::string args =
      "search --rho 0.05 --iters 4 --batch 10000 --count 50000 --seed 9 "
      "--out cli_search1.json";
  CHECK(run_cli(args) == 0);
  CHECK(run_cli("search --rho 0.05 --iters 4 --batch 10000 --count 50000 "
                "--seed 9 --out cli_search2.json") == 0);
  CHECK(slurp("cli_search1.json") == slurp("cli_search2.json"));
  const json rec = json::parse(slurp("cli_search1.json"));
  CHECK(rec["trace"].is_array());
  CHECK(rec["final"]["seed"].is_number());
  CHECK(run_cli("search --rho 0.2 --iters 1") == 99);  // out of proven range
}

TEST_CASE("config files feed the subcommands") {
  write_file("cli_cfg.ini",
             "[stability]\nbuiltin=constant\nrho=0.25\ncount=500\n");
  CHECK(run_cli("--config cli_cfg.ini stability --out cli_cfg_out.json") == 0);
  const json rec = json::parse(slurp("cli_cfg_out.json"));
  CHECK(rec["rho"].get<double>() == doctest::Approx(0.25));
  CHECK(rec["estimates"][0]["count"] == 500);
}

TEST_CASE("usage errors exit with the reserved code") {
  CHECK(run_cli("unknown-subcommand") == 64);
  CHECK(run_cli("eigen --format yaml") == 64);
}

TEST_CASE("worker-count environment default leaves outputs unchanged") {
  CHECK(run_cli("stability --builtin fopt --count 100000 --seed 31 "
                "--workers 1 --out cli_env_a.json") == 0);
  const int status = std::system(
      ("NSTAB_WORKERS=3 " + std::string(NSTAB_CLI_PATH) +
       " stability --builtin fopt --count 100000 --seed 31 "
       "--out cli_env_b.json > /dev/null 2>&1")
          .c_str());
  REQUIRE(status != -1);
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(slurp("cli_env_a.json") == slurp("cli_env_b.json"));
}
