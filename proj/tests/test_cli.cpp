#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "prsplit/cli.hpp"

using namespace prsplit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "prsplit_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

// header-name -> value map for a one-row-per-key lookup
std::map<std::string, std::string> csv_row(const std::string& content, std::size_t row) {
  std::stringstream ss(content);
  std::string line;
  REQUIRE(std::getline(ss, line));
  const auto headers = split_csv_line(line);
  for (std::size_t i = 0; i <= row; ++i) REQUIRE(std::getline(ss, line));
  const auto fields = split_csv_line(line);
  REQUIRE(fields.size() == headers.size());
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < headers.size(); ++i) out[headers[i]] = fields[i];
  return out;
}

ExperimentSpec basic_solve_spec(const fs::path& out) {
  ExperimentSpec spec;
  spec.command = Command::Solve;
  spec.n = 8;
  spec.trials = 2;
  spec.cfg.seed = 11;
  spec.cfg.max_iter = 200;
  spec.output_dir = out.string();
  return spec;
}

}  // namespace

TEST_CASE("format_double is round-trip exact") {
  RandomStream s(401, 0);
  for (int i = 0; i < 2000; ++i) {
    const double v = s.next_gaussian() * std::pow(10.0, -30.0 + 60.0 * s.next_uniform());
    const std::string text = format_double(v);
    double back = 0.0;
    std::sscanf(text.c_str(), "%lg", &back);
    CHECK(back == v);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("trace csv golden bytes") {
  IterateTrace trace;
  trace.has_truth = true;
  trace.records.push_back({0, 1.0, 0.5, 0.25, 0.125, 2.0, true});
  trace.records.push_back({1, 0.1, 0.0, 0.5, 0.0, 1.0, false});
  std::ostringstream os;
  write_trace_csv(os, trace);
  CHECK(os.str() ==
        "iter,objective,grad_norm,primal_gap,dual_norm,dist_to_truth,in_basin\n"
        "0,1,0.5,0.25,0.125,2,1\n"
        "1,0.10000000000000001,0,0.5,0,1,0\n");
}

TEST_CASE("certificates csv golden bytes") {
  CertificateReport rep;
  rep.name = "strong_convexity";
  rep.samples_or_grid = 1000;
  rep.worst_value = 0.5;
  rep.threshold = 1.0 / 3.0;
  rep.margin = 0.5 - 1.0 / 3.0;
  rep.pass = true;
  std::ostringstream os;
  write_certificates_csv(os, {rep});
  CHECK(os.str() ==
        "name,samples,worst_value,threshold,margin,pass\n"
        "strong_convexity,1000,0.5,0.33333333333333331,0.16666666666666669,1\n");
}

TEST_CASE("svg writer emits a self-contained plot") {
  IterateTrace trace;
  trace.has_truth = true;
  for (int k = 0; k <= 10; ++k)
    trace.records.push_back({k, std::pow(0.5, k), 0.0, 0.0, 0.0, std::pow(0.5, k), true});
  RateConstants rc;
  rc.contraction = 169.0 / 177.0;
  rc.sigma = 1.0 / 3.0;
  rc.l_block = 7.375;
  rc.norm_x = 1.0;
  std::ostringstream os;
  write_trace_svg(os, trace, rc);
  const std::string svg = os.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("theoretical rate") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("experiment spec validation") {
  ExperimentSpec spec = basic_solve_spec(fresh_dir("validate"));
  CHECK_NOTHROW(spec.validate());

  ExperimentSpec bad = spec;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = spec;
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = spec;
  bad.output_dir.clear();
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = spec;
  bad.solver = SolverKind::BcdExpected;
  bad.start_mode = StartMode::Spectral;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);

  // command defaults for m
  ExperimentSpec it = spec;
  it.command = Command::InitTest;
  it.n = 64;
  CHECK(it.effective_m() == 799);  // ceil(3 * 64 * ln 64)
  ExperimentSpec fin = spec;
  fin.solver = SolverKind::Admm;
  CHECK(fin.effective_m() == 80);
  CHECK(fin.effective_start_mode() == StartMode::Spectral);
  CHECK(spec.effective_start_mode() == StartMode::Basin);
}

TEST_CASE("empirical rate skips the rounding floor") {
  IterateTrace trace;
  trace.records.push_back({0, 1.0, 0, 0, 0, 0, true});
  trace.records.push_back({1, 0.25, 0, 0, 0, 0, true});
  trace.records.push_back({2, 0.125, 0, 0, 0, 0, true});
  trace.records.push_back({3, 1e-14, 0, 0, 0, 0, true});  // below floor
  trace.records.push_back({4, 9e-15, 0, 0, 0, 0, true});
  CHECK(empirical_rate(trace) == doctest::Approx(0.5));
}

TEST_CASE("solve command writes traces and a summary, deterministically") {
  const fs::path dir_a = fresh_dir("solve_a");
  const fs::path dir_b = fresh_dir("solve_b");
  ExperimentSpec spec = basic_solve_spec(dir_a);
  CHECK(run_command(spec) == 0);
  spec.output_dir = dir_b.string();
  CHECK(run_command(spec) == 0);

  for (const char* name : {"summary.csv", "trace_000.csv", "trace_001.csv"}) {
    CHECK(fs::exists(dir_a / name));
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  const std::string trace = slurp(dir_a / "trace_000.csv");
  CHECK(trace.rfind("iter,objective,grad_norm,primal_gap,dual_norm,dist_to_truth,in_basin\n", 0) ==
        0);

  const auto row = csv_row(slurp(dir_a / "summary.csv"), 0);
  CHECK(row.at("solver") == "bcd-expected");
  CHECK(row.at("status") == "converged");
  CHECK(row.at("basin_violations") == "0");
  CHECK(std::stod(row.at("final_dist")) <= 1e-8);
  CHECK(std::stod(row.at("empirical_rate")) <=
        std::stod(row.at("theoretical_contraction")) + 1e-9);
}

TEST_CASE("solve from the truth start finishes in zero iterations") {
  const fs::path dir = fresh_dir("solve_truth");
  ExperimentSpec spec = basic_solve_spec(dir);
  spec.trials = 1;
  spec.start_mode = StartMode::Truth;
  CHECK(run_command(spec) == 0);
  const auto row = csv_row(slurp(dir / "summary.csv"), 0);
  CHECK(row.at("iterations") == "0");
  CHECK(std::stod(row.at("final_dist")) <= 1e-14);
}

TEST_CASE("solve emits an svg when asked") {
  const fs::path dir = fresh_dir("solve_svg");
  ExperimentSpec spec = basic_solve_spec(dir);
  spec.trials = 1;
  spec.emit_plot = true;
  CHECK(run_command(spec) == 0);
  CHECK(fs::exists(dir / "trace_000.svg"));
  CHECK(slurp(dir / "trace_000.svg").find("</svg>") != std::string::npos);
}

TEST_CASE("finite solve produces a critical point summary") {
  const fs::path dir = fresh_dir("solve_admm");
  ExperimentSpec spec = basic_solve_spec(dir);
  spec.solver = SolverKind::Admm;
  spec.n = 8;
  spec.m = 80;
  spec.trials = 1;
  spec.cfg.max_iter = 2000;
  CHECK(run_command(spec) == 0);
  const auto row = csv_row(slurp(dir / "summary.csv"), 0);
  CHECK(row.at("status") == "converged");
  CHECK(std::stod(row.at("rel_error_z")) <= 1e-6);
  CHECK(std::stod(row.at("final_dual_norm")) <= 1e-6);
}

TEST_CASE("certify battery passes in the theorem regime") {
  const fs::path dir = fresh_dir("certify_ok");
  ExperimentSpec spec;
  spec.command = Command::Certify;
  spec.n = 6;
  spec.cfg.seed = 5;
  spec.cert_samples = 200;
  spec.output_dir = dir.string();
  CHECK(run_command(spec) == 0);

  const std::string csv = slurp(dir / "certificates.csv");
  CHECK(csv.rfind("name,samples,worst_value,threshold,margin,pass\n", 0) == 0);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  int rows = 0;
  while (std::getline(ss, line)) {
    CHECK(line.back() == '1');  // every certificate passes
    ++rows;
  }
  CHECK(rows == 6);  // strong convexity, lipschitz, descent, h_min, rc_max, crosscheck
}

TEST_CASE("certify reports and skips on a violated precondition") {
  const fs::path dir = fresh_dir("certify_bad");
  ExperimentSpec spec;
  spec.command = Command::Certify;
  spec.n = 6;
  spec.cfg.seed = 5;
  spec.cert_samples = 100;
  spec.cfg.rho_policy = RhoPolicy::absolute(0.5);  // below ||x||^2 and below 27/8
  spec.output_dir = dir.string();
  CHECK(run_command(spec) != 0);

  const std::string csv = slurp(dir / "certificates.csv");
  CHECK(csv.find("strong_convexity,0,nan") != std::string::npos);
  CHECK(csv.find("no_escape,") != std::string::npos);
}

TEST_CASE("init-test writes per-trial rows and summary fractions") {
  const fs::path dir = fresh_dir("init_test");
  ExperimentSpec spec;
  spec.command = Command::InitTest;
  spec.n = 8;
  spec.m = 4000;  // generous sampling so the squared variant succeeds
  spec.trials = 5;
  spec.cfg.seed = 3;
  spec.output_dir = dir.string();
  CHECK(run_command(spec) == 0);

  const std::string trials = slurp(dir / "init_trials.csv");
  CHECK(trials.rfind("trial,variant,rel_error,success\n", 0) == 0);
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 1 + 2 * 5);

  const auto squared = csv_row(slurp(dir / "init_summary.csv"), 0);
  CHECK(squared.at("variant") == "squared");
  CHECK(squared.at("m_rule") == "given");
  CHECK(std::stod(squared.at("success_fraction")) == doctest::Approx(1.0));
}

TEST_CASE("single-point sweep matches the solve summary") {
  const fs::path sdir = fresh_dir("sweep_single");
  const fs::path vdir = fresh_dir("sweep_solve");

  ExperimentSpec sweep;
  sweep.command = Command::Sweep;
  sweep.n = 8;
  sweep.trials = 1;
  sweep.cfg.seed = 9;
  sweep.sweep_rho_rel = {27.0 / 8.0};
  sweep.output_dir = sdir.string();
  CHECK(run_command(sweep) == 0);

  ExperimentSpec solve = basic_solve_spec(vdir);
  solve.trials = 1;
  solve.cfg.seed = 9;
  CHECK(run_command(solve) == 0);

  const auto srow = csv_row(slurp(sdir / "sweep.csv"), 0);
  const auto vrow = csv_row(slurp(vdir / "summary.csv"), 0);
  CHECK(srow.at("final_error") == vrow.at("rel_error_z"));
  CHECK(srow.at("iterations") == vrow.at("iterations"));
  CHECK(srow.at("empirical_rate") == vrow.at("empirical_rate"));
  CHECK(srow.at("basin_violations") == vrow.at("basin_violations"));
}

TEST_CASE("sweep covers the default rho grid") {
  const fs::path dir = fresh_dir("sweep_grid");
  ExperimentSpec spec;
  spec.command = Command::Sweep;
  spec.n = 6;
  spec.trials = 2;
  spec.cfg.seed = 13;
  spec.output_dir = dir.string();
  CHECK(run_command(spec) == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 2);  // 4 rho values x 2 trials
  // contraction formula is monotone in rho; spot-check the recorded columns
  CHECK(csv.find("3.375") != std::string::npos);
}

TEST_CASE("cli_main parses flags, config files, and the environment seed") {
  const fs::path dir_flag = fresh_dir("cli_flag");
  const auto run = [](std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("prsplit");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
  };

  CHECK(run({"solve", "--n", "8", "--trials", "1", "--seed", "21", "--out",
             dir_flag.string()}) == 0);
  CHECK(fs::exists(dir_flag / "summary.csv"));

  // environment seed default: same outputs as the explicit flag
  const fs::path dir_env = fresh_dir("cli_env");
  setenv("PRSPLIT_SEED", "21", 1);
  CHECK(run({"solve", "--n", "8", "--trials", "1", "--out", dir_env.string()}) == 0);
  unsetenv("PRSPLIT_SEED");
  CHECK(slurp(dir_env / "trace_000.csv") == slurp(dir_flag / "trace_000.csv"));

  // config file provides values, flags win over it
  const fs::path dir_cfg = fresh_dir("cli_cfg");
  const fs::path cfg_file = dir_cfg / "run.cfg";
  {
    std::ofstream os(cfg_file);
    os << "n=6\ntrials=3\nseed=21\nout=" << (dir_cfg / "out_from_file").string() << "\n";
  }
  const fs::path dir_cfg_out = dir_cfg / "out_override";
  CHECK(run({"solve", "--config", cfg_file.string(), "--n", "8", "--trials", "1", "--out",
             dir_cfg_out.string()}) == 0);
  CHECK(fs::exists(dir_cfg_out / "summary.csv"));
  CHECK_FALSE(fs::exists(dir_cfg / "out_from_file"));
  CHECK(slurp(dir_cfg_out / "trace_000.csv") == slurp(dir_flag / "trace_000.csv"));

  // bad flags and bad values exit nonzero
  CHECK(run({"solve", "--n", "8", "--out", dir_flag.string(), "--bogus"}) != 0);
  CHECK(run({"solve", "--n", "0", "--out", dir_flag.string()}) != 0);
  CHECK(run({"solve", "--n", "8", "--solver", "nope", "--out", dir_flag.string()}) != 0);
}
