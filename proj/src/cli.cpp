#include "prsplit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace prsplit {

namespace {

// Substream reserved for drawing the hidden signal; trials use 0, 1, ...
constexpr std::uint64_t kTruthSubstream = 1ULL << 63;

const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::BcdExpected: return "bcd-expected";
    case SolverKind::BcdFinite: return "bcd-finite";
    case SolverKind::Admm: return "admm";
  }
  return "?";
}

const char* status_name(SolveStatus s) {
  return s == SolveStatus::Converged ? "converged" : "max-iter";
}

}  // namespace

void ExperimentSpec::validate() const {
  if (n < 1) throw InvalidConfig("n must be >= 1");
  if (trials < 1) throw InvalidConfig("trials must be >= 1");
  if (output_dir.empty()) throw InvalidConfig("an output directory is required");
  cfg.validate();
  if (command == Command::Solve || command == Command::Sweep) {
    if (solver != SolverKind::BcdExpected && effective_m() < 1)
      throw InvalidConfig("m must be >= 1 for finite-sample solvers");
    if (solver == SolverKind::BcdExpected && effective_start_mode() == StartMode::Spectral)
      throw InvalidConfig("a spectral start needs a finite-sample solver");
  }
  if (command == Command::InitTest && effective_m() < 1) throw InvalidConfig("m must be >= 1");
  if (command == Command::Certify && (!(grid_step > 0.0) || grid_step > 1e-2))
    throw InvalidConfig("grid step must be in (0, 1e-2]");
  for (double r : sweep_rho_rel)
    if (!(r > 0.0)) throw InvalidConfig("sweep rho values must be > 0");
  for (double r : sweep_m_over_n)
    if (!(r > 0.0)) throw InvalidConfig("sweep m/n values must be > 0");
}

StartMode ExperimentSpec::effective_start_mode() const {
  if (start_mode) return *start_mode;
  return solver == SolverKind::BcdExpected ? StartMode::Basin : StartMode::Spectral;
}

int ExperimentSpec::effective_m() const {
  if (m > 0) return m;
  if (command == Command::InitTest)
    return std::max(1, static_cast<int>(std::ceil(3.0 * n * std::log(static_cast<double>(n)))));
  return 10 * n;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* const kTraceCsvHeader = "iter,objective,grad_norm,primal_gap,dual_norm,dist_to_truth,in_basin";

void write_trace_csv(std::ostream& os, const IterateTrace& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm)
       << ',' << format_double(r.primal_gap) << ',' << format_double(r.dual_norm) << ','
       << format_double(r.dist_to_truth) << ',' << (r.in_basin ? '1' : '0') << '\n';
  }
}

void write_certificates_csv(std::ostream& os, const std::vector<CertificateReport>& reports) {
  os << "name,samples,worst_value,threshold,margin,pass\n";
  for (const auto& r : reports) {
    os << r.name << ',' << r.samples_or_grid << ',' << format_double(r.worst_value) << ','
       << format_double(r.threshold) << ',' << format_double(r.margin) << ','
       << (r.pass ? '1' : '0') << '\n';
  }
}

double empirical_rate(const IterateTrace& trace) {
  const auto& rec = trace.records;
  if (rec.size() < 2) return 0.0;
  // Gap ratios are meaningless once the objective sits at the rounding floor.
  const double floor = 1e-12 * std::max(1.0, rec.front().objective);
  double rate = 0.0;
  for (std::size_t k = 0; k + 1 < rec.size(); ++k)
    if (rec[k].objective > floor && rec[k + 1].objective > floor)
      rate = std::max(rate, rec[k + 1].objective / rec[k].objective);
  return rate;
}

namespace {

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_trace_svg(std::ostream& os, const IterateTrace& trace,
                     std::optional<RateConstants> rate) {
  const int width = 720, height = 480;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  const auto& rec = trace.records;
  const long kmax = rec.empty() ? 1 : std::max<long>(1, rec.back().iter);

  auto logdist = [](double d) { return std::log10(std::max(d, 1e-16)); };
  double ylo = 0.0, yhi = -16.0;
  for (const auto& r : rec) {
    const double v = logdist(r.dist_to_truth);
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  ylo = std::floor(ylo) - 0.5;
  yhi = std::ceil(yhi) + 0.5;

  auto sx = [&](double k) { return ml + (width - ml - mr) * (k / static_cast<double>(kmax)); };
  auto sy = [&](double v) { return mt + (height - mt - mb) * (yhi - v) / (yhi - ylo); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  os << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(height - mb) << "\" x2=\""
     << fmt_coord(width - mr) << "\" y2=\"" << fmt_coord(height - mb)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(mt) << "\" x2=\""
     << fmt_coord(ml) << "\" y2=\"" << fmt_coord(height - mb) << "\" stroke=\"black\"/>\n";
  // y ticks at integer decades
  for (int d = static_cast<int>(std::ceil(ylo)); d <= static_cast<int>(std::floor(yhi)); d += 2) {
    const double y = sy(d);
    os << "<line x1=\"" << fmt_coord(ml - 4) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
       << fmt_coord(ml) << "\" y2=\"" << fmt_coord(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt_coord(ml - 8) << "\" y=\"" << fmt_coord(y + 4)
       << "\" text-anchor=\"end\" font-size=\"12\">1e" << d << "</text>\n";
  }
  // x ticks
  const long xstep = std::max<long>(1, kmax / 8);
  for (long k = 0; k <= kmax; k += xstep) {
    const double x = sx(static_cast<double>(k));
    os << "<line x1=\"" << fmt_coord(x) << "\" y1=\"" << fmt_coord(height - mb) << "\" x2=\""
       << fmt_coord(x) << "\" y2=\"" << fmt_coord(height - mb + 4) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt_coord(x) << "\" y=\"" << fmt_coord(height - mb + 18)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << k << "</text>\n";
  }
  os << "<text x=\"" << fmt_coord((ml + width - mr) / 2) << "\" y=\"" << fmt_coord(height - 12)
     << "\" text-anchor=\"middle\" font-size=\"13\">iteration</text>\n";
  os << "<text x=\"16\" y=\"" << fmt_coord((mt + height - mb) / 2)
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << fmt_coord((mt + height - mb) / 2) << ")\">distance to truth</text>\n";

  // measured distance polyline
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (const auto& r : rec)
    os << fmt_coord(sx(static_cast<double>(r.iter))) << ',' << fmt_coord(sy(logdist(r.dist_to_truth))) << ' ';
  os << "\"/>\n";

  // theoretical envelope: prefactor * contraction^(k/2)
  if (rate && !rec.empty()) {
    const double pref = rate->prefactor_proof(rec.front().objective);
    if (pref > 0.0 && rate->contraction > 0.0) {
      os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" "
            "stroke-dasharray=\"6 3\" points=\"";
      for (long k = 0; k <= kmax; ++k) {
        const double v = std::log10(pref) + 0.5 * k * std::log10(rate->contraction);
        os << fmt_coord(sx(static_cast<double>(k))) << ',' << fmt_coord(sy(std::max(v, ylo))) << ' ';
      }
      os << "\"/>\n";
      os << "<text x=\"" << fmt_coord(width - mr - 8) << "\" y=\"" << fmt_coord(mt + 16)
         << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#d62728\">theoretical rate</text>\n";
    }
  }
  os << "<text x=\"" << fmt_coord(width - mr - 8) << "\" y=\"" << fmt_coord(mt + 32)
     << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#1f77b4\">measured</text>\n";
  os << "</svg>\n";
}

namespace {

GroundTruth make_truth(const ExperimentSpec& spec, double rho) {
  RandomStream stream(spec.cfg.seed, kTruthSubstream);
  Vec x = sample_unit_vector(stream, spec.n);
  return GroundTruth(std::move(x), rho);
}

std::string trial_file(const std::string& stem, int trial, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem.c_str(), trial, ext);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);  // '\n' endings on every platform
  if (!os) throw Error("cannot open output file " + path.string());
  return os;
}

struct TrialRow {
  SolveStatus status = SolveStatus::MaxIterReached;
  long iterations = 0;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  double final_primal_gap = 0.0;
  double final_dual_norm = 0.0;
  double final_dist = 0.0;
  double rel_error_z = 0.0;
  double emp_rate = 0.0;
  double theo_contraction = 0.0;
  long basin_violations = 0;
  IterateTrace trace;
};

TrialRow run_trial(const GroundTruth& truth, SolverKind solver, StartMode start_mode,
                   const SolverConfig& cfg, int m, int trial) {
  RandomStream stream(cfg.seed, static_cast<std::uint64_t>(trial));

  SolveResult result;
  if (solver == SolverKind::BcdExpected) {
    EstimatePair start;
    switch (start_mode) {
      case StartMode::Basin: start = sample_basin_point(truth, stream); break;
      case StartMode::Truth: start = {truth.x(), truth.x()}; break;
      case StartMode::Spectral:
        throw InvalidConfig("spectral start needs a finite-sample solver");
    }
    result = run_bcd_expected(truth, start, cfg);
  } else {
    const MeasurementEnsemble ens = generate_ensemble(truth, m, stream);
    EstimatePair start;
    switch (start_mode) {
      case StartMode::Spectral: {
        Vec x0 = spectral_init(ens, cfg.init_variant == InitVariant::Given
                                        ? InitVariant::SpectralSquared
                                        : cfg.init_variant);
        start = {x0, x0};
        break;
      }
      case StartMode::Basin: start = sample_basin_point(truth, stream); break;
      case StartMode::Truth: start = {truth.x(), truth.x()}; break;
    }
    result = (solver == SolverKind::Admm) ? run_admm_finite(ens, start, cfg, &truth)
                                          : run_bcd_finite(ens, start, cfg, &truth);
  }

  TrialRow row;
  row.status = result.status;
  row.iterations = static_cast<long>(result.trace.records.size()) - 1;
  const TraceRecord& last = result.trace.records.back();
  row.final_objective = last.objective;
  row.final_grad_norm = last.grad_norm;
  row.final_primal_gap = last.primal_gap;
  row.final_dual_norm = last.dual_norm;
  row.final_dist = last.dist_to_truth;
  row.rel_error_z = recovery_error(result.final.z, truth.x()) / truth.norm_x();
  row.emp_rate = empirical_rate(result.trace);
  const double nx2 = truth.norm_x_sq();
  row.theo_contraction = 1.0 - nx2 / (12.0 * nx2 + 3.0 * truth.rho());
  for (const auto& r : result.trace.records)
    if (!r.in_basin) ++row.basin_violations;
  row.trace = std::move(result.trace);
  return row;
}

int cmd_solve(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  auto summary = open_out(fs::path(spec.output_dir) / "summary.csv");
  summary << "trial,solver,n,m,rho,seed,status,iterations,final_objective,final_grad_norm,"
             "final_primal_gap,final_dual_norm,final_dist,rel_error_z,empirical_rate,"
             "theoretical_contraction,basin_violations\n";

  const double rho = spec.cfg.resolved_rho(1.0);  // ||x|| = 1 by construction
  const GroundTruth truth = make_truth(spec, rho);
  const int m = spec.solver == SolverKind::BcdExpected ? 0 : spec.effective_m();
  if (spec.solver != SolverKind::BcdExpected && m < spec.n)
    std::cerr << "warning: m < n, the spectral estimate is underdetermined\n";

  std::optional<RateConstants> rate;
  try {
    rate = rate_constants(truth);
  } catch (const RhoTooSmall&) {
    rate = std::nullopt;  // outside the theorem regime; no envelope in plots
  }

  for (int t = 0; t < spec.trials; ++t) {
    const TrialRow row = run_trial(truth, spec.solver, spec.effective_start_mode(), spec.cfg, m, t);
    {
      auto os = open_out(fs::path(spec.output_dir) / trial_file("trace", t, "csv"));
      write_trace_csv(os, row.trace);
    }
    if (spec.emit_plot) {
      auto os = open_out(fs::path(spec.output_dir) / trial_file("trace", t, "svg"));
      write_trace_svg(os, row.trace, spec.solver == SolverKind::BcdExpected ? rate : std::nullopt);
    }
    summary << t << ',' << solver_name(spec.solver) << ',' << spec.n << ',' << m << ','
            << format_double(rho) << ',' << spec.cfg.seed << ',' << status_name(row.status) << ','
            << row.iterations << ',' << format_double(row.final_objective) << ','
            << format_double(row.final_grad_norm) << ',' << format_double(row.final_primal_gap)
            << ',' << format_double(row.final_dual_norm) << ',' << format_double(row.final_dist)
            << ',' << format_double(row.rel_error_z) << ',' << format_double(row.emp_rate) << ','
            << format_double(row.theo_contraction) << ',' << row.basin_violations << '\n';
  }
  return 0;
}

int cmd_certify(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  auto csv = open_out(fs::path(spec.output_dir) / "certificates.csv");

  const double rho = spec.cfg.resolved_rho(1.0);
  const GroundTruth truth = make_truth(spec, rho);
  const int sc_samples = spec.cert_samples > 0 ? spec.cert_samples : 1000;
  const int pair_samples = spec.cert_samples > 0 ? spec.cert_samples : 10000;

  std::vector<CertificateReport> rows;
  const auto skipped = [&](const char* name, double threshold, const std::string& why) {
    std::cerr << "certificate " << name << " skipped: " << why << '\n';
    CertificateReport rep;
    rep.name = name;
    rep.samples_or_grid = 0;
    rep.worst_value = std::numeric_limits<double>::quiet_NaN();
    rep.threshold = threshold;
    rep.margin = std::numeric_limits<double>::quiet_NaN();
    rep.pass = false;
    return rep;
  };

  {
    RandomStream stream(spec.cfg.seed, 0);
    try {
      rows.push_back(certify_strong_convexity(truth, sc_samples, stream));
    } catch (const Error& e) {
      rows.push_back(skipped("strong_convexity", truth.norm_x_sq() / 3.0, e.what()));
    }
  }
  {
    RandomStream stream(spec.cfg.seed, 1);
    rows.push_back(certify_block_lipschitz(truth, pair_samples, stream));
  }
  {
    RandomStream stream(spec.cfg.seed, 2);
    rows.push_back(certify_descent_inequalities(truth, pair_samples, stream));
  }
  try {
    const NoEscapeResult ne = no_escape_certificate(rho / truth.norm_x_sq(), spec.grid_step);
    rows.push_back(ne.h_min);
    rows.push_back(ne.rc_max);
    rows.push_back(ne.crosscheck);
  } catch (const Error& e) {
    rows.push_back(skipped("no_escape", 63.0 / 64.0, e.what()));
  }

  write_certificates_csv(csv, rows);
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << (r.pass ? "pass" : "FAIL") << "  " << r.name << "  worst="
              << format_double(r.worst_value) << " threshold=" << format_double(r.threshold)
              << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

int cmd_init_test(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  auto trials_csv = open_out(fs::path(spec.output_dir) / "init_trials.csv");
  trials_csv << "trial,variant,rel_error,success\n";

  const GroundTruth truth = make_truth(spec, spec.cfg.resolved_rho(1.0));
  const int m = spec.effective_m();
  if (m < spec.n) std::cerr << "warning: m < n, the spectral estimate is underdetermined\n";

  constexpr const char* kVariantNames[2] = {"squared", "as-written"};
  constexpr InitVariant kVariants[2] = {InitVariant::SpectralSquared,
                                        InitVariant::SpectralAsWritten};
  int successes[2] = {0, 0};
  for (int t = 0; t < spec.trials; ++t) {
    RandomStream stream(spec.cfg.seed, static_cast<std::uint64_t>(t));
    const MeasurementEnsemble ens = generate_ensemble(truth, m, stream);
    for (int v = 0; v < 2; ++v) {
      const Vec x0 = spectral_init(ens, kVariants[v]);
      const double rel = recovery_error(x0, truth.x()) / truth.norm_x();
      const bool ok = rel <= 1.0 / 8.0;
      successes[v] += ok ? 1 : 0;
      trials_csv << t << ',' << kVariantNames[v] << ',' << format_double(rel) << ','
                 << (ok ? '1' : '0') << '\n';
    }
  }

  auto summary = open_out(fs::path(spec.output_dir) / "init_summary.csv");
  summary << "variant,trials,n,m,m_rule,success_fraction\n";
  const std::string rule = spec.m > 0 ? "given" : "ceil(3*n*log(n))";
  for (int v = 0; v < 2; ++v) {
    const double frac = static_cast<double>(successes[v]) / spec.trials;
    summary << kVariantNames[v] << ',' << spec.trials << ',' << spec.n << ',' << m << ',' << rule
            << ',' << format_double(frac) << '\n';
    std::cout << "init-test " << kVariantNames[v] << ": " << successes[v] << '/' << spec.trials
              << " within ||x||/8\n";
  }
  return 0;
}

int cmd_sweep(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  auto csv = open_out(fs::path(spec.output_dir) / "sweep.csv");
  csv << "solver,n,m,rho_rel,trial,status,iterations,final_error,empirical_rate,"
         "basin_violations\n";

  std::vector<double> rhos = spec.sweep_rho_rel;
  if (rhos.empty()) rhos = {1.0, 2.0, 27.0 / 8.0, 8.0};
  std::vector<double> m_over_n = spec.sweep_m_over_n;
  if (m_over_n.empty()) {
    if (spec.solver == SolverKind::BcdExpected)
      m_over_n = {0.0};  // no ensemble axis
    else
      m_over_n = {2.0, 4.0, 6.0, 8.0, 10.0};
  }

  for (const double mr : m_over_n) {
    const int m = spec.solver == SolverKind::BcdExpected
                      ? 0
                      : std::max(1, static_cast<int>(std::lround(mr * spec.n)));
    for (const double rho_rel : rhos) {
      SolverConfig cfg = spec.cfg;
      cfg.rho_policy = RhoPolicy::relative(rho_rel);
      const GroundTruth truth = make_truth(spec, cfg.resolved_rho(1.0));
      for (int t = 0; t < spec.trials; ++t) {
        const TrialRow row =
            run_trial(truth, spec.solver, spec.effective_start_mode(), cfg, m, t);
        csv << solver_name(spec.solver) << ',' << spec.n << ',' << m << ','
            << format_double(rho_rel) << ',' << t << ',' << status_name(row.status) << ','
            << row.iterations << ',' << format_double(row.rel_error_z) << ','
            << format_double(row.emp_rate) << ',' << row.basin_violations << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int run_command(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.command) {
    case Command::Solve: return cmd_solve(spec);
    case Command::Certify: return cmd_certify(spec);
    case Command::InitTest: return cmd_init_test(spec);
    case Command::Sweep: return cmd_sweep(spec);
  }
  return 1;
}

namespace {

// Expands "--config FILE" into the flags the file provides. File entries are
// inserted right after the subcommand and dropped whenever the same flag was
// also given on the command line, so explicit flags always win.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string config_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_file = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_file = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_file.empty()) return args;

  std::ifstream is(config_file);
  if (!is) throw Error("cannot read config file " + config_file);
  const auto has_flag = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  std::vector<std::string> extra;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || has_flag(key)) continue;
    extra.push_back("--" + key + "=" + value);
  }
  if (args.empty()) return args;
  args.insert(args.begin() + 1, extra.begin(), extra.end());  // after the subcommand
  return args;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"biconvex splitting solvers and numerical certificates for Gaussian phase retrieval"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::optional<double> rho_abs, rho_rel;
  std::string init_name = "squared";
  std::string solver_name_in = "bcd-expected";
  std::string start_name;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--n", spec.n, "signal dimension")->check(CLI::PositiveNumber);
    sub->add_option("--m", spec.m, "number of measurements (0 = command default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", spec.cfg.seed, "master seed; trial t uses substream t")
        ->envname("PRSPLIT_SEED");
    sub->add_option("--trials", spec.trials, "independent trials")->check(CLI::PositiveNumber);
    auto* abs_opt = sub->add_option("--rho", rho_abs, "absolute penalty rho");
    sub->add_option("--rho-rel", rho_rel, "rho as a multiple of ||x||^2 (default 27/8)")
        ->excludes(abs_opt);
    sub->add_option("--max-iter", spec.cfg.max_iter, "iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--tol-grad", spec.cfg.tol_grad, "gradient-norm stop (default 1e-9 ||x||^3)");
    sub->add_option("--tol-step", spec.cfg.tol_step, "iterate-change stop (default 1e-10 ||x||)");
    sub->add_option("--init", init_name, "spectral variant: squared | as-written")
        ->check(CLI::IsMember({"squared", "as-written"}));
    sub->add_option("--out", spec.output_dir, "output directory (all files go here)")->required();
    sub->add_flag("--plot", spec.emit_plot, "emit a self-contained SVG per trace");
    // --config is consumed before parsing (see expand_config_args); registered
    // here only so it appears in --help.
    std::string ignored;
    sub->add_option("--config", ignored, "flat key=value config file; flags win");
  };

  auto* solve = app.add_subcommand("solve", "run a solver, write per-trial traces and a summary");
  add_common(solve);
  solve->add_option("--solver", solver_name_in, "bcd-expected | bcd-finite | admm")
      ->check(CLI::IsMember({"bcd-expected", "bcd-finite", "admm"}));
  solve->add_option("--start", start_name, "basin | spectral | truth")
      ->check(CLI::IsMember({"basin", "spectral", "truth"}));

  auto* certify = app.add_subcommand("certify", "run the certificate battery, write certificates.csv");
  add_common(certify);
  certify->add_option("--samples", spec.cert_samples, "per-certificate sample override")
      ->check(CLI::PositiveNumber);
  certify->add_option("--grid-step", spec.grid_step, "no-escape grid step (default 1e-3)");

  auto* init_test = app.add_subcommand("init-test", "spectral initialization success study");
  add_common(init_test);

  auto* sweep = app.add_subcommand("sweep", "grid of runs over rho and m/n");
  add_common(sweep);
  sweep->add_option("--solver", solver_name_in, "bcd-expected | bcd-finite | admm")
      ->check(CLI::IsMember({"bcd-expected", "bcd-finite", "admm"}));
  sweep->add_option("--start", start_name, "basin | spectral | truth")
      ->check(CLI::IsMember({"basin", "spectral", "truth"}));
  sweep->add_option("--sweep-rho-rel", spec.sweep_rho_rel, "rho/||x||^2 grid values");
  sweep->add_option("--sweep-m-over-n", spec.sweep_m_over_n, "m/n grid values");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config_args(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (solve->parsed()) spec.command = Command::Solve;
    if (certify->parsed()) spec.command = Command::Certify;
    if (init_test->parsed()) spec.command = Command::InitTest;
    if (sweep->parsed()) spec.command = Command::Sweep;

    if (rho_abs) spec.cfg.rho_policy = RhoPolicy::absolute(*rho_abs);
    if (rho_rel) spec.cfg.rho_policy = RhoPolicy::relative(*rho_rel);
    spec.cfg.init_variant =
        init_name == "as-written" ? InitVariant::SpectralAsWritten : InitVariant::SpectralSquared;
    if (solver_name_in == "bcd-finite") spec.solver = SolverKind::BcdFinite;
    else if (solver_name_in == "admm") spec.solver = SolverKind::Admm;
    else spec.solver = SolverKind::BcdExpected;
    if (start_name == "basin") spec.start_mode = StartMode::Basin;
    else if (start_name == "spectral") spec.start_mode = StartMode::Spectral;
    else if (start_name == "truth") spec.start_mode = StartMode::Truth;

    return run_command(spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace prsplit
