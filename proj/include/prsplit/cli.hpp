#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prsplit/theory.hpp"

namespace prsplit {

enum class Command { Solve, Certify, InitTest, Sweep };
enum class SolverKind { BcdExpected, BcdFinite, Admm };
enum class StartMode { Basin, Spectral, Truth };

struct ExperimentSpec {
  Command command = Command::Solve;
  int n = 16;
  int m = 0;  // 0 = command default (10n for finite solves, ceil(3 n ln n) for init-test)
  SolverKind solver = SolverKind::BcdExpected;
  SolverConfig cfg;
  std::optional<StartMode> start_mode;  // default depends on the solver
  int trials = 1;
  std::string output_dir;
  bool emit_plot = false;
  int cert_samples = 0;  // 0 = per-certificate defaults
  double grid_step = 1e-3;
  std::vector<double> sweep_rho_rel;
  std::vector<double> sweep_m_over_n;

  void validate() const;  // throws InvalidConfig
  StartMode effective_start_mode() const;
  int effective_m() const;
};

/// Runs one command end to end; returns the process exit status.
/// All outputs are written under spec.output_dir.
int run_command(const ExperimentSpec& spec);

/// Full argv-level entry point (parse + run). Used by the binary and by
/// integration tests.
int cli_main(int argc, const char* const* argv);

// -- serialization helpers (pinned formats, exercised by golden tests) --

/// Round-trip-exact decimal formatting: 17 significant digits, '.' radix.
std::string format_double(double v);

extern const char* const kTraceCsvHeader;
void write_trace_csv(std::ostream& os, const IterateTrace& trace);
void write_certificates_csv(std::ostream& os, const std::vector<CertificateReport>& reports);

/// Self-contained SVG line plot of log10 distance-to-truth per iteration,
/// with the theoretical contraction line when provided.
void write_trace_svg(std::ostream& os, const IterateTrace& trace,
                     std::optional<RateConstants> rate);

/// Largest adjacent objective-gap ratio over the trace, skipping gaps at the
/// floating-point noise floor. 0 when fewer than two usable records.
double empirical_rate(const IterateTrace& trace);

}  // namespace prsplit
