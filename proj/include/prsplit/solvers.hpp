#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "prsplit/model.hpp"

namespace prsplit {

enum class InitVariant {
  SpectralSquared,    // eigenvector of (1/m) sum y^2 a a^T, scale n sum y^2 / sum ||a||^2
  SpectralAsWritten,  // eigenvector of sum y a a^T, scale sum y / sum ||a||^2
  Given,              // caller supplies the start
};

struct RhoPolicy {
  enum class Kind { Absolute, RelativeToNormXSq };
  Kind kind = Kind::RelativeToNormXSq;
  double value = 27.0 / 8.0;

  static RhoPolicy absolute(double rho) { return {Kind::Absolute, rho}; }
  static RhoPolicy relative(double factor) { return {Kind::RelativeToNormXSq, factor}; }
};

struct SolverConfig {
  RhoPolicy rho_policy;
  long max_iter = 10000;
  /// Absolute tolerances; when unset the scale-aware defaults
  /// 1e-9 ||x||^3 (gradient) and 1e-10 ||x|| (step) are used.
  std::optional<double> tol_grad;
  std::optional<double> tol_step;
  InitVariant init_variant = InitVariant::SpectralSquared;
  std::optional<EstimatePair> given_start;
  std::uint64_t seed = 0;
  /// Pins the ADMM dual to zero, which reduces the iteration to finite BCD.
  bool disable_dual_update = false;

  void validate() const;  // throws InvalidConfig
  double resolved_rho(double norm_x_sq) const;
  double resolved_tol_grad(double norm_x) const;
  double resolved_tol_step(double norm_x) const;
};

struct TraceRecord {
  long iter = 0;
  double objective = 0.0;   // g for expected runs, f for finite runs
  double grad_norm = 0.0;   // joint norm of both blocks
  double primal_gap = 0.0;  // ||z - w||
  double dual_norm = 0.0;   // ||lambda||, 0 for BCD
  double dist_to_truth = 0.0;
  bool in_basin = false;
};

struct IterateTrace {
  std::vector<TraceRecord> records;
  bool has_truth = false;  // dist/in_basin columns are meaningful
};

enum class SolveStatus { Converged, MaxIterReached };

struct SolveResult {
  EstimatePair final;
  Vec final_dual;
  SolveStatus status = SolveStatus::MaxIterReached;
  IterateTrace trace;
};

/// Spectral initial estimate from the ensemble. The eigenvector sign is
/// canonicalized deterministically; recovery is judged against both +-x.
Vec spectral_init(const MeasurementEnsemble& ens, InitVariant variant);

/// Exact minimizer of g(., w): solves (2 w w^T + (||w||^2 + rho) I) z = rhs
/// through the rank-1 eigendecomposition of the operator, O(n).
Vec bcd_expected_step_z(const GroundTruth& truth, const Vec& w, double rho);
/// Mirror image for the w block; equal to the z step by block symmetry of g.
Vec bcd_expected_step_w(const GroundTruth& truth, const Vec& z, double rho);

/// Alternating exact block minimization of g.
SolveResult run_bcd_expected(const GroundTruth& truth, const EstimatePair& start,
                             const SolverConfig& cfg);

struct AdmmState {
  EstimatePair pair;
  Vec dual;
};

/// One ADMM round on the finite-sample augmented Lagrangian: two SPD solves
/// and the dual ascent step.
AdmmState admm_finite_step(const MeasurementEnsemble& ens, const AdmmState& state,
                           const SolverConfig& cfg);

SolveResult run_admm_finite(const MeasurementEnsemble& ens, const EstimatePair& start,
                            const SolverConfig& cfg, const GroundTruth* truth = nullptr);

/// ADMM with the dual pinned to zero; produces a trace identical to
/// run_admm_finite with disable_dual_update set.
SolveResult run_bcd_finite(const MeasurementEnsemble& ens, const EstimatePair& start,
                           const SolverConfig& cfg, const GroundTruth* truth = nullptr);

struct CriticalPointReport {
  bool pass = false;
  double grad_z_norm = 0.0;
  double grad_w_norm = 0.0;
  double split_norm = 0.0;  // ||z - w||
  double dual_norm = 0.0;   // ||lambda||
  double tol = 0.0;
};

/// Checks the critical-point law: both partials, the split z - w, and the
/// dual all within tol.
CriticalPointReport check_critical_point(const MeasurementEnsemble& ens, const EstimatePair& p,
                                         const Vec& lambda, double tol);

/// ||x||^2 estimator (1/m) sum y_k^2, used to resolve relative rho when the
/// truth is withheld.
double estimate_norm_x_sq(const MeasurementEnsemble& ens);

/// min(||v - x||, ||v + x||): recovery error up to the global sign.
double recovery_error(const Vec& v, const Vec& x);

/// Joint distance min(||(z,w) - (x,x)||, ||(z,w) + (x,x)||).
double pair_distance_to_truth(const EstimatePair& p, const Vec& x);

}  // namespace prsplit
