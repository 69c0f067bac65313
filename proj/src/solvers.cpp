#include "prsplit/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prsplit {

void SolverConfig::validate() const {
  if (!(rho_policy.value > 0.0)) throw InvalidConfig("SolverConfig: rho must be > 0");
  if (max_iter < 1) throw InvalidConfig("SolverConfig: max_iter must be >= 1");
  if (tol_grad && !(*tol_grad > 0.0)) throw InvalidConfig("SolverConfig: tol_grad must be > 0");
  if (tol_step && !(*tol_step > 0.0)) throw InvalidConfig("SolverConfig: tol_step must be > 0");
  if (init_variant == InitVariant::Given && !given_start)
    throw InvalidConfig("SolverConfig: Given init requires a start point");
}

double SolverConfig::resolved_rho(double norm_x_sq) const {
  if (rho_policy.kind == RhoPolicy::Kind::Absolute) return rho_policy.value;
  return rho_policy.value * norm_x_sq;
}

double SolverConfig::resolved_tol_grad(double norm_x) const {
  // Gradient of a quartic scales as ||x||^3.
  return tol_grad ? *tol_grad : 1e-9 * norm_x * norm_x * norm_x;
}

double SolverConfig::resolved_tol_step(double norm_x) const {
  return tol_step ? *tol_step : 1e-10 * norm_x;
}

Vec spectral_init(const MeasurementEnsemble& ens, InitVariant variant) {
  if (variant == InitVariant::Given)
    throw InvalidConfig("spectral_init: Given is not a spectral variant");
  const int n = ens.n();
  const int m = ens.m();

  SymMat y_mat(n);
  double sum_y = 0.0, sum_y2 = 0.0, sum_a2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto a = ens.row(k);
    const double yk = ens.y(k);
    sum_y += yk;
    sum_y2 += yk * yk;
    sum_a2 += norm_sq(a);
    const double weight =
        (variant == InitVariant::SpectralSquared) ? yk * yk / static_cast<double>(m) : yk;
    y_mat.add_outer(weight, a);
  }

  const EigenPair top = top_eigenpair(y_mat);
  const double scale_sq = (variant == InitVariant::SpectralSquared)
                              ? static_cast<double>(n) * sum_y2 / sum_a2
                              : sum_y / sum_a2;
  Vec x0 = scaled(top.vector, std::sqrt(std::max(scale_sq, 0.0)));

  // Deterministic sign: the objective weight sum_k y_k^2 (a_k . x0)^2 is even
  // in x0, so either sign is valid; make the largest-magnitude coordinate
  // positive so reruns agree bitwise.
  int pivot = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(x0[i]) > std::abs(x0[pivot])) pivot = i;
  if (x0[pivot] < 0.0)
    for (auto& v : x0) v = -v;
  return x0;
}

Vec bcd_expected_step_z(const GroundTruth& truth, const Vec& w, double rho) {
  if (w.size() != static_cast<std::size_t>(truth.dim()))
    throw DimensionMismatch("bcd_expected_step_z: w dimension mismatch");
  if (!(rho > 0.0)) throw InvalidConfig("bcd_expected_step_z: rho must be > 0");
  const Vec& x = truth.x();
  const int n = truth.dim();
  const double nx2 = truth.norm_x_sq();
  const double nw2 = norm_sq(w);
  const double xw = dot(x, w);

  // rhs = 2 (x.w) x + (||x||^2 + rho) w
  Vec rhs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rhs[i] = 2.0 * xw * x[i] + (nx2 + rho) * w[i];

  if (nw2 == 0.0) return scaled(rhs, 1.0 / rho);  // operator degenerates to rho I

  // Rank-1 split of (2 w w^T + (||w||^2 + rho) I)^{-1}: eigenvalue
  // 3||w||^2 + rho on span{w}, ||w||^2 + rho on the complement.
  const double along = dot(w, rhs) / nw2;
  const double inv_span = 1.0 / (3.0 * nw2 + rho);
  const double inv_perp = 1.0 / (nw2 + rho);
  Vec z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    z[i] = along * w[i] * inv_span + (rhs[i] - along * w[i]) * inv_perp;
  return z;
}

Vec bcd_expected_step_w(const GroundTruth& truth, const Vec& z, double rho) {
  // g is symmetric in its blocks, so the w update is the same map.
  return bcd_expected_step_z(truth, z, rho);
}

double estimate_norm_x_sq(const MeasurementEnsemble& ens) {
  CompensatedSum acc;
  for (int k = 0; k < ens.m(); ++k) acc.add(ens.y(k) * ens.y(k));
  return acc.value() / ens.m();
}

double recovery_error(const Vec& v, const Vec& x) {
  if (v.size() != x.size()) throw DimensionMismatch("recovery_error: size mismatch");
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = v[i] - x[i];
    const double b = v[i] + x[i];
    dm += a * a;
    dp += b * b;
  }
  return std::sqrt(std::min(dm, dp));
}

double pair_distance_to_truth(const EstimatePair& p, const Vec& x) {
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double a = p.z[i] - x[i], b = p.z[i] + x[i];
    dm += a * a;
    dp += b * b;
    a = p.w[i] - x[i];
    b = p.w[i] + x[i];
    dm += a * a;
    dp += b * b;
  }
  return std::sqrt(std::min(dm, dp));
}

namespace {

double joint_norm(const Vec& a, const Vec& b) {
  return std::sqrt(norm_sq(a) + norm_sq(b));
}

double joint_step(const EstimatePair& now, const EstimatePair& prev) {
  double s = 0.0;
  for (std::size_t i = 0; i < now.z.size(); ++i) {
    const double dz = now.z[i] - prev.z[i];
    const double dw = now.w[i] - prev.w[i];
    s += dz * dz + dw * dw;
  }
  return std::sqrt(s);
}

}  // namespace

SolveResult run_bcd_expected(const GroundTruth& truth, const EstimatePair& start,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (start.z.size() != static_cast<std::size_t>(truth.dim()) ||
      start.w.size() != static_cast<std::size_t>(truth.dim()))
    throw DimensionMismatch("run_bcd_expected: start dimension mismatch");

  // The objective reads rho from the truth; the updates read it from the
  // config. They must be the same number or the trace would report a
  // different g than the one being minimized.
  const double rho = cfg.resolved_rho(truth.norm_x_sq());
  if (std::abs(rho - truth.rho()) > 1e-9 * std::max(1.0, std::abs(rho)))
    throw InvalidConfig("run_bcd_expected: config rho disagrees with truth rho");
  const double tol_grad = cfg.resolved_tol_grad(truth.norm_x());
  const double tol_step = cfg.resolved_tol_step(truth.norm_x());

  SolveResult res;
  res.trace.has_truth = true;
  EstimatePair p = start;

  const auto record = [&](long k) {
    const auto [gz, gw] = grad_g(truth, p);
    TraceRecord rec;
    rec.iter = k;
    rec.objective = g_expected(truth, p);
    rec.grad_norm = joint_norm(gz, gw);
    rec.primal_gap = dist(p.z, p.w);
    rec.dual_norm = 0.0;
    rec.dist_to_truth = pair_distance_to_truth(p, truth.x());
    rec.in_basin = in_basin(truth, p);
    res.trace.records.push_back(rec);
    return rec.grad_norm;
  };

  double grad_norm = record(0);
  res.status = SolveStatus::MaxIterReached;
  if (grad_norm <= tol_grad) {
    res.status = SolveStatus::Converged;
  } else {
    for (long k = 1; k <= cfg.max_iter; ++k) {
      const EstimatePair prev = p;
      p.z = bcd_expected_step_z(truth, p.w, rho);
      p.w = bcd_expected_step_w(truth, p.z, rho);
      grad_norm = record(k);
      if (grad_norm <= tol_grad || joint_step(p, prev) <= tol_step) {
        res.status = SolveStatus::Converged;
        break;
      }
    }
  }
  res.final = std::move(p);
  res.final_dual = zeros(truth.dim());
  return res;
}

namespace {

// One half-step of the finite-sample augmented Lagrangian: minimizes over one
// block by solving [(1/2m) sum (a.u)^2 a a^T + rho I] v = (1/2m) sum y^2 (a.u) a
// + dual_sign * lambda + rho u.
Vec finite_block_solve(const MeasurementEnsemble& ens, const Vec& other, const Vec& lambda,
                       double dual_sign, double rho) {
  const int n = ens.n();
  SymMat op(n);
  Vec rhs = zeros(n);
  const double inv = 1.0 / (2.0 * ens.m());
  for (int k = 0; k < ens.m(); ++k) {
    const auto a = ens.row(k);
    const double t = dot(a, other);
    op.add_outer(t * t * inv, a);
    axpy(ens.y(k) * ens.y(k) * t * inv, a, rhs);
  }
  op.add_diag(rho);
  for (int i = 0; i < n; ++i) rhs[i] += dual_sign * lambda[i] + rho * other[i];
  return spd_solve(op, rhs);
}

AdmmState admm_step_impl(const MeasurementEnsemble& ens, const AdmmState& state, double rho,
                         bool update_dual) {
  AdmmState next;
  next.pair.z = finite_block_solve(ens, state.pair.w, state.dual, -1.0, rho);
  next.pair.w = finite_block_solve(ens, next.pair.z, state.dual, +1.0, rho);
  next.dual = state.dual;
  if (update_dual) {
    for (std::size_t i = 0; i < next.dual.size(); ++i)
      next.dual[i] += rho * (next.pair.z[i] - next.pair.w[i]);
  }
  return next;
}

SolveResult run_finite(const MeasurementEnsemble& ens, const EstimatePair& start,
                       const SolverConfig& cfg, const GroundTruth* truth, bool update_dual) {
  cfg.validate();
  if (start.z.size() != static_cast<std::size_t>(ens.n()) ||
      start.w.size() != static_cast<std::size_t>(ens.n()))
    throw DimensionMismatch("run_finite: start dimension mismatch");

  const double nx2_est = estimate_norm_x_sq(ens);
  const double rho = cfg.resolved_rho(nx2_est);
  if (!(rho > 0.0)) throw InvalidConfig("run_finite: resolved rho must be > 0");
  const double scale = std::sqrt(nx2_est);
  const double tol_step = cfg.resolved_tol_step(std::max(scale, 1e-300));

  SolveResult res;
  res.trace.has_truth = (truth != nullptr);
  AdmmState state{start, zeros(ens.n())};

  const auto record = [&](long k) {
    const auto [gz, gw] = grad_f_finite(ens, state.pair);
    TraceRecord rec;
    rec.iter = k;
    rec.objective = f_finite(ens, state.pair);
    rec.grad_norm = joint_norm(gz, gw);
    rec.primal_gap = dist(state.pair.z, state.pair.w);
    rec.dual_norm = norm(state.dual);
    if (truth) {
      rec.dist_to_truth = pair_distance_to_truth(state.pair, truth->x());
      rec.in_basin = in_basin(*truth, state.pair);
    } else {
      rec.dist_to_truth = std::numeric_limits<double>::quiet_NaN();
      rec.in_basin = false;
    }
    res.trace.records.push_back(rec);
  };

  record(0);
  res.status = SolveStatus::MaxIterReached;
  for (long k = 1; k <= cfg.max_iter; ++k) {
    const EstimatePair prev = state.pair;
    state = admm_step_impl(ens, state, rho, update_dual);
    record(k);
    const double step = std::max(dist(state.pair.z, prev.z), dist(state.pair.w, prev.w));
    if (std::max(dist(state.pair.z, state.pair.w), step) <= tol_step) {
      res.status = SolveStatus::Converged;
      break;
    }
  }
  res.final = state.pair;
  res.final_dual = state.dual;
  return res;
}

}  // namespace

AdmmState admm_finite_step(const MeasurementEnsemble& ens, const AdmmState& state,
                           const SolverConfig& cfg) {
  cfg.validate();
  const double rho = cfg.resolved_rho(estimate_norm_x_sq(ens));
  return admm_step_impl(ens, state, rho, !cfg.disable_dual_update);
}

SolveResult run_admm_finite(const MeasurementEnsemble& ens, const EstimatePair& start,
                            const SolverConfig& cfg, const GroundTruth* truth) {
  return run_finite(ens, start, cfg, truth, !cfg.disable_dual_update);
}

SolveResult run_bcd_finite(const MeasurementEnsemble& ens, const EstimatePair& start,
                           const SolverConfig& cfg, const GroundTruth* truth) {
  return run_finite(ens, start, cfg, truth, false);
}

CriticalPointReport check_critical_point(const MeasurementEnsemble& ens, const EstimatePair& p,
                                         const Vec& lambda, double tol) {
  const auto [gz, gw] = grad_f_finite(ens, p);
  CriticalPointReport rep;
  rep.tol = tol;
  rep.grad_z_norm = norm(gz);
  rep.grad_w_norm = norm(gw);
  rep.split_norm = dist(p.z, p.w);
  rep.dual_norm = norm(lambda);
  rep.pass = rep.grad_z_norm <= tol && rep.grad_w_norm <= tol && rep.split_norm <= tol &&
             rep.dual_norm <= tol;
  return rep;
}

}  // namespace prsplit
