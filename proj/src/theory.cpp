#include "prsplit/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace prsplit {

namespace {

constexpr double kNoEscapeFloor = 63.0 / 64.0;
constexpr double kTheoremRhoFactor = 27.0 / 8.0;

std::string describe(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Keeps the k worst (smallest oriented-margin) witnesses, first-seen order on ties.
class WitnessKeeper {
 public:
  void offer(double oriented, std::string text) {
    items_.emplace_back(oriented, std::move(text));
    std::stable_sort(items_.begin(), items_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (items_.size() > 10) items_.resize(10);
  }
  std::vector<std::string> take() {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (auto& it : items_) out.push_back(std::move(it.second));
    return out;
  }

 private:
  std::vector<std::pair<double, std::string>> items_;
};

}  // namespace

bool BasinCoordinates::feasible(double eps) const {
  if (beta < 7.0 / 8.0 - eps || beta > 9.0 / 8.0 + eps) return false;
  return alpha >= basin_alpha_min(beta) - eps && alpha <= 1.0 + eps;
}

double basin_alpha_min(double beta) { return beta / 2.0 + 63.0 / (128.0 * beta); }

Vec sample_unit_vector(RandomStream& stream, int n) {
  for (;;) {
    Vec v = gaussian_vector(stream, n);
    const double nv = norm(v);
    if (nv > 0.0) {
      for (auto& x : v) x /= nv;
      return v;
    }
  }
}

Vec sample_ball_point(RandomStream& stream, const Vec& center, double radius) {
  const int n = static_cast<int>(center.size());
  Vec dir = sample_unit_vector(stream, n);
  const double r = radius * std::pow(stream.next_uniform(), 1.0 / n);
  Vec p = center;
  axpy(r, dir, p);
  return p;
}

EstimatePair sample_basin_point(const GroundTruth& truth, RandomStream& stream) {
  const double r = truth.norm_x() / 8.0;
  return {sample_ball_point(stream, truth.x(), r), sample_ball_point(stream, truth.x(), r)};
}

CertificateReport certify_strong_convexity(const GroundTruth& truth, int samples,
                                           RandomStream& stream) {
  if (truth.rho() < truth.norm_x_sq() * (1.0 - 1e-12))
    throw RhoTooSmall("certify_strong_convexity: requires rho >= ||x||^2");
  if (samples < 1) throw InvalidConfig("certify_strong_convexity: samples must be >= 1");

  const double nx2 = truth.norm_x_sq();
  CertificateReport rep;
  rep.name = "strong_convexity";
  rep.samples_or_grid = samples;
  rep.threshold = nx2 / 3.0;
  rep.slack = 1e-8 * nx2;
  rep.worst_value = std::numeric_limits<double>::infinity();

  WitnessKeeper keeper;
  for (int s = 0; s < samples; ++s) {
    const EstimatePair p = sample_basin_point(truth, stream);
    const double lmin = min_eigenvalue(assemble_hessian(truth, p));
    if (lmin < rep.worst_value) rep.worst_value = lmin;
    keeper.offer(lmin, "sample=" + std::to_string(s) + " lambda_min=" + describe(lmin));
  }
  rep.margin = rep.worst_value - rep.threshold;
  rep.pass = rep.margin >= -rep.slack;
  rep.witnesses = keeper.take();
  return rep;
}

namespace {

// Perturbation with log-uniform norm spanning [1e-6 ||x||, 10 ||x||].
Vec sample_perturbation(RandomStream& stream, int n, double norm_x) {
  Vec dir = sample_unit_vector(stream, n);
  const double exponent = -6.0 + 7.0 * stream.next_uniform();
  const double r = norm_x * std::pow(10.0, exponent);
  for (auto& v : dir) v *= r;
  return dir;
}

}  // namespace

CertificateReport certify_block_lipschitz(const GroundTruth& truth, int samples,
                                          RandomStream& stream) {
  if (samples < 1) throw InvalidConfig("certify_block_lipschitz: samples must be >= 1");
  const double l_block = truth.block_lipschitz();

  CertificateReport rep;
  rep.name = "block_lipschitz";
  rep.samples_or_grid = samples;
  rep.threshold = l_block;
  rep.slack = 1e-10;
  rep.worst_value = 0.0;  // largest ratio seen

  WitnessKeeper keeper;
  for (int s = 0; s < samples; ++s) {
    const EstimatePair p = sample_basin_point(truth, stream);
    const Vec h = sample_perturbation(stream, truth.dim(), truth.norm_x());
    const double hn = norm(h);
    const auto [gz0, gw0] = grad_g(truth, p);
    const auto gz1 = grad_g(truth, {add(p.z, h), p.w}).first;
    const auto gw1 = grad_g(truth, {p.z, add(p.w, h)}).second;
    const double ratio_z = dist(gz1, gz0) / hn;
    const double ratio_w = dist(gw1, gw0) / hn;
    const double ratio = std::max(ratio_z, ratio_w);
    if (ratio > rep.worst_value) rep.worst_value = ratio;
    keeper.offer(l_block - ratio, "sample=" + std::to_string(s) + " ratio=" + describe(ratio) +
                                      " ||h||=" + describe(hn));
  }
  rep.margin = rep.threshold - rep.worst_value;
  rep.pass = rep.margin >= -rep.slack;
  rep.witnesses = keeper.take();
  return rep;
}

CertificateReport certify_descent_inequalities(const GroundTruth& truth, int samples,
                                               RandomStream& stream) {
  if (samples < 1) throw InvalidConfig("certify_descent_inequalities: samples must be >= 1");
  const double l_block = truth.block_lipschitz();

  CertificateReport rep;
  rep.name = "descent_inequality";
  rep.samples_or_grid = samples;
  rep.threshold = 0.0;
  rep.slack = 1e-10;
  rep.worst_value = std::numeric_limits<double>::infinity();  // smallest bound surplus

  WitnessKeeper keeper;
  for (int s = 0; s < samples; ++s) {
    const EstimatePair p = sample_basin_point(truth, stream);
    const Vec h = sample_perturbation(stream, truth.dim(), truth.norm_x());
    const double quad = 0.5 * l_block * norm_sq(h);
    const double g0 = g_expected(truth, p);
    const auto [gz, gw] = grad_g(truth, p);

    const double surplus_z =
        g0 + dot(gz, h) + quad - g_expected(truth, {add(p.z, h), p.w});
    const double surplus_w =
        g0 + dot(gw, h) + quad - g_expected(truth, {p.z, add(p.w, h)});
    const double surplus = std::min(surplus_z, surplus_w);
    if (surplus < rep.worst_value) rep.worst_value = surplus;
    keeper.offer(surplus, "sample=" + std::to_string(s) + " surplus=" + describe(surplus));
  }
  rep.margin = rep.worst_value - rep.threshold;
  rep.pass = rep.margin >= -rep.slack;
  rep.witnesses = keeper.take();
  return rep;
}

double no_escape_h(double alpha, double beta, double c) {
  const double b2 = beta * beta;
  const double a2 = alpha * alpha;
  const double span = 1.0 + c + 2.0 * a2;
  const double cross = 2.0 * span * alpha * beta / (3.0 * b2 + c) +
                       4.0 * alpha * beta * (1.0 - a2) / (b2 + c);
  const double norm2 = b2 * span * span / ((3.0 * b2 + c) * (3.0 * b2 + c)) +
                       4.0 * a2 * b2 * (1.0 - a2) / ((b2 + c) * (b2 + c));
  return cross - norm2;
}

double no_escape_rc_numerator(double alpha, double beta) {
  const double b2 = beta * beta;
  const double b3 = b2 * beta;
  const double b4 = b2 * b2;
  const double a2 = alpha * alpha;
  return 9.0 * alpha * b4 - 9.0 * alpha * b2 + beta + 8.0 * a2 * beta - 3.0 * b3 -
         6.0 * a2 * b3;
}

double no_escape_rc_denominator(double alpha, double beta) {
  const double d = alpha - beta;
  return 3.0 * d * d * (alpha + beta) - (alpha * alpha - 1.0) * (3.0 * alpha - beta);
}

NoEscapeResult no_escape_certificate(double c, double grid_step) {
  if (c < kTheoremRhoFactor - 1e-12)
    throw RhoTooSmall("no_escape_certificate: requires C >= 27/8");
  if (!(grid_step > 0.0) || grid_step > 1e-2)
    throw InvalidConfig("no_escape_certificate: grid step must be in (0, 1e-2]");

  constexpr double kBetaLo = 7.0 / 8.0;
  constexpr double kBetaHi = 9.0 / 8.0;

  // Grid over the feasible region; both alpha endpoints and the beta
  // endpoints are always included.
  std::vector<double> betas;
  for (double b = kBetaLo; b < kBetaHi - grid_step / 2.0; b += grid_step) betas.push_back(b);
  betas.push_back(kBetaHi);

  NoEscapeResult out;
  out.h_min.name = "no_escape_h_min";
  out.h_min.threshold = kNoEscapeFloor;
  out.h_min.slack = 1e-9;
  out.h_min.worst_value = std::numeric_limits<double>::infinity();
  out.rc_max.name = "no_escape_rc_max";
  out.rc_max.threshold = kTheoremRhoFactor;
  out.rc_max.slack = 1e-9;
  out.rc_max.worst_value = -std::numeric_limits<double>::infinity();
  out.crosscheck.name = "no_escape_h_crosscheck";
  out.crosscheck.threshold = 1e-10;
  out.crosscheck.slack = 0.0;
  out.crosscheck.worst_value = 0.0;

  WitnessKeeper h_keeper, rc_keeper, cc_keeper;

  // Geometry for the cross-check: an explicit w with the grid coordinates in
  // a small ambient space, pushed through the actual solver step.
  Vec x = zeros(4);
  x[0] = 1.0;
  Vec u = zeros(4);
  u[1] = 1.0;
  const GroundTruth truth(x, c);

  // First pass to size the stride for ~1000 cross-check points.
  long total = 0;
  for (const double beta : betas) {
    const double amin = basin_alpha_min(beta);
    if (amin > 1.0 + 1e-9) continue;
    long count = 1;  // alpha = 1 endpoint
    for (double a = std::min(amin, 1.0); a < 1.0 - grid_step / 2.0; a += grid_step) ++count;
    total += count;
  }
  if (total == 0) throw InfeasibleRegion("no_escape_certificate: empty (alpha, beta) grid");
  const long stride = std::max<long>(1, total / 1000);

  long index = 0;
  long crosschecked = 0;
  for (const double beta : betas) {
    const double amin = basin_alpha_min(beta);
    if (amin > 1.0 + 1e-9) continue;
    std::vector<double> alphas;
    for (double a = std::min(amin, 1.0); a < 1.0 - grid_step / 2.0; a += grid_step)
      alphas.push_back(a);
    alphas.push_back(1.0);

    for (const double alpha : alphas) {
      const double h = no_escape_h(alpha, beta, c);
      if (h < out.h_min.worst_value) out.h_min.worst_value = h;
      h_keeper.offer(h, "alpha=" + describe(alpha) + " beta=" + describe(beta) +
                            " h=" + describe(h));

      const bool singular = std::abs(alpha - 1.0) <= 1e-12 && std::abs(beta - 1.0) <= 1e-12;
      if (!singular) {
        const double den = no_escape_rc_denominator(alpha, beta);
        const double num = no_escape_rc_numerator(alpha, beta);
        if (den <= 0.0) {
          // Falsifies the positivity claim away from (1,1); record as failure.
          out.rc_max.worst_value = std::numeric_limits<double>::infinity();
          rc_keeper.offer(-std::numeric_limits<double>::infinity(),
                          "nonpositive denominator at alpha=" + describe(alpha) +
                              " beta=" + describe(beta));
        } else {
          const double rc = num / den;
          if (rc > out.rc_max.worst_value) out.rc_max.worst_value = rc;
          rc_keeper.offer(-rc, "alpha=" + describe(alpha) + " beta=" + describe(beta) +
                                   " R_C=" + describe(rc));
        }
      }

      if (index % stride == 0) {
        // w = beta (alpha x + sqrt(1 - alpha^2) u), run the real z step.
        const double perp = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
        Vec w = zeros(4);
        w[0] = beta * alpha;
        w[1] = beta * perp;
        const Vec zp = bcd_expected_step_z(truth, w, c);
        const double h_geom = 2.0 * dot(zp, x) - norm_sq(zp);
        const double mismatch = std::abs(h_geom - h) / std::max(1.0, std::abs(h));
        if (mismatch > out.crosscheck.worst_value) out.crosscheck.worst_value = mismatch;
        cc_keeper.offer(-mismatch, "alpha=" + describe(alpha) + " beta=" + describe(beta) +
                                       " |h_alg - h_geom|_rel=" + describe(mismatch));
        ++crosschecked;
      }
      ++index;
    }
  }

  out.h_min.samples_or_grid = index;
  out.h_min.margin = out.h_min.worst_value - out.h_min.threshold;
  out.h_min.pass = out.h_min.margin >= -out.h_min.slack;
  out.h_min.witnesses = h_keeper.take();

  out.rc_max.samples_or_grid = index;
  out.rc_max.margin = out.rc_max.threshold - out.rc_max.worst_value;
  out.rc_max.pass = out.rc_max.margin >= -out.rc_max.slack;
  out.rc_max.witnesses = rc_keeper.take();

  out.crosscheck.samples_or_grid = crosschecked;
  out.crosscheck.margin = out.crosscheck.threshold - out.crosscheck.worst_value;
  out.crosscheck.pass = out.crosscheck.margin >= -out.crosscheck.slack;
  out.crosscheck.witnesses = cc_keeper.take();
  return out;
}

double RateConstants::prefactor_proof(double gap0) const {
  return std::sqrt(std::max(0.0, 2.0 * gap0 / sigma));
}

double RateConstants::prefactor_printed(double gap0) const {
  return std::sqrt(std::max(0.0, 6.0 * gap0 / norm_x));
}

RateConstants rate_constants(const GroundTruth& truth) {
  const double nx2 = truth.norm_x_sq();
  if (truth.rho() < kTheoremRhoFactor * nx2 * (1.0 - 1e-12))
    throw RhoTooSmall("rate_constants: requires rho >= (27/8)||x||^2");
  RateConstants rc;
  rc.sigma = truth.sigma();
  rc.l_block = truth.block_lipschitz();
  rc.norm_x = truth.norm_x();
  rc.contraction = 1.0 - nx2 / (12.0 * nx2 + 3.0 * truth.rho());
  return rc;
}

McEstimate mc_expected_objective(const GroundTruth& truth, const EstimatePair& p, long samples,
                                 RandomStream& stream) {
  if (samples < 1000) throw InvalidConfig("mc_expected_objective: samples must be >= 1000");
  const int n = truth.dim();
  const Vec& x = truth.x();
  Vec a(static_cast<std::size_t>(n));

  // Per-draw integrand: half the squared residual. Its expectation plus the
  // penalty reproduces the closed form of g (the closed form carries twice
  // the plain objective expectation).
  double mean = 0.0, m2 = 0.0;
  for (long k = 1; k <= samples; ++k) {
    for (int i = 0; i < n; ++i) a[i] = stream.next_gaussian();
    const double ax = dot(a, x);
    const double r = ax * ax - dot(a, p.z) * dot(a, p.w);
    const double v = 0.5 * r * r;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  double pen = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = p.z[i] - p.w[i];
    pen += d * d;
  }
  McEstimate est;
  est.mean = mean + 0.5 * truth.rho() * pen;
  const double var = m2 / static_cast<double>(samples - 1);
  est.std_error = std::sqrt(var / static_cast<double>(samples));
  return est;
}

}  // namespace prsplit
