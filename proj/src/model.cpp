#include "prsplit/model.hpp"

#include <cmath>

namespace prsplit {

namespace {

void require_dim(int expected, std::size_t got, const char* what) {
  if (static_cast<std::size_t>(expected) != got) throw DimensionMismatch(what);
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

GroundTruth::GroundTruth(Vec x, double rho) : x_(std::move(x)), rho_(rho) {
  if (x_.empty()) throw InvalidConfig("GroundTruth: dimension must be >= 1");
  if (!all_finite(x_)) throw InvalidConfig("GroundTruth: x must be finite");
  if (!(rho_ >= 0.0)) throw InvalidConfig("GroundTruth: rho must be >= 0");
  norm_x_ = norm(x_);
  if (norm_x_ == 0.0) throw InvalidConfig("GroundTruth: x = 0 is rejected (basin and rate undefined)");
}

MeasurementEnsemble::MeasurementEnsemble(int m, int n)
    : m_(m), n_(n), a_(static_cast<std::size_t>(m) * n, 0.0), y_(static_cast<std::size_t>(m), 0.0) {
  if (m < 1 || n < 1) throw InvalidConfig("MeasurementEnsemble: m and n must be >= 1");
}

MeasurementEnsemble generate_ensemble(const GroundTruth& truth, int m, RandomStream& stream) {
  const int n = truth.dim();
  MeasurementEnsemble ens(m, n);
  for (int k = 0; k < m; ++k) {
    auto row = ens.row(k);
    for (int j = 0; j < n; ++j) row[j] = stream.next_gaussian();
    ens.y(k) = std::abs(dot(row, truth.x()));
  }
  return ens;
}

MeasurementEnsemble ensemble_from_rows(const Vec& x, const std::vector<Vec>& rows) {
  if (rows.empty()) throw InvalidConfig("ensemble_from_rows: need at least one row");
  const int n = static_cast<int>(x.size());
  MeasurementEnsemble ens(static_cast<int>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require_dim(n, rows[k].size(), "ensemble_from_rows: row dimension mismatch");
    auto row = ens.row(static_cast<int>(k));
    for (int j = 0; j < n; ++j) row[j] = rows[k][j];
    ens.y(static_cast<int>(k)) = std::abs(dot(row, x));
  }
  return ens;
}

double f_finite(const MeasurementEnsemble& ens, const EstimatePair& p) {
  require_dim(ens.n(), p.z.size(), "f_finite: z dimension mismatch");
  require_dim(ens.n(), p.w.size(), "f_finite: w dimension mismatch");
  CompensatedSum acc;
  for (int k = 0; k < ens.m(); ++k) {
    const auto a = ens.row(k);
    const double r = ens.y(k) * ens.y(k) - dot(a, p.z) * dot(a, p.w);
    acc.add(r * r);
  }
  return acc.value() / (4.0 * ens.m());
}

std::pair<Vec, Vec> grad_f_finite(const MeasurementEnsemble& ens, const EstimatePair& p) {
  require_dim(ens.n(), p.z.size(), "grad_f_finite: z dimension mismatch");
  require_dim(ens.n(), p.w.size(), "grad_f_finite: w dimension mismatch");
  Vec gz = zeros(ens.n());
  Vec gw = zeros(ens.n());
  for (int k = 0; k < ens.m(); ++k) {
    const auto a = ens.row(k);
    const double s = dot(a, p.z);
    const double t = dot(a, p.w);
    const double r = s * t - ens.y(k) * ens.y(k);
    axpy(t * r, a, gz);
    axpy(s * r, a, gw);
  }
  const double inv = 1.0 / (2.0 * ens.m());
  for (auto& v : gz) v *= inv;
  for (auto& v : gw) v *= inv;
  return {std::move(gz), std::move(gw)};
}

double g_expected(const GroundTruth& truth, const EstimatePair& p) {
  require_dim(truth.dim(), p.z.size(), "g_expected: z dimension mismatch");
  require_dim(truth.dim(), p.w.size(), "g_expected: w dimension mismatch");
  const double nx2 = truth.norm_x_sq();
  const double wz = dot(p.w, p.z);
  const double xz = dot(truth.x(), p.z);
  const double xw = dot(truth.x(), p.w);
  const double nz2 = norm_sq(p.z);
  const double nw2 = norm_sq(p.w);
  double d2 = 0.0;
  for (std::size_t i = 0; i < p.z.size(); ++i) {
    const double d = p.z[i] - p.w[i];
    d2 += d * d;
  }
  return 1.5 * nx2 * nx2 + wz * wz + 0.5 * nz2 * nw2 - 2.0 * xz * xw - nx2 * wz +
         0.5 * truth.rho() * d2;
}

std::pair<Vec, Vec> grad_g(const GroundTruth& truth, const EstimatePair& p) {
  require_dim(truth.dim(), p.z.size(), "grad_g: z dimension mismatch");
  require_dim(truth.dim(), p.w.size(), "grad_g: w dimension mismatch");
  const int n = truth.dim();
  const Vec& x = truth.x();
  const double nx2 = truth.norm_x_sq();
  const double rho = truth.rho();
  const double wz = dot(p.w, p.z);
  const double xz = dot(x, p.z);
  const double xw = dot(x, p.w);
  const double nz2 = norm_sq(p.z);
  const double nw2 = norm_sq(p.w);

  Vec gz(static_cast<std::size_t>(n));
  Vec gw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    gz[i] = 2.0 * wz * p.w[i] + nw2 * p.z[i] - 2.0 * xw * x[i] - nx2 * p.w[i] +
            rho * (p.z[i] - p.w[i]);
    gw[i] = 2.0 * wz * p.z[i] + nz2 * p.w[i] - 2.0 * xz * x[i] - nx2 * p.z[i] -
            rho * (p.z[i] - p.w[i]);
  }
  return {std::move(gz), std::move(gw)};
}

double hessian_quadratic_form(const GroundTruth& truth, const EstimatePair& p,
                              const Vec& h_z, const Vec& h_w) {
  require_dim(truth.dim(), h_z.size(), "hessian_quadratic_form: h_z dimension mismatch");
  require_dim(truth.dim(), h_w.size(), "hessian_quadratic_form: h_w dimension mismatch");
  const Vec& x = truth.x();
  const double nx2 = truth.norm_x_sq();
  const double whz = dot(p.w, h_z);
  const double zhw = dot(p.z, h_w);
  const double zhz = dot(p.z, h_z);
  const double whw = dot(p.w, h_w);
  const double xhz = dot(x, h_z);
  const double xhw = dot(x, h_w);
  const double hwhz = dot(h_w, h_z);
  const double wz = dot(p.w, p.z);
  double hd2 = 0.0;
  for (std::size_t i = 0; i < h_z.size(); ++i) {
    const double d = h_z[i] - h_w[i];
    hd2 += d * d;
  }
  return (whz + zhw) * (whz + zhw) + 2.0 * wz * hwhz + 0.5 * norm_sq(p.z) * norm_sq(h_w) +
         0.5 * norm_sq(p.w) * norm_sq(h_z) + 2.0 * zhz * whw - 2.0 * xhz * xhw - nx2 * hwhz +
         0.5 * truth.rho() * hd2;
}

SymMat assemble_hessian(const GroundTruth& truth, const EstimatePair& p) {
  require_dim(truth.dim(), p.z.size(), "assemble_hessian: z dimension mismatch");
  require_dim(truth.dim(), p.w.size(), "assemble_hessian: w dimension mismatch");
  const int n = truth.dim();
  const Vec& x = truth.x();
  const double rho = truth.rho();
  const double nx2 = truth.norm_x_sq();
  const double wz = dot(p.w, p.z);
  const double nz2 = norm_sq(p.z);
  const double nw2 = norm_sq(p.w);

  SymMat h(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double diag = (i == j) ? 1.0 : 0.0;
      h.set(i, j, p.w[i] * p.w[j] + diag * 0.5 * (nw2 + rho));
      h.set(n + i, n + j, p.z[i] * p.z[j] + diag * 0.5 * (nz2 + rho));
    }
    for (int j = 0; j < n; ++j) {
      const double diag = (i == j) ? 1.0 : 0.0;
      h.set(i, n + j, p.w[i] * p.z[j] + p.z[i] * p.w[j] - x[i] * x[j] +
                          diag * (wz - 0.5 * (nx2 + rho)));
    }
  }
  return h;
}

bool in_basin(const GroundTruth& truth, const EstimatePair& p) {
  if (p.z.size() != static_cast<std::size_t>(truth.dim()) ||
      p.w.size() != static_cast<std::size_t>(truth.dim()))
    return false;
  const double r = truth.norm_x() / 8.0;
  return dist(p.z, truth.x()) <= r && dist(p.w, truth.x()) <= r;
}

}  // namespace prsplit
