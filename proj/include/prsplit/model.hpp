#pragma once

#include <span>
#include <utility>
#include <vector>

#include "prsplit/linalg.hpp"
#include "prsplit/random.hpp"

namespace prsplit {

/// The split iterate (z, w).
struct EstimatePair {
  Vec z;
  Vec w;
};

/// Hidden signal and the constants derived from it. Immutable after
/// construction; ||x|| = 0 is rejected because the basin, the
/// strong-convexity modulus and the rate are undefined there.
class GroundTruth {
 public:
  GroundTruth(Vec x, double rho);

  const Vec& x() const { return x_; }
  int dim() const { return static_cast<int>(x_.size()); }
  double norm_x() const { return norm_x_; }
  double norm_x_sq() const { return norm_x_ * norm_x_; }
  double rho() const { return rho_; }
  /// Strong-convexity modulus ||x||^2 / 3.
  double sigma() const { return norm_x_sq() / 3.0; }
  /// Per-block gradient Lipschitz constant 4 ||x||^2 + rho.
  double block_lipschitz() const { return 4.0 * norm_x_sq() + rho_; }

 private:
  Vec x_;
  double norm_x_;
  double rho_;
};

/// m Gaussian measurement rows a_k with magnitudes y_k, stored flat.
class MeasurementEnsemble {
 public:
  MeasurementEnsemble(int m, int n);

  int m() const { return m_; }
  int n() const { return n_; }
  std::span<const double> row(int k) const { return {&a_[static_cast<std::size_t>(k) * n_], static_cast<std::size_t>(n_)}; }
  std::span<double> row(int k) { return {&a_[static_cast<std::size_t>(k) * n_], static_cast<std::size_t>(n_)}; }
  double y(int k) const { return y_[k]; }
  double& y(int k) { return y_[k]; }
  const Vec& magnitudes() const { return y_; }

 private:
  int m_;
  int n_;
  std::vector<double> a_;
  Vec y_;
};

/// Fresh ensemble with i.i.d. standard Gaussian rows and y_k = |a_k . x|.
MeasurementEnsemble generate_ensemble(const GroundTruth& truth, int m, RandomStream& stream);

/// Ensemble with prescribed rows; magnitudes are derived from x.
MeasurementEnsemble ensemble_from_rows(const Vec& x, const std::vector<Vec>& rows);

/// Finite-sample objective (1/4m) sum_k (y_k^2 - a_k.z a_k.w)^2.
double f_finite(const MeasurementEnsemble& ens, const EstimatePair& p);

/// Both partial gradients of f: d_z f = (1/2m) sum a.w (a.z a.w - y^2) a and
/// the z<->w mirror.
std::pair<Vec, Vec> grad_f_finite(const MeasurementEnsemble& ens, const EstimatePair& p);

/// Closed-form expected objective
/// (3/2)||x||^4 + (w.z)^2 + (1/2)||z||^2||w||^2 - 2 x.z x.w - ||x||^2 w.z
///   + (rho/2)||z - w||^2.
double g_expected(const GroundTruth& truth, const EstimatePair& p);

/// Analytic gradient of g: grad_z = 2 w.z w + ||w||^2 z - 2 x.w x - ||x||^2 w
/// + rho (z - w), and the z<->w mirror for grad_w.
std::pair<Vec, Vec> grad_g(const GroundTruth& truth, const EstimatePair& p);

/// Quadratic form of g's curvature in the direction (h_z, h_w). Equals the
/// t^2 Taylor coefficient of t -> g(z + t h_z, w + t h_w).
double hessian_quadratic_form(const GroundTruth& truth, const EstimatePair& p,
                              const Vec& h_z, const Vec& h_w);

/// 2n x 2n symmetric matrix H with h^T H h == hessian_quadratic_form(p, h).
SymMat assemble_hessian(const GroundTruth& truth, const EstimatePair& p);

/// Membership in N_x: both blocks within ||x||/8 of x, boundary inclusive.
bool in_basin(const GroundTruth& truth, const EstimatePair& p);

}  // namespace prsplit
