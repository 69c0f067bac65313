#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "prsplit/errors.hpp"

namespace prsplit {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
inline double norm_sq(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& a, double s);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dist(const Vec& a, const Vec& b);
Vec zeros(int n);

/// Neumaier-compensated accumulator for long residual sums.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// Dense symmetric matrix, full row-major storage. Writes keep both triangles
/// in sync, so the symmetry invariant holds by construction.
class SymMat {
 public:
  explicit SymMat(int n);

  int size() const { return n_; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  /// Sets entries (i,j) and (j,i).
  void set(int i, int j, double v);
  /// Adds v to entries (i,j) and (j,i); the diagonal receives v once.
  void add_sym(int i, int j, double v);
  /// M += w * v v^T
  void add_outer(double w, std::span<const double> v);
  void add_diag(double w);

  Vec apply(std::span<const double> v) const;
  double frobenius_norm() const;

  static SymMat identity(int n);

 private:
  int n_;
  std::vector<double> a_;
};

struct EigenPair {
  double value = 0.0;
  Vec vector;
};

/// Solves M z = b for symmetric positive definite M by Cholesky factorization.
/// Throws NotPositiveDefinite on a nonpositive pivot.
Vec spd_solve(const SymMat& m, const Vec& b);

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix, by power
/// iteration on M + ||M||_F I (the shift keeps the iteration sign-stable).
/// Stops when ||Mv - lambda v|| <= tol * ||M||_F.
EigenPair top_eigenpair(const SymMat& m, double tol = 1e-12, long max_iter = 100000);

/// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi sweeps,
/// converged when the off-diagonal mass falls below tol * ||M||_F.
double min_eigenvalue(const SymMat& m, double tol = 1e-12, int max_sweeps = 100);

}  // namespace prsplit
