#include "prsplit/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

#include "prsplit/random.hpp"

namespace prsplit {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("add: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("sub: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scaled(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dist(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dist: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vec zeros(int n) { return Vec(static_cast<std::size_t>(n), 0.0); }

SymMat::SymMat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
  if (n < 1) throw DimensionMismatch("SymMat: n must be >= 1");
}

void SymMat::set(int i, int j, double v) {
  a_[static_cast<std::size_t>(i) * n_ + j] = v;
  a_[static_cast<std::size_t>(j) * n_ + i] = v;
}

void SymMat::add_sym(int i, int j, double v) {
  a_[static_cast<std::size_t>(i) * n_ + j] += v;
  if (i != j) a_[static_cast<std::size_t>(j) * n_ + i] += v;
}

void SymMat::add_outer(double w, std::span<const double> v) {
  if (static_cast<int>(v.size()) != n_) throw DimensionMismatch("add_outer: size mismatch");
  for (int i = 0; i < n_; ++i) {
    const double wi = w * v[i];
    double* row = &a_[static_cast<std::size_t>(i) * n_];
    for (int j = 0; j < n_; ++j) row[j] += wi * v[j];
  }
}

void SymMat::add_diag(double w) {
  for (int i = 0; i < n_; ++i) a_[static_cast<std::size_t>(i) * n_ + i] += w;
}

Vec SymMat::apply(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != n_) throw DimensionMismatch("apply: size mismatch");
  Vec r(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const double* row = &a_[static_cast<std::size_t>(i) * n_];
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += row[j] * v[j];
    r[i] = s;
  }
  return r;
}

double SymMat::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

SymMat SymMat::identity(int n) {
  SymMat m(n);
  m.add_diag(1.0);
  return m;
}

Vec spd_solve(const SymMat& m, const Vec& b) {
  const int n = m.size();
  if (static_cast<int>(b.size()) != n) throw DimensionMismatch("spd_solve: size mismatch");

  // Lower Cholesky factor, packed row-major.
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i) * n + k] * l[static_cast<std::size_t>(j) * n + k];
      if (i == j) {
        if (!(s > 0.0)) {
          throw NotPositiveDefinite("spd_solve: nonpositive pivot at index " + std::to_string(i));
        }
        l[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i) * n + j] = s / l[static_cast<std::size_t>(j) * n + j];
      }
    }
  }

  // L y = b, then L^T z = y.
  Vec z(b);
  for (int i = 0; i < n; ++i) {
    double s = z[i];
    for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i) * n + k] * z[k];
    z[i] = s / l[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (int k = i + 1; k < n; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * z[k];
    z[i] = s / l[static_cast<std::size_t>(i) * n + i];
  }
  return z;
}

namespace {

// Deterministic pseudo-random unit start vector so the iteration cannot be
// systematically orthogonal to the top eigenspace.
Vec power_iteration_start(int n) {
  RandomStream stream(0x7077657269746572ULL, 0);  // fixed internal stream
  Vec v = gaussian_vector(stream, n);
  const double nv = norm(v);
  for (auto& x : v) x /= nv;
  return v;
}

}  // namespace

EigenPair top_eigenpair(const SymMat& m, double tol, long max_iter) {
  const int n = m.size();
  const double scale = m.frobenius_norm();
  Vec v = power_iteration_start(n);
  if (scale == 0.0) return {0.0, v};  // zero matrix: everything is an eigenvector

  for (long it = 0; it <= max_iter; ++it) {
    Vec mv = m.apply(v);
    const double lambda = dot(mv, v);
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = mv[i] - lambda * v[i];
      resid += r * r;
    }
    if (std::sqrt(resid) <= tol * scale) return {lambda, v};
    // Shifted step: (M + scale I) v, renormalized. The shift makes the
    // spectrum nonnegative so the dominant eigenvalue is the algebraic top.
    for (int i = 0; i < n; ++i) mv[i] += scale * v[i];
    const double nm = norm(mv);
    if (nm == 0.0) {
      // v spans the -scale eigenspace exactly; restart off it.
      v = power_iteration_start(n);
      continue;
    }
    for (int i = 0; i < n; ++i) v[i] = mv[i] / nm;
  }
  throw NoConvergence("top_eigenpair: power iteration did not converge", max_iter);
}

double min_eigenvalue(const SymMat& m, double tol, int max_sweeps) {
  const int n = m.size();
  const double scale = m.frobenius_norm();
  if (scale == 0.0) return 0.0;

  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = m(i, j);
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * at(p, q) * at(p, q);
    if (std::sqrt(off) <= tol * scale) {
      double lo = at(0, 0);
      for (int i = 1; i < n; ++i) lo = std::min(lo, at(i, i));
      return lo;
    }
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double tau = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double app = at(p, p), aqq = at(q, q);
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = at(i, p), aiq = at(i, q);
          at(i, p) = c * aip - s * aiq;
          at(p, i) = at(i, p);
          at(i, q) = s * aip + c * aiq;
          at(q, i) = at(i, q);
        }
      }
    }
  }
  throw NoConvergence("min_eigenvalue: Jacobi sweeps did not converge", max_sweeps);
}

}  // namespace prsplit
