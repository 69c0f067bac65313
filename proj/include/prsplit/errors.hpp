#pragma once

#include <stdexcept>
#include <string>

namespace prsplit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector/matrix sizes disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Cholesky hit a nonpositive pivot: the operator is not SPD
/// (usually a sign that rho <= 0 or the input is corrupted).
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel ran out of iterations (degenerate spectrum etc.).
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, long iterations)
      : Error(what), iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_ = 0;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// rho below the regime a theory operation requires.
class RhoTooSmall : public Error {
 public:
  using Error::Error;
};

class InfeasibleRegion : public Error {
 public:
  using Error::Error;
};

}  // namespace prsplit
