#pragma once

// Core value types shared by every module: dense vector/matrix aliases,
// the weighted measure space, extended reals, and the error hierarchy.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace sublin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeOffDiagonal : public Error {
 public:
  NegativeOffDiagonal(int i, int j, double value)
      : Error("negative off-diagonal entry L(" + std::to_string(i) + "," +
              std::to_string(j) + ") = " + std::to_string(value)),
        i(i), j(j), value(value) {}
  int i, j;
  double value;
};

class NotIrreducible : public Error {
 public:
  NotIrreducible() : Error("generator is not irreducible") {}
  explicit NotIrreducible(const std::string& what) : Error(what) {}
};

class AlphaNotAboveSpectralBound : public Error {
 public:
  AlphaNotAboveSpectralBound(double alpha, double bound)
      : Error("alpha = " + std::to_string(alpha) +
              " is not above the spectral bound " + std::to_string(bound)),
        alpha(alpha), bound(bound) {}
  double alpha, bound;
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(long iterations, const std::string& where = "iteration")
      : Error(where + " failed to converge after " + std::to_string(iterations) +
              " iterations"),
        iterations(iterations) {}
  long iterations;
};

class SpectralBoundNotNegative : public Error {
 public:
  explicit SpectralBoundNotNegative(double bound)
      : Error("spectral bound " + std::to_string(bound) + " is not negative"),
        bound(bound) {}
  double bound;
};

class PositiveSpectralBound : public Error {
 public:
  explicit PositiveSpectralBound(double bound)
      : Error("spectral bound " + std::to_string(bound) +
              " is positive; shift the generator first"),
        bound(bound) {}
  double bound;
};

class NotSubMarkovian : public Error {
 public:
  NotSubMarkovian() : Error("generator is not sub-Markovian") {}
};

class NegativeArgument : public Error {
 public:
  explicit NegativeArgument(double y)
      : Error("nonlinearity evaluated at negative argument y = " + std::to_string(y)),
        y(y) {}
  double y;
};

class MissingF3Certificate : public Error {
 public:
  explicit MissingF3Certificate(double delta)
      : Error("no lower-slope certificate available for delta = " + std::to_string(delta)),
        delta(delta) {}
  double delta;
};

class BracketInvalid : public Error {
 public:
  explicit BracketInvalid(const std::string& what) : Error(what) {}
};

class ResidualTooLarge : public Error {
 public:
  ResidualTooLarge(double residual, double tolerance)
      : Error("residual " + std::to_string(residual) + " exceeds tolerance " +
              std::to_string(tolerance)),
        residual(residual), tolerance(tolerance) {}
  double residual, tolerance;
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what) : Error(what) {}
};

class MonotonicityNotStrict : public Error {
 public:
  MonotonicityNotStrict(int state, double y1, double y2, double h1, double h2)
      : Error("f(x,y)/y is not strictly decreasing at state " + std::to_string(state) +
              ": h(" + std::to_string(y1) + ") = " + std::to_string(h1) +
              ", h(" + std::to_string(y2) + ") = " + std::to_string(h2)),
        state(state), y1(y1), y2(y2), h1(h1), h2(h2) {}
  int state;
  double y1, y2, h1, h2;
};

class PreconditionUnverified : public Error {
 public:
  explicit PreconditionUnverified(const std::string& which)
      : Error("precondition not verified: " + which), which(which) {}
  std::string which;
};

class CriterionFailed : public Error {
 public:
  explicit CriterionFailed(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Extended reals
// ---------------------------------------------------------------------------

// Tagged extended real; +/-inf never enter linear algebra as floating values.
struct ExtendedReal {
  enum class Kind : int8_t { Finite, PlusInf, MinusInf };

  Kind kind = Kind::Finite;
  double value = 0.0;

  static ExtendedReal finite(double x) { return {Kind::Finite, x}; }
  static ExtendedReal plus_inf() { return {Kind::PlusInf, 0.0}; }
  static ExtendedReal minus_inf() { return {Kind::MinusInf, 0.0}; }

  bool is_finite() const { return kind == Kind::Finite; }
  bool is_plus_inf() const { return kind == Kind::PlusInf; }
  bool is_minus_inf() const { return kind == Kind::MinusInf; }

  // strict sign in the extended order
  bool strictly_negative() const {
    return kind == Kind::MinusInf || (kind == Kind::Finite && value < 0.0);
  }
  bool strictly_positive() const {
    return kind == Kind::PlusInf || (kind == Kind::Finite && value > 0.0);
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.kind != b.kind) return false;
    return a.kind != Kind::Finite || a.value == b.value;
  }

  std::string str() const {
    switch (kind) {
      case Kind::PlusInf: return "+inf";
      case Kind::MinusInf: return "-inf";
      default: return std::to_string(value);
    }
  }
};

// ---------------------------------------------------------------------------
// Measure space
// ---------------------------------------------------------------------------

// Finite state space {0,..,n-1} with strictly positive measure weights and the
// norm exponent p. The duality pairing is fixed to the weighted inner product
// <u,v> = sum_i u_i v_i w_i; only norms are p-parametric.
struct MeasureSpace {
  int n = 0;
  Vector weights;
  double p = 2.0;

  MeasureSpace() = default;
  MeasureSpace(Vector w, double p_ = 2.0) : n(static_cast<int>(w.size())), weights(std::move(w)), p(p_) {
    validate();
  }

  static MeasureSpace uniform(int n, double p = 2.0) {
    return MeasureSpace(Vector::Ones(n), p);
  }

  void validate() const {
    if (n < 1) throw Error("measure space needs at least one state");
    if (p < 1.0) throw Error("norm exponent p must be >= 1");
    for (int i = 0; i < n; ++i) {
      if (!(weights[i] > 0.0)) {
        throw Error("measure weight at state " + std::to_string(i) + " must be strictly positive");
      }
    }
  }

  double total_mass() const { return weights.sum(); }

  // weighted p-norm
  double norm(const Vector& u) const {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += weights[i] * std::pow(std::abs(u[i]), p);
    return std::pow(acc, 1.0 / p);
  }

  // fixed weighted pairing <u,v> = sum u_i v_i w_i
  double pairing(const Vector& u, const Vector& v) const {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += u[i] * v[i] * weights[i];
    return acc;
  }
};

}  // namespace sublin
