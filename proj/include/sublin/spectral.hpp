#pragma once

// Principal and dual eigenpairs of -L - diag(a), potential-perturbed
// eigenvalues, and the limit eigenvalues entering the existence criterion.
//
// Sign convention used throughout:
//
//     lambda1(a) := -s(L + diag(a)),
//
// the principal eigenvalue of -L - diag(a). Under this convention
// lambda1 is nonincreasing in a, k |-> lambda1(a0 ^ k) is nonincreasing,
// k |-> lambda1(ainf v (-k)) is nondecreasing, and the constant-shift
// identity lambda1(a + c) = lambda1(a) - c holds exactly.

#include "sublin/core.hpp"
#include "sublin/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace sublin {

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

// Per-state potential; +/-inf markers are carried symbolically and only the
// truncation operations may consume them.
struct Potential {
  enum class Tag : int8_t { Finite, PlusInf, MinusInf };

  Vector values;
  std::vector<Tag> tags;

  Potential() = default;
  explicit Potential(Vector v)
      : values(std::move(v)), tags(static_cast<size_t>(values.size()), Tag::Finite) {}

  static Potential zero(int n) { return Potential(Vector::Zero(n)); }
  static Potential constant(int n, double c) { return Potential(Vector::Constant(n, c)); }
  static Potential plus_inf(int n) {
    Potential a(Vector::Zero(n));
    std::fill(a.tags.begin(), a.tags.end(), Tag::PlusInf);
    return a;
  }
  static Potential minus_inf(int n) {
    Potential a(Vector::Zero(n));
    std::fill(a.tags.begin(), a.tags.end(), Tag::MinusInf);
    return a;
  }

  int n() const { return static_cast<int>(values.size()); }

  bool all_finite() const {
    for (auto t : tags)
      if (t != Tag::Finite) return false;
    return true;
  }
  bool any_plus_inf() const {
    for (auto t : tags)
      if (t == Tag::PlusInf) return true;
    return false;
  }
  bool any_minus_inf() const {
    for (auto t : tags)
      if (t == Tag::MinusInf) return true;
    return false;
  }
  bool all_minus_inf() const {
    for (auto t : tags)
      if (t != Tag::MinusInf) return false;
    return !tags.empty();
  }

  ExtendedReal at(int i) const {
    switch (tags[static_cast<size_t>(i)]) {
      case Tag::PlusInf: return ExtendedReal::plus_inf();
      case Tag::MinusInf: return ExtendedReal::minus_inf();
      default: return ExtendedReal::finite(values[i]);
    }
  }

  // a ^ k (entrywise min); +inf markers collapse to k
  Potential min_with(double k) const {
    Potential r = *this;
    for (int i = 0; i < n(); ++i) {
      switch (tags[static_cast<size_t>(i)]) {
        case Tag::PlusInf:
          r.values[i] = k;
          r.tags[static_cast<size_t>(i)] = Tag::Finite;
          break;
        case Tag::Finite:
          r.values[i] = std::min(values[i], k);
          break;
        case Tag::MinusInf:
          throw Error("min_with cannot consume a -inf marker");
      }
    }
    return r;
  }

  // a v (-k) (entrywise max); -inf markers collapse to -k
  Potential max_with_neg(double k) const {
    Potential r = *this;
    for (int i = 0; i < n(); ++i) {
      switch (tags[static_cast<size_t>(i)]) {
        case Tag::MinusInf:
          r.values[i] = -k;
          r.tags[static_cast<size_t>(i)] = Tag::Finite;
          break;
        case Tag::Finite:
          r.values[i] = std::max(values[i], -k);
          break;
        case Tag::PlusInf:
          throw Error("max_with_neg cannot consume a +inf marker");
      }
    }
    return r;
  }

  // a + c in the extended reals (inf + c = inf)
  Potential plus(double c) const {
    Potential r = *this;
    for (int i = 0; i < n(); ++i)
      if (tags[static_cast<size_t>(i)] == Tag::Finite) r.values[i] += c;
    return r;
  }
};

// ---------------------------------------------------------------------------
// EigenPair
// ---------------------------------------------------------------------------

enum class EigenSide : int8_t { Primal, Dual };

struct EigenPair {
  double eigenvalue = 0.0;  // lambda1(-L - a)
  Vector eigenvector;       // strictly positive, p-norm 1
  EigenSide side = EigenSide::Primal;
  double residual = 0.0;    // ||(-L - diag(a)) v - lambda v||_2, scaled by ||.||_inf of the operator
};

struct EigenOptions {
  double tol = 1e-12;       // residual tolerance, relative to the operator scale
  long max_iter = 100000;
  uint64_t seed = 0;        // seeds the start vector; 0 = deterministic flat start
};

// Principal eigenpair of -L - diag(a) (primal) or of its weighted adjoint
// (dual). The eigenvalue is lambda1(a) = -s(L + diag(a)); the eigenvector is
// strictly positive with p-norm one.
inline EigenPair principal_eigenpair(const GeneratorModel& m, const Potential& a,
                                     EigenSide side = EigenSide::Primal,
                                     EigenOptions opt = {}) {
  if (!m.irreducible) throw NotIrreducible();
  if (!a.all_finite()) throw Error("principal_eigenpair requires a finite potential");
  if (a.n() != m.n()) throw Error("potential size mismatch");

  Matrix K = (side == EigenSide::Primal) ? m.L : adjoint(m);
  for (int i = 0; i < m.n(); ++i) K(i, i) += a.values[i];

  const detail::PerronPair pp = detail::metzler_perron_pair(K, opt.tol, opt.max_iter, opt.seed);

  EigenPair pair;
  pair.side = side;
  pair.eigenvalue = -pp.s;
  pair.eigenvector = pp.v / m.space.norm(pp.v);
  pair.residual = pp.residual;
  for (int i = 0; i < m.n(); ++i) {
    if (!(pair.eigenvector[i] > 0.0)) {
      throw Error("principal eigenvector is not strictly positive at state " + std::to_string(i));
    }
  }
  return pair;
}

// lambda1(a) = -s(L + diag(a))
inline double lambda1(const GeneratorModel& m, const Potential& a, EigenOptions opt = {}) {
  if (!m.irreducible) throw NotIrreducible();
  if (!a.all_finite()) throw Error("lambda1 requires a finite potential");
  Matrix K = m.L;
  for (int i = 0; i < m.n(); ++i) K(i, i) += a.values[i];
  return -detail::metzler_spectral_bound(K, true, opt.tol, opt.max_iter);
}

// ---------------------------------------------------------------------------
// Limit eigenvalues along the truncation schedules
// ---------------------------------------------------------------------------

struct TruncationStep {
  double k;
  double lambda;
};

// Result of a truncation limit: the extended-real value, the trace of the
// schedule, and the certified sign (-1, 0, +1; 0 only when the value is zero
// within the certification margin).
struct LimitEigenvalue {
  ExtendedReal value;
  int sign = 0;
  bool converged = false;
  std::vector<TruncationStep> trace;
};

struct LimitOptions {
  double k0 = 1.0;
  double k_max = double(1 << 20);
  double value_tol = 1e-9;    // plateau detection
  double sign_margin = 1e-6;  // sign certification margin
  bool sign_only = false;     // stop as soon as the sign is certified
  EigenOptions eigen;
};

// lambda1(a0) := inf_k lambda1(a0 ^ k) = lim_k along k = k0 * 2^j.
// The sequence is nonincreasing. A +inf marker at any state forces the limit
// to -inf (the Perron root grows at least linearly with the truncation
// level), which the loop certifies by driving the value below the margin.
inline LimitEigenvalue lambda1_limit_zero(const GeneratorModel& m, const Potential& a0,
                                          LimitOptions opt = {}) {
  if (!m.irreducible) throw NotIrreducible();
  if (a0.any_minus_inf()) throw Error("a0 entries must lie in (-inf, +inf]");

  LimitEigenvalue out;
  const bool divergent = a0.any_plus_inf();
  double finite_cap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < a0.n(); ++i)
    if (a0.tags[static_cast<size_t>(i)] == Potential::Tag::Finite)
      finite_cap = std::max(finite_cap, a0.values[i]);

  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double k = opt.k0; k <= opt.k_max; k *= 2.0) {
    const double lam = lambda1(m, a0.min_with(k), opt.eigen);
    out.trace.push_back({k, lam});

    if (lam < -opt.sign_margin) out.sign = -1;  // nonincreasing: limit <= lam < 0

    if (divergent) {
      if (out.sign == -1) {
        out.value = ExtendedReal::minus_inf();
        out.converged = true;
        return out;
      }
    } else {
      const bool plateau = !std::isnan(prev) && std::abs(lam - prev) < opt.value_tol;
      const bool exact = k >= finite_cap;  // truncation inactive
      if (plateau || exact) {
        out.value = ExtendedReal::finite(lam);
        out.converged = true;
        if (out.sign == 0) out.sign = (lam > opt.sign_margin) ? 1 : (lam < -opt.sign_margin ? -1 : 0);
        return out;
      }
    }
    if (opt.sign_only && out.sign != 0) {
      out.value = divergent ? ExtendedReal::minus_inf() : ExtendedReal::finite(lam);
      out.converged = divergent;
      return out;
    }
    prev = lam;
  }
  // schedule exhausted without a certificate
  out.value = divergent ? ExtendedReal::minus_inf() : ExtendedReal::finite(prev);
  out.converged = false;
  return out;
}

// lambda1(ainf) := sup_k lambda1(ainf v (-k)). The sequence is nondecreasing.
// The limit is +inf exactly when every state carries a -inf marker (then
// ainf v (-k) = -k and lambda1 = -s(L) + k); with any finite entry the limit
// is finite and the loop runs to a plateau.
inline LimitEigenvalue lambda1_limit_infinity(const GeneratorModel& m, const Potential& ainf,
                                              LimitOptions opt = {}) {
  if (!m.irreducible) throw NotIrreducible();
  if (ainf.any_plus_inf()) throw Error("ainf entries must lie in [-inf, +inf)");

  LimitEigenvalue out;
  const bool divergent = ainf.all_minus_inf();
  double finite_floor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ainf.n(); ++i)
    if (ainf.tags[static_cast<size_t>(i)] == Potential::Tag::Finite)
      finite_floor = std::min(finite_floor, ainf.values[i]);

  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double k = opt.k0; k <= opt.k_max; k *= 2.0) {
    const double lam = lambda1(m, ainf.max_with_neg(k), opt.eigen);
    out.trace.push_back({k, lam});

    if (lam > opt.sign_margin) out.sign = 1;  // nondecreasing: limit >= lam > 0

    if (divergent) {
      if (out.sign == 1) {
        out.value = ExtendedReal::plus_inf();
        out.converged = true;
        return out;
      }
    } else {
      const bool plateau = !std::isnan(prev) && std::abs(lam - prev) < opt.value_tol;
      const bool exact = ainf.all_finite() && -k <= finite_floor;  // truncation inactive
      if (plateau || exact) {
        out.value = ExtendedReal::finite(lam);
        out.converged = true;
        if (out.sign == 0) out.sign = (lam > opt.sign_margin) ? 1 : (lam < -opt.sign_margin ? -1 : 0);
        return out;
      }
    }
    if (opt.sign_only && out.sign != 0) {
      out.value = divergent ? ExtendedReal::plus_inf() : ExtendedReal::finite(lam);
      out.converged = divergent;
      return out;
    }
    prev = lam;
  }
  out.value = divergent ? ExtendedReal::plus_inf() : ExtendedReal::finite(prev);
  out.converged = false;
  return out;
}

}  // namespace sublin
