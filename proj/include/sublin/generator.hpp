#pragma once

// Finite-state stand-in for the operator side of the theory: the generator
// matrix L of a positive semigroup e^{tL}, its resolvent (alpha I - L)^{-1},
// the weighted adjoint, and the kappa shift that makes the spectral bound
// strictly negative.
//
// Structural conventions:
//   * off-diagonal entries of L are >= 0 (positivity of e^{tL});
//   * sub-Markovian  <=>  every row sum <= 0;
//   * irreducible    <=>  the positive-entry digraph is strongly connected;
//   * spectral bound s(L) = max real part of the spectrum, attained by a
//     real eigenvalue with strictly positive eigenvector when irreducible.

#include "sublin/core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <vector>

namespace sublin {

namespace detail {

// Entries below this magnitude are treated as structural zeros when building
// the adjacency digraph.
inline constexpr double kStructuralZero = 1e-14;

inline bool strongly_connected(const Matrix& L) {
  const int n = static_cast<int>(L.rows());
  if (n == 1) return true;

  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (j == i || seen[j]) continue;
        const double e = transpose ? L(j, i) : L(i, j);
        if (e > kStructuralZero) {
          seen[j] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == n;
  };

  return reach_all(false) && reach_all(true);
}

inline Vector perron_start(int n, uint64_t seed) {
  if (seed == 0) return Vector::Ones(n) / static_cast<double>(n);
  Vector x(n);
  uint64_t s = seed;
  for (int i = 0; i < n; ++i) {
    s += 0x9e3779b97f4a7c15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    x[i] = 0.5 + static_cast<double>(z >> 11) * 0x1p-53;
  }
  return x / x.sum();
}

struct PerronPair {
  double s = 0.0;       // spectral bound of the Metzler matrix
  Vector v;             // strictly positive eigenvector, l1-normalized
  double residual = 0.0;  // ||Kv - s v||_inf with ||v||_inf = 1
};

// Perron pair of an irreducible Metzler matrix K through resolvent power
// iteration: iterate x <- (alpha I - K)^{-1} x for alpha above s(K). The
// Collatz-Wielandt ratios of each sweep enclose 1/(alpha - s(K)); when the
// sweep converges slowly the shift is refactored toward the certified upper
// bound of s(K) (shift-invert acceleration). Convergence is declared on the
// directly measured eigen-residual of K.
inline PerronPair metzler_perron_pair(const Matrix& K, double tol = 1e-12,
                                      long max_iter = 100000, uint64_t seed = 0) {
  const int n = static_cast<int>(K.rows());
  if (n == 1) return {K(0, 0), Vector::Ones(1), 0.0};

  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  double alpha = 1.0 + std::max(0.0, K.rowwise().sum().maxCoeff());
  double floor_gap = 1e-7 * scale;  // keep alpha - s large enough for stable solves

  Eigen::PartialPivLU<Matrix> lu(alpha * Matrix::Identity(n, n) - K);
  Vector x = perron_start(n, seed);

  long iter = 0;
  while (iter < max_iter) {
    double hi = 0.0;
    for (int batch = 0; batch < 120 && iter < max_iter; ++batch, ++iter) {
      Vector y = lu.solve(x);
      if (!(y.minCoeff() > 0.0)) {  // shift overshot the bound; back off
        alpha += 2.0 * floor_gap;
        lu.compute(alpha * Matrix::Identity(n, n) - K);
        x = perron_start(n, seed);
        break;
      }
      double lo = std::numeric_limits<double>::infinity();
      hi = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = y[i] / x[i];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      x = y / y.template lpNorm<1>();

      // residual-minimizing eigenvalue estimate for the current vector
      const Vector Kx = K * x;
      const double s_est = x.dot(Kx) / x.dot(x);
      const double res = (Kx - s_est * x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
      if (res <= tol * scale) {
        // certified enclosure sanity: s_est within [alpha - 1/lo, alpha - 1/hi]
        return {s_est, x, res};
      }
    }
    // move the shift toward the certified upper bound s_ub = alpha - 1/hi
    if (hi > 0.0) {
      const double s_ub = alpha - 1.0 / hi;
      const double new_alpha = s_ub + std::max(floor_gap, 0.02 * (alpha - s_ub));
      if (new_alpha < alpha) {
        alpha = new_alpha;
        lu.compute(alpha * Matrix::Identity(n, n) - K);
      }
    }
  }
  throw NoConvergence(max_iter, "Perron power iteration");
}

// Spectral bound of a Metzler matrix. `irreducible` selects the certified
// resolvent power iteration; otherwise a dense eigensolver is used (the
// Perron root may be defective and the ratio bounds unreliable).
inline double metzler_spectral_bound(const Matrix& M, bool irreducible,
                                     double tol = 1e-12, long max_iter = 100000) {
  const int n = static_cast<int>(M.rows());
  if (n == 1) return M(0, 0);

  if (!irreducible) {
    Eigen::EigenSolver<Matrix> es(M);
    double s = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) s = std::max(s, es.eigenvalues()[i].real());
    return s;
  }
  return metzler_perron_pair(M, tol, max_iter).s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GeneratorModel
// ---------------------------------------------------------------------------

struct GeneratorModel {
  MeasureSpace space;
  Matrix L;
  bool sub_markovian = false;
  bool irreducible = false;
  double spectral_bound = 0.0;

  int n() const { return space.n; }
};

// Validates L against the standing structural hypotheses and caches the
// structural flags. Non-irreducible matrices are rejected; callers that want
// degraded mode pass allow_degraded = true and get a tagged model on which
// positivity-dependent operations refuse to run.
inline GeneratorModel validate_generator(const Matrix& L, const MeasureSpace& space,
                                         bool allow_degraded = false) {
  space.validate();
  if (L.rows() != L.cols()) throw Error("generator matrix must be square");
  if (L.rows() != space.n) throw Error("generator dimensions do not match the measure space");

  const int n = space.n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && L(i, j) < -detail::kStructuralZero) {
        throw NegativeOffDiagonal(i, j, L(i, j));
      }
    }
  }

  GeneratorModel m;
  m.space = space;
  m.L = L;
  // clamp structural-zero noise on the off-diagonals
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && m.L(i, j) < 0.0) m.L(i, j) = 0.0;

  m.sub_markovian = (m.L.rowwise().sum().maxCoeff() <= detail::kStructuralZero * std::max(1.0, m.L.cwiseAbs().maxCoeff()));
  m.irreducible = detail::strongly_connected(m.L);
  if (!m.irreducible && !allow_degraded) throw NotIrreducible();
  m.spectral_bound = detail::metzler_spectral_bound(m.L, m.irreducible);
  return m;
}

// ---------------------------------------------------------------------------
// Resolvent, semigroup, adjoint
// ---------------------------------------------------------------------------

// (alpha I - L)^{-1}; entrywise >= 0 for alpha > s(L), strictly positive when
// irreducible (positivity improving).
inline Matrix resolvent(const GeneratorModel& m, double alpha) {
  if (!(alpha > m.spectral_bound)) throw AlphaNotAboveSpectralBound(alpha, m.spectral_bound);
  const int n = m.n();
  return (alpha * Matrix::Identity(n, n) - m.L).partialPivLu().solve(Matrix::Identity(n, n));
}

// resolvent applied to a single vector (one LU solve)
inline Vector resolvent_apply(const GeneratorModel& m, double alpha, const Vector& g) {
  if (!(alpha > m.spectral_bound)) throw AlphaNotAboveSpectralBound(alpha, m.spectral_bound);
  const int n = m.n();
  return (alpha * Matrix::Identity(n, n) - m.L).partialPivLu().solve(g);
}

namespace detail {

// Uniformization: e^{tL} = e^{-Lambda t} sum_j (Lambda t)^j / j! P^j with
// P = I + L / Lambda. Every term is entrywise nonnegative, so nonnegativity
// of the result is exact. Large Lambda t is handled by square-and-scale,
// which also preserves nonnegativity.
inline Matrix expm_uniformization(const Matrix& L, double t) {
  const int n = static_cast<int>(L.rows());
  double lambda = 0.0;
  for (int i = 0; i < n; ++i) lambda = std::max(lambda, -L(i, i));
  if (lambda * t <= detail::kStructuralZero) return Matrix::Identity(n, n);

  int squarings = 0;
  double tau = t;
  while (lambda * tau > 1.0) {
    tau *= 0.5;
    ++squarings;
  }

  const Matrix P = Matrix::Identity(n, n) + L / lambda;
  const double a = lambda * tau;
  Matrix term = std::exp(-a) * Matrix::Identity(n, n);
  Matrix sum = term;
  for (int j = 1; j < 64; ++j) {
    term = (term * P) * (a / j);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace detail

// e^{tL}. Uniformization for sub-Markovian models (exact nonnegativity),
// scaling-and-squaring Pade otherwise.
inline Matrix semigroup(const GeneratorModel& m, double t) {
  if (!(t >= 0.0)) throw Error("semigroup time must be nonnegative");
  if (t == 0.0) return Matrix::Identity(m.n(), m.n());
  if (m.sub_markovian) return detail::expm_uniformization(m.L, t);
  return (t * m.L).exp();
}

// Adjoint with respect to the weighted pairing <u,v> = sum u_i v_i w_i:
// (L*)_ij = w_j L_ji / w_i. The adjoint of the adjoint is L.
inline Matrix adjoint(const GeneratorModel& m) {
  const int n = m.n();
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      A(i, j) = m.space.weights[j] * m.L(j, i) / m.space.weights[i];
  return A;
}

// ---------------------------------------------------------------------------
// Kappa shift
// ---------------------------------------------------------------------------

// L - kappa I with kappa = max(0, s(L) + margin), so the shifted spectral
// bound is <= -margin. Solution sets of the original and shifted semilinear
// problems coincide once the nonlinearity picks up the matching +kappa*y term.
struct ShiftedProblem {
  GeneratorModel base;
  double kappa = 0.0;
  GeneratorModel shifted;

  const Matrix& shifted_L() const { return shifted.L; }
};

inline ShiftedProblem shift_to_negative_bound(const GeneratorModel& m, double margin) {
  if (!(margin > 0.0)) throw Error("shift margin must be strictly positive");
  ShiftedProblem sp;
  sp.base = m;
  sp.kappa = std::max(0.0, m.spectral_bound + margin);
  sp.shifted = m;
  if (sp.kappa > 0.0) {
    sp.shifted.L = m.L - sp.kappa * Matrix::Identity(m.n(), m.n());
    sp.shifted.spectral_bound = m.spectral_bound - sp.kappa;
    // row sums decrease by kappa; the shift need not reach sub-Markovianity
    // (that is what the Doob transform is for), so recompute the flag
    sp.shifted.sub_markovian =
        (sp.shifted.L.rowwise().sum().maxCoeff() <=
         detail::kStructuralZero * std::max(1.0, sp.shifted.L.cwiseAbs().maxCoeff()));
  }
  return sp;
}

}  // namespace sublin
