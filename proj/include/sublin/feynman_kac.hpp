#pragma once

// Potential-perturbed generators L - diag(V): resolvents, the spectral-radius
// identity r(G^V_alpha) = 1/(alpha - s(L-V)), strict monotonicity of the
// spectral bound in V, the zero-mode identity s(L + f(.,u)/u) = 0 satisfied
// by every solution, and the uniqueness test under strictly decreasing
// f(.,y)/y.

#include "sublin/core.hpp"
#include "sublin/generator.hpp"
#include "sublin/nonlinearity.hpp"
#include "sublin/solver.hpp"
#include "sublin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sublin {

// ---------------------------------------------------------------------------
// Perturbed operator
// ---------------------------------------------------------------------------

struct PerturbedOperator {
  GeneratorModel base;
  Potential V;
  Matrix op;  // L - diag(V); off-diagonals equal those of L
  double spectral_bound = 0.0;
};

inline PerturbedOperator perturb(const GeneratorModel& base, const Potential& V) {
  if (!V.all_finite()) throw Error("perturbing potential must be finite");
  if (V.n() != base.n()) throw Error("potential size mismatch");
  PerturbedOperator p;
  p.base = base;
  p.V = V;
  p.op = base.L;
  for (int i = 0; i < base.n(); ++i) p.op(i, i) -= V.values[i];
  p.spectral_bound = detail::metzler_spectral_bound(p.op, base.irreducible);
  return p;
}

// (alpha I - L + diag(V))^{-1}; entrywise >= 0, strictly positive when
// irreducible
inline Matrix perturbed_resolvent(const PerturbedOperator& p, double alpha) {
  if (!(alpha > p.spectral_bound)) throw AlphaNotAboveSpectralBound(alpha, p.spectral_bound);
  const int n = static_cast<int>(p.op.rows());
  return (alpha * Matrix::Identity(n, n) - p.op).partialPivLu().solve(Matrix::Identity(n, n));
}

// ---------------------------------------------------------------------------
// Spectral-radius identity
// ---------------------------------------------------------------------------

struct RadiusIdentity {
  double lhs = 0.0;  // Perron radius of the perturbed resolvent
  double rhs = 0.0;  // 1 / (alpha - s(L - V))
  double gap = 0.0;
};

namespace detail {

// Perron radius of an entrywise nonnegative matrix by power iteration with
// Collatz-Wielandt enclosure (requires primitivity-like structure; resolvents
// of irreducible generators are strictly positive, so this is safe).
inline double perron_radius(const Matrix& G, double tol = 1e-13, long max_iter = 200000) {
  const int n = static_cast<int>(G.rows());
  if (n == 1) return G(0, 0);
  Vector x = Vector::Ones(n) / static_cast<double>(n);
  for (long iter = 0; iter < max_iter; ++iter) {
    Vector y = G * x;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    x = y / y.template lpNorm<1>();
    if (hi - lo <= tol * std::max(1.0, 0.5 * (hi + lo))) return 0.5 * (hi + lo);
  }
  throw NoConvergence(max_iter, "Perron radius power iteration");
}

}  // namespace detail

// Both sides are computed by separate routes: the left by power iteration on
// the explicit resolvent matrix at the caller's alpha, the right through the
// spectral bound of L - diag(V).
inline RadiusIdentity spectral_radius_identity_check(const PerturbedOperator& p, double alpha) {
  RadiusIdentity out;
  out.lhs = detail::perron_radius(perturbed_resolvent(p, alpha));
  out.rhs = 1.0 / (alpha - p.spectral_bound);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity of the spectral bound in the potential
// ---------------------------------------------------------------------------

// V1 <= V2 with V1 != V2 somewhere forces s(L - V1) > s(L - V2) strictly.
inline bool potential_monotonicity_check(const GeneratorModel& m, const Potential& V1,
                                         const Potential& V2) {
  if (!V1.all_finite() || !V2.all_finite()) throw Error("potentials must be finite");
  bool some_strict = false;
  for (int i = 0; i < m.n(); ++i) {
    if (V1.values[i] > V2.values[i] + 1e-15 * (1.0 + std::abs(V2.values[i])))
      throw PreconditionUnverified("V1 <= V2 entrywise");
    if (V1.values[i] < V2.values[i]) some_strict = true;
  }
  if (!some_strict) throw PreconditionUnverified("V1 != V2 on a set of positive measure");

  const double s1 = perturb(m, V1).spectral_bound;
  const double s2 = perturb(m, V2).spectral_bound;
  const double scale = 1.0 + std::max(std::abs(s1), std::abs(s2));
  return s1 - s2 > 1e-12 * scale;
}

// ---------------------------------------------------------------------------
// Zero mode of an accepted solution
// ---------------------------------------------------------------------------

// Every strictly positive solution u of -L u = f(.,u) is a positive
// eigenvector of L + diag(f(.,u)/u) with eigenvalue 0, so the spectral bound
// vanishes. Returns |s(L + diag(h(.,u)))| and verifies the resolvent
// fixed-point form u = alpha (alpha I - L - diag(h))^{-1} u at alpha in
// {1, 10}.
inline double zero_mode_check(const GeneratorModel& m, const Vector& u, const Nonlinearity& f,
                              double fixed_point_tol = 1e-8) {
  for (int i = 0; i < m.n(); ++i)
    if (!(u[i] > 0.0)) throw PreconditionUnverified("u strictly positive");

  Vector h(m.n());
  for (int i = 0; i < m.n(); ++i) h[i] = f.evaluate(i, u[i]) / u[i];

  Matrix K = m.L;
  for (int i = 0; i < m.n(); ++i) K(i, i) += h[i];
  const double s = detail::metzler_spectral_bound(K, m.irreducible);

  const double scale = 1.0 + u.cwiseAbs().maxCoeff();
  for (double alpha : {1.0, 10.0}) {
    const int n = m.n();
    const Vector v = alpha * (alpha * Matrix::Identity(n, n) - K).partialPivLu().solve(u);
    const double gap = (v - u).cwiseAbs().maxCoeff();
    if (gap > fixed_point_tol * scale)
      throw PreconditionUnverified("u = alpha G^h_alpha u at alpha = " + std::to_string(alpha) +
                                   " (gap " + std::to_string(gap) + ")");
  }
  return std::abs(s);
}

// ---------------------------------------------------------------------------
// Uniqueness
// ---------------------------------------------------------------------------

struct UniquenessVerdict {
  bool unique = false;
  double zero_mode_check = 0.0;  // |s(L + diag(h(., u1)))|
  double branch_gap = 0.0;       // ||u_min - u_max||_p
  Vector potential_V;            // comparison potential when two candidates supplied

  // diagnostics of the contradiction chain for a genuinely distinct pair
  double necp1_residual = 0.0;   // ||w + R(V0 w)||
  double s_L_minus_V0 = 0.0;
  double s_L_plus_h = 0.0;
  std::string broken_link;
};

struct UniquenessOptions {
  double tol = 1e-8;
  int grid_points = 64;
  SolveOptions solve;
};

namespace detail {

// strict decrease of h(i,y) = f(i,y)/y on a log grid spanning the candidate
// bracket; throws MonotonicityNotStrict with the witness knot pair
inline void require_strictly_decreasing_quotient(const Nonlinearity& f, double y_lo, double y_hi,
                                                 int points) {
  y_lo = std::max(y_lo, 1e-12);
  y_hi = std::max(y_hi, 2.0 * y_lo);
  for (int i = 0; i < f.states(); ++i) {
    double prev_y = y_lo;
    double prev_h = f.evaluate(i, prev_y) / prev_y;
    for (int j = 1; j < points; ++j) {
      const double y = y_lo * std::pow(y_hi / y_lo, double(j) / (points - 1));
      const double h = f.evaluate(i, y) / y;
      const double scale = 1.0 + std::abs(prev_h);
      if (!(h - prev_h < -1e-12 * scale))
        throw MonotonicityNotStrict(i, prev_y, y, prev_h, h);
      prev_y = y;
      prev_h = h;
    }
  }
}

}  // namespace detail

// With one candidate: re-solves the minimal branch (ascending iteration from
// the subsolution seeds) and compares it against the supplied maximal-branch
// solution. With two candidates: forms w = u1 - u2 and, when the gap is
// genuine, evaluates the contradiction chain
//
//     w = -R(V0 w),   0 <= s(L - V0) < s(L + h(., u1)) = 0,
//
// reporting which link fails numerically.
inline UniquenessVerdict uniqueness_check(const GeneratorModel& m, const Nonlinearity& f,
                                          const std::vector<Vector>& candidates,
                                          UniquenessOptions opt = {}) {
  if (candidates.empty() || candidates.size() > 2)
    throw Error("uniqueness_check takes one or two candidate solutions");
  for (const auto& u : candidates)
    for (int i = 0; i < m.n(); ++i)
      if (!(u[i] > 0.0)) throw PreconditionUnverified("candidates strictly positive");

  double y_lo = std::numeric_limits<double>::infinity(), y_hi = 0.0;
  for (const auto& u : candidates) {
    y_lo = std::min(y_lo, u.minCoeff());
    y_hi = std::max(y_hi, u.maxCoeff());
  }
  detail::require_strictly_decreasing_quotient(f, 0.5 * y_lo, 2.0 * y_hi, opt.grid_points);

  UniquenessVerdict verdict;
  verdict.zero_mode_check = zero_mode_check(m, candidates.front(), f);

  if (candidates.size() == 1) {
    const PreparedProblem prep = prepare_problem(m, f, opt.solve);
    const Vector u_min = solve_minimal_branch(prep, opt.solve);
    verdict.branch_gap = m.space.norm(candidates[0] - u_min);
    verdict.unique = verdict.branch_gap <= opt.tol * (1.0 + m.space.norm(candidates[0]));
    verdict.potential_V = Vector::Zero(m.n());
    return verdict;
  }

  const Vector& u1 = candidates[0];
  const Vector& u2 = candidates[1];
  const Vector w = u1 - u2;
  verdict.branch_gap = m.space.norm(w);
  const double scale = 1.0 + std::max(m.space.norm(u1), m.space.norm(u2));

  if (verdict.branch_gap <= opt.tol * scale) {
    verdict.unique = true;
    verdict.potential_V = Vector::Zero(m.n());
    return verdict;
  }

  // two genuinely distinct candidates: the theorem's chain must break
  verdict.unique = false;
  Vector h1(m.n()), h2(m.n());
  for (int i = 0; i < m.n(); ++i) {
    h1[i] = f.evaluate(i, u1[i]) / u1[i];
    h2[i] = f.evaluate(i, u2[i]) / u2[i];
  }
  Vector V(m.n());
  for (int i = 0; i < m.n(); ++i)
    V[i] = (w[i] == 0.0) ? 0.0 : -(h1[i] - h2[i]) / w[i] * u2[i];
  verdict.potential_V = V;
  const Vector V0 = V - h1;

  // kappa-shifted picture for the resolvent identity; L_c - (V0 - c) = L - V0
  const double c = std::max(0.0, m.spectral_bound + 0.5);
  GeneratorModel mc = m;
  if (c > 0.0) {
    mc.L -= c * Matrix::Identity(m.n(), m.n());
    mc.spectral_bound -= c;
  }
  const Vector necp1 = w + resolvent_apply(mc, 0.0, (V0.array() - c).matrix().cwiseProduct(w));
  verdict.necp1_residual = m.space.norm(necp1);

  Matrix K1 = m.L, K2 = m.L;
  for (int i = 0; i < m.n(); ++i) {
    K1(i, i) -= V0[i];
    K2(i, i) += h1[i];
  }
  verdict.s_L_minus_V0 = detail::metzler_spectral_bound(K1, m.irreducible);
  verdict.s_L_plus_h = detail::metzler_spectral_bound(K2, m.irreducible);

  if (verdict.necp1_residual > opt.tol * scale)
    verdict.broken_link = "w = -R(V0 w)";
  else if (verdict.s_L_minus_V0 < -opt.tol)
    verdict.broken_link = "s(L - V0) >= 0";
  else if (!(verdict.s_L_minus_V0 < verdict.s_L_plus_h - 1e-14))
    verdict.broken_link = "s(L - V0) < s(L + h(., u1))";
  else
    verdict.broken_link = "s(L + h(., u1)) = 0";
  return verdict;
}

}  // namespace sublin
