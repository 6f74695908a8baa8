#pragma once

// Ground-state (Doob h-) transform: conjugation of the generator by its
// principal eigenfunction,
//
//     (L^phi)_ij = L_ij * phi_j / phi_i,      mbar_i = m_i * phi_i^p.
//
// Row sums of L^phi all equal s(L) because L^phi 1 = (L phi) / phi = s(L) 1,
// so the transformed model is sub-Markovian whenever s(L) <= 0. Solutions
// transport back as u = phi . v, and the conjugated nonlinearity
// f^phi(x,y) = f(x, phi(x) y) / phi(x) keeps both generalized slopes.

#include "sublin/core.hpp"
#include "sublin/generator.hpp"
#include "sublin/nonlinearity.hpp"
#include "sublin/spectral.hpp"

#include <cmath>

namespace sublin {

struct DoobTransformed {
  GeneratorModel original;
  EigenPair phi1;              // primal principal eigenpair of -L
  GeneratorModel transformed;  // L^phi with measure weights_i * phi_i^p
};

inline DoobTransformed doob_transform(const GeneratorModel& m, EigenOptions opt = {}) {
  if (!m.irreducible) throw NotIrreducible();
  if (m.spectral_bound > 0.0) throw PositiveSpectralBound(m.spectral_bound);

  DoobTransformed out;
  out.original = m;
  out.phi1 = principal_eigenpair(m, Potential::zero(m.n()), EigenSide::Primal, opt);

  const Vector& phi = out.phi1.eigenvector;
  const double cond = phi.maxCoeff() / phi.minCoeff();
  if (cond > 1e12) {
    throw ConditioningError("principal eigenfunction spread " + std::to_string(cond) +
                            " exceeds 1e12; entrywise conjugation would drown in rounding");
  }

  const int n = m.n();
  Matrix Lphi(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Lphi(i, j) = m.L(i, j) * phi[j] / phi[i];

  Vector wbar(n);
  for (int i = 0; i < n; ++i) wbar[i] = m.space.weights[i] * std::pow(phi[i], m.space.p);

  out.transformed.space = MeasureSpace(wbar, m.space.p);
  out.transformed.L = Lphi;
  out.transformed.irreducible = m.irreducible;  // same sparsity pattern
  out.transformed.spectral_bound = m.spectral_bound;  // similarity transform
  out.transformed.sub_markovian = true;  // row sums all equal s(L) <= 0
  return out;
}

// f^phi(i, y) = f(i, phi_i * y) / phi_i; slopes unchanged
inline Nonlinearity transform_nonlinearity(const Nonlinearity& f, const EigenPair& phi1) {
  return Nonlinearity::conjugated(f, phi1.eigenvector);
}

// u = phi . v, verified against the fixed-point form of the original problem
// (which must have s(L) < 0 so R = (-L)^{-1} exists).
inline Vector pull_back_solution(const GeneratorModel& original, const Nonlinearity& f,
                                 const Vector& v, const EigenPair& phi1, double tol = 1e-8) {
  if (!(original.spectral_bound < 0.0)) throw SpectralBoundNotNegative(original.spectral_bound);

  Vector u = phi1.eigenvector.cwiseProduct(v);
  Vector fp(original.n()), fm(original.n());
  for (int i = 0; i < original.n(); ++i) {
    fp[i] = f.fplus(i, u[i]);
    fm[i] = f.fminus(i, u[i]);
  }
  const Vector residual = u + resolvent_apply(original, 0.0, fm) - resolvent_apply(original, 0.0, fp);
  const double r = original.space.norm(residual);
  if (!(r <= tol)) throw ResidualTooLarge(r, tol);
  return u;
}

}  // namespace sublin
