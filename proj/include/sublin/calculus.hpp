#pragma once

// Executable finite-dimensional supermedian calculus.
//
// A vector v is supermedian when v >= 0 and T_t v <= v for all t >= 0. At
// finite dimension this is equivalent to the generator sign test
//
//     v >= 0  and  (L v)_i <= 0 for all i,
//
// since d/dt T_t v = T_t L v <= 0 entrywise whenever L v <= 0. The sampled
// resolvent gaps alpha R_alpha v - v <= 0 are kept as redundant evidence;
// both characterizations are exact here and disagreement beyond tolerance
// indicates a bug.

#include "sublin/core.hpp"
#include "sublin/generator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sublin {

// ---------------------------------------------------------------------------
// Supermedian certificate
// ---------------------------------------------------------------------------

struct SupermedianCertificate {
  Vector vector;
  double generator_sign = 0.0;  // max_i (L v)_i
  std::vector<std::pair<double, double>> resolvent_gaps;  // (alpha, max_i (alpha R_alpha v - v)_i)
  bool verdict = false;
};

struct SupermedianOptions {
  // scale-free slack: (Lv)_i <= tol * (1 + ||v||_inf)
  double tol = 1e-10;
  std::vector<double> alphas = {0.1, 1.0, 10.0, 100.0};
};

inline SupermedianCertificate is_supermedian(const GeneratorModel& m, const Vector& v,
                                             SupermedianOptions opt = {}) {
  SupermedianCertificate cert;
  cert.vector = v;
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();
  const double slack = opt.tol * scale * std::max(1.0, m.L.cwiseAbs().maxCoeff());

  bool nonneg = true;
  for (int i = 0; i < m.n(); ++i)
    if (v[i] < -opt.tol * scale) nonneg = false;

  cert.generator_sign = (m.L * v).maxCoeff();

  for (double a : opt.alphas) {
    if (!(a > m.spectral_bound)) continue;
    const Vector gap = a * resolvent_apply(m, a, v) - v;
    cert.resolvent_gaps.emplace_back(a, gap.maxCoeff());
  }

  cert.verdict = nonneg && cert.generator_sign <= slack;
  return cert;
}

// ---------------------------------------------------------------------------
// Scalar C1 profiles (for concave images and convexity defects)
// ---------------------------------------------------------------------------

// value + derivative pair; convexity/concavity is validated by secant-slope
// monotonicity on a sample grid before use
struct C1Function {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

namespace detail {

enum class Shape { Convex, Concave };

inline void validate_shape(const C1Function& phi, Shape shape, double y_max,
                           bool require_nondecreasing = false) {
  const int pts = 128;
  double prev_slope = (shape == Shape::Convex) ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity();
  double prev_y = 0.0, prev_v = phi.value(0.0);
  const double tol = 1e-9 * (1.0 + std::abs(prev_v));
  for (int j = 1; j <= pts; ++j) {
    const double y = y_max * j / pts;
    const double v = phi.value(y);
    const double s = (v - prev_v) / (y - prev_y);
    if (shape == Shape::Convex && s < prev_slope - tol)
      throw Error("profile is not convex on the validation grid");
    if (shape == Shape::Concave && s > prev_slope + tol)
      throw Error("profile is not concave on the validation grid");
    if (require_nondecreasing && v < prev_v - tol)
      throw Error("profile is not nondecreasing on the validation grid");
    prev_slope = s;
    prev_y = y;
    prev_v = v;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Concave images of supermedian vectors
// ---------------------------------------------------------------------------

// For sub-Markovian models, a concave nondecreasing phi with phi(0) >= 0 maps
// supermedian vectors to supermedian vectors. A false verdict on validated
// inputs signals an implementation bug.
inline bool concave_image_check(const GeneratorModel& m, const Vector& v, const C1Function& phi,
                                SupermedianOptions opt = {}) {
  if (!m.sub_markovian) throw NotSubMarkovian();
  if (!is_supermedian(m, v, opt).verdict) throw PreconditionUnverified("v is not supermedian");
  if (phi.value(0.0) < 0.0) throw PreconditionUnverified("phi(0) >= 0");
  detail::validate_shape(phi, detail::Shape::Concave, std::max(1.0, v.maxCoeff()) * 1.5, true);

  Vector w(m.n());
  for (int i = 0; i < m.n(); ++i) w[i] = phi.value(v[i]);
  return is_supermedian(m, w, opt).verdict;
}

// ---------------------------------------------------------------------------
// Kato inequality
// ---------------------------------------------------------------------------

// For sub-Markovian models with s(L) < 0 and supermedian v, w:
//
//     u := R f - w   satisfies   (u - v)^+ <= R(1_{u > v} f)
//
// entrywise, for any (signed) f. slack = right side - left side.
struct KatoResult {
  bool holds = false;
  Vector slack;
  bool ties_detected = false;  // states with u_i == v_i exactly (excluded from the indicator)
};

inline KatoResult kato_check(const GeneratorModel& m, const Vector& v, const Vector& w,
                             const Vector& f, double tol = 1e-12) {
  if (!m.sub_markovian) throw NotSubMarkovian();
  if (!(m.spectral_bound < 0.0)) throw SpectralBoundNotNegative(m.spectral_bound);
  if (!is_supermedian(m, v).verdict) throw PreconditionUnverified("v is not supermedian");
  if (!is_supermedian(m, w).verdict) throw PreconditionUnverified("w is not supermedian");

  const Vector u = resolvent_apply(m, 0.0, f) - w;

  KatoResult out;
  Vector masked(m.n());
  for (int i = 0; i < m.n(); ++i) {
    if (u[i] == v[i]) out.ties_detected = true;
    masked[i] = (u[i] > v[i]) ? f[i] : 0.0;
  }
  const Vector rhs = resolvent_apply(m, 0.0, masked);

  out.slack = Vector(m.n());
  bool ok = true;
  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff() + u.cwiseAbs().maxCoeff();
  for (int i = 0; i < m.n(); ++i) {
    const double lhs = std::max(u[i] - v[i], 0.0);
    out.slack[i] = rhs[i] - lhs;
    if (out.slack[i] < -tol * scale) ok = false;
  }
  out.holds = ok;
  return out;
}

// ---------------------------------------------------------------------------
// Convexity identity
// ---------------------------------------------------------------------------

// For sub-Markovian models with s(L) < 0, g >= 0 and convex C1 phi:
// with u = R g, the defect
//
//     v := phi(0) * 1 + R(phi'(u) g) - phi(u)
//
// is supermedian. Returns its certificate.
inline SupermedianCertificate convexity_identity_defect(const GeneratorModel& m, const Vector& g,
                                                        const C1Function& phi,
                                                        SupermedianOptions opt = {}) {
  if (!m.sub_markovian) throw NotSubMarkovian();
  if (!(m.spectral_bound < 0.0)) throw SpectralBoundNotNegative(m.spectral_bound);
  for (int i = 0; i < m.n(); ++i)
    if (!(g[i] >= 0.0)) throw PreconditionUnverified("g >= 0");

  const Vector u = resolvent_apply(m, 0.0, g);
  detail::validate_shape(phi, detail::Shape::Convex, std::max(1.0, u.maxCoeff()) * 1.5);

  Vector weighted(m.n());
  for (int i = 0; i < m.n(); ++i) weighted[i] = phi.deriv(u[i]) * g[i];
  Vector v = Vector::Constant(m.n(), phi.value(0.0)) + resolvent_apply(m, 0.0, weighted);
  for (int i = 0; i < m.n(); ++i) v[i] -= phi.value(u[i]);

  return is_supermedian(m, v, opt);
}

// ---------------------------------------------------------------------------
// Sub/supersolution records and their algebra
// ---------------------------------------------------------------------------

// Record for w against the fixed-point form u = gamma + R g(.,u):
// the defect is v := gamma + R g(.,w) - w. side=sub iff v is supermedian;
// side=super iff -v is supermedian.
struct SubSupSolutionRecord {
  Vector w;
  Vector gamma;
  std::function<double(int, double)> g;
  Vector defect;
  enum class Side : int8_t { Sub, Super } side = Side::Sub;
  bool verified = false;
};

inline SubSupSolutionRecord make_subsup_record(const GeneratorModel& m, Vector w, Vector gamma,
                                               std::function<double(int, double)> g,
                                               SubSupSolutionRecord::Side side,
                                               SupermedianOptions opt = {}) {
  if (!(m.spectral_bound < 0.0)) throw SpectralBoundNotNegative(m.spectral_bound);
  SubSupSolutionRecord rec;
  rec.w = std::move(w);
  rec.gamma = std::move(gamma);
  rec.g = std::move(g);
  rec.side = side;

  Vector gw(m.n());
  for (int i = 0; i < m.n(); ++i) gw[i] = rec.g(i, rec.w[i]);
  rec.defect = rec.gamma + resolvent_apply(m, 0.0, gw) - rec.w;

  const Vector probe = (side == SubSupSolutionRecord::Side::Sub) ? rec.defect : Vector(-rec.defect);
  rec.verified = is_supermedian(m, probe, opt).verdict;
  return rec;
}

// Proposition-level check: the entrywise maximum of two verified nonnegative
// subsolutions (same gamma and g) is again a subsolution.
inline bool max_subsolution_check(const GeneratorModel& m, const SubSupSolutionRecord& rec1,
                                  const SubSupSolutionRecord& rec2, SupermedianOptions opt = {}) {
  if (!m.sub_markovian) throw NotSubMarkovian();
  if (rec1.side != SubSupSolutionRecord::Side::Sub || rec2.side != SubSupSolutionRecord::Side::Sub)
    throw PreconditionUnverified("both records must be subsolutions");
  if (!rec1.verified || !rec2.verified)
    throw PreconditionUnverified("both records must be verified");
  if ((rec1.gamma - rec2.gamma).cwiseAbs().maxCoeff() > 0.0)
    throw PreconditionUnverified("records must share gamma");
  for (int i = 0; i < m.n(); ++i)
    if (rec1.w[i] < 0.0 || rec2.w[i] < 0.0)
      throw PreconditionUnverified("subsolutions must be nonnegative");

  const Vector vmax = rec1.w.cwiseMax(rec2.w);
  const auto rec = make_subsup_record(m, vmax, rec1.gamma, rec1.g,
                                      SubSupSolutionRecord::Side::Sub, opt);
  return rec.verified;
}

// ---------------------------------------------------------------------------
// Comparison principle
// ---------------------------------------------------------------------------

// Comparison against a maximal solution: if gamma - gamma_low is supermedian,
// g_low(., u_low) <= g(., u_low) pointwise, and u_low <= psi, then
// u_low <= u_max (the maximal solution below psi). Returns the entrywise
// verdict at tolerance 1e-10; throws PreconditionUnverified naming the first
// precondition that fails.
struct ComparisonOuter {
  Vector gamma;
  std::function<double(int, double)> g;
  Vector psi;
  Vector u_max;
};
struct ComparisonInner {
  Vector gamma;
  std::function<double(int, double)> g;
  Vector u;
};

inline bool comparison_check(const GeneratorModel& m, const ComparisonOuter& outer,
                             const ComparisonInner& inner, double tol = 1e-10) {
  if (!m.sub_markovian) throw NotSubMarkovian();

  if (!is_supermedian(m, outer.gamma - inner.gamma).verdict)
    throw PreconditionUnverified("gamma - gamma_low is supermedian");

  const double scale = 1.0 + inner.u.cwiseAbs().maxCoeff();
  for (int i = 0; i < m.n(); ++i) {
    if (inner.g(i, inner.u[i]) > outer.g(i, inner.u[i]) + tol * scale)
      throw PreconditionUnverified("g_low(., u_low) <= g(., u_low)");
    if (inner.u[i] > outer.psi[i] + tol * scale)
      throw PreconditionUnverified("u_low <= psi");
  }

  for (int i = 0; i < m.n(); ++i)
    if (inner.u[i] > outer.u_max[i] + tol * scale) return false;
  return true;
}

}  // namespace sublin
