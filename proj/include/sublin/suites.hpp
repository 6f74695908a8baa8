#pragma once

// Randomized property suites behind the `verify` command: Kato inequality,
// concave images and convexity defects of the supermedian calculus, the
// agreement of the two supermedian characterizations, the spectral-radius
// identity, strict potential monotonicity, zero modes of accepted solutions,
// and Monte Carlo agreement of the stochastic oracle.
//
// Every suite is deterministic for a fixed seed. The fault-injection knob
// corrupts one trial on purpose so the harness can demonstrate that a broken
// identity is actually caught.

#include "sublin/calculus.hpp"
#include "sublin/core.hpp"
#include "sublin/feynman_kac.hpp"
#include "sublin/generator.hpp"
#include "sublin/solver.hpp"
#include "sublin/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sublin::suites {

struct SuiteResult {
  std::string name;
  long trials = 0;
  long failures = 0;
  double worst = 0.0;  // worst violation observed (suite-specific scale)
  std::string note;

  bool pass() const { return failures == 0; }
};

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

// Irreducible sub-Markovian generator with strictly negative spectral bound:
// a rate ring guarantees strong connectivity, extra random edges add texture,
// and per-state killing keeps the chain transient.
inline GeneratorModel random_sub_markovian(int n_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(2, std::max(2, n_max));
  std::uniform_real_distribution<double> rate(0.3, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = nd(rng);

  Matrix L = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) L(i, (i + 1) % n) = rate(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && unit(rng) < 0.3) L(i, j) += 0.8 * unit(rng);

  for (int i = 0; i < n; ++i) {
    double kill = 0.05 + 0.5 * unit(rng);
    L(i, i) = -(L.row(i).sum() - L(i, i)) - kill;
  }

  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 + unit(rng);
  return validate_generator(L, MeasureSpace(w));
}

// Irreducible generator with at least one strictly positive row sum, so the
// kappa shift alone cannot reach sub-Markovianity and the Doob route engages.
inline GeneratorModel random_gainy(int n_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(2, std::max(2, n_max));
  std::uniform_real_distribution<double> rate(0.3, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = nd(rng);

  Matrix L = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) L(i, (i + 1) % n) = rate(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && unit(rng) < 0.3) L(i, j) += 0.8 * unit(rng);

  for (int i = 0; i < n; ++i) {
    // mild gains on some rows, killing on others
    const double drift = (unit(rng) < 0.4) ? 0.3 * unit(rng) : -(0.2 + 0.6 * unit(rng));
    L(i, i) = -(L.row(i).sum() - L(i, i)) + drift;
  }
  // state 0 carries a strong gain but also a fast escape edge, which pins the
  // spectral bound well below its row sum: the gap survives any reasonable
  // kappa-shift margin, so these models genuinely need the Doob route
  L(0, 1) += 30.0;
  L(0, 0) = -(L.row(0).sum() - L(0, 0)) + 1.5 + unit(rng);

  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 + unit(rng);
  return validate_generator(L, MeasureSpace(w));
}

// R(g) + c 1 for random g >= 0, c >= 0: supermedian for sub-Markovian models
inline Vector random_supermedian(const GeneratorModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector g(m.n());
  for (int i = 0; i < m.n(); ++i) g[i] = 2.0 * unit(rng);
  Vector v = resolvent_apply(m, 0.0, g);
  if (unit(rng) < 0.5) v.array() += unit(rng);
  return v;
}

// ---------------------------------------------------------------------------
// Calculus suites
// ---------------------------------------------------------------------------

inline SuiteResult kato_suite(long trials, int n_max, uint64_t seed, bool fault_inject = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> signed_val(-3.0, 3.0);
  SuiteResult res;
  res.name = "kato_inequality";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    const Vector v = random_supermedian(m, rng);
    const Vector w = random_supermedian(m, rng);
    Vector f(m.n());
    for (int i = 0; i < m.n(); ++i) f[i] = signed_val(rng);

    if (fault_inject && t == 0) {
      // seeded mutation: flip the sign of the resolvent on the right-hand
      // side; with v = w = 0 and f = 1 the flipped inequality always breaks,
      // so a silent pass here would mean the suite is blind
      const Vector ones = Vector::Ones(m.n());
      const Vector u = resolvent_apply(m, 0.0, ones);
      const Vector rhs = -u;  // sign-flipped R(1_{u>0} 1) = -R(1)
      double min_slack = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m.n(); ++i) min_slack = std::min(min_slack, rhs[i] - std::max(u[i], 0.0));
      if (min_slack < -1e-12) {
        ++res.failures;
        res.worst = std::min(res.worst, min_slack);
        res.note = "fault injection detected (resolvent sign flip)";
      }
      continue;
    }

    const KatoResult kr = kato_check(m, v, w, f);
    const double min_slack = kr.slack.minCoeff();
    res.worst = std::min(res.worst, min_slack);
    if (!kr.holds) ++res.failures;
  }
  return res;
}

inline SuiteResult concave_image_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "concave_image";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    const Vector v = random_supermedian(m, rng);

    C1Function phi;
    switch (static_cast<int>(3.0 * unit(rng))) {
      case 0: {  // truncation y ^ c
        const double c = 0.2 + 2.0 * unit(rng);
        phi.value = [c](double y) { return std::min(y, c); };
        phi.deriv = [c](double y) { return y < c ? 1.0 : 0.0; };
        break;
      }
      case 1: {  // sqrt(y + a) - sqrt(a)
        const double a = 0.01 + unit(rng);
        phi.value = [a](double y) { return std::sqrt(y + a) - std::sqrt(a); };
        phi.deriv = [a](double y) { return 0.5 / std::sqrt(y + a); };
        break;
      }
      default: {  // log(1 + c y) / c
        const double c = 0.2 + 2.0 * unit(rng);
        phi.value = [c](double y) { return std::log1p(c * y) / c; };
        phi.deriv = [c](double y) { return 1.0 / (1.0 + c * y); };
        break;
      }
    }

    if (!concave_image_check(m, v, phi)) ++res.failures;
  }
  return res;
}

inline SuiteResult convexity_defect_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "convexity_defect";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    Vector g(m.n());
    for (int i = 0; i < m.n(); ++i) g[i] = 2.0 * unit(rng);

    C1Function phi;
    switch (static_cast<int>(3.0 * unit(rng))) {
      case 0: {  // convex quadratic
        const double a = 0.2 + unit(rng), b = 2.0 * unit(rng) - 1.0, d = unit(rng);
        phi.value = [a, b, d](double y) { return a * y * y + b * y + d; };
        phi.deriv = [a, b](double y) { return 2.0 * a * y + b; };
        break;
      }
      case 1: {  // Huber-type slope cap of y^2 (C1, convex)
        const double M = 0.5 + 2.0 * unit(rng);
        phi.value = [M](double y) { return y <= M ? y * y : 2.0 * M * (y - M) + M * M; };
        phi.deriv = [M](double y) { return y <= M ? 2.0 * y : 2.0 * M; };
        break;
      }
      default: {  // scaled exponential
        const double a = 0.1 + 0.4 * unit(rng), c = 0.2 + unit(rng);
        phi.value = [a, c](double y) { return c * std::exp(a * y); };
        phi.deriv = [a, c](double y) { return c * a * std::exp(a * y); };
        break;
      }
    }

    const SupermedianCertificate cert = convexity_identity_defect(m, g, phi);
    res.worst = std::max(res.worst, cert.generator_sign);
    if (!cert.verdict) ++res.failures;
  }
  return res;
}

// the generator-sign and sampled-resolvent characterizations must agree on
// every input that is decisively on one side
inline SuiteResult supermedian_agreement_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "supermedian_agreement";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    Vector v;
    if (unit(rng) < 0.5) {
      v = random_supermedian(m, rng);
    } else {
      // generic nonnegative vector, usually not supermedian
      v = Vector(m.n());
      for (int i = 0; i < m.n(); ++i) v[i] = 2.0 * unit(rng);
    }

    const SupermedianCertificate cert = is_supermedian(m, v);
    const double scale = (1.0 + v.cwiseAbs().maxCoeff()) * std::max(1.0, m.L.cwiseAbs().maxCoeff());
    const double slack = 1e-10 * scale;

    double max_gap = -std::numeric_limits<double>::infinity();
    for (const auto& [alpha, gap] : cert.resolvent_gaps) max_gap = std::max(max_gap, gap);
    const bool res_verdict = max_gap <= slack;

    const bool decisive = std::abs(cert.generator_sign) > 10.0 * slack || std::abs(max_gap) > 10.0 * slack;
    if (decisive && ((cert.generator_sign <= slack) != res_verdict)) {
      ++res.failures;
      res.worst = std::max(res.worst, std::abs(cert.generator_sign - max_gap));
    }
  }
  return res;
}

// maximum of two exact subsolutions of u = gamma + R g(.,u) stays a
// subsolution; g(y) = min(y, cap) with w = R(h), defect R(min(w,cap) - h)
inline SuiteResult max_subsolution_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "max_subsolution";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    const double cap = 0.5 + unit(rng);
    auto g = [cap](int, double y) { return std::min(y, cap); };
    const Vector gamma = Vector::Zero(m.n());

    auto make_sub = [&]() {
      for (int attempt = 0; attempt < 40; ++attempt) {
        Vector h(m.n());
        for (int i = 0; i < m.n(); ++i) h[i] = 0.4 * unit(rng);
        const Vector w = resolvent_apply(m, 0.0, h);
        bool ok = true;
        for (int i = 0; i < m.n(); ++i)
          if (std::min(w[i], cap) < h[i]) ok = false;
        if (ok) return make_subsup_record(m, w, gamma, g, SubSupSolutionRecord::Side::Sub);
      }
      throw Error("could not build a random subsolution");
    };

    try {
      const auto rec1 = make_sub();
      const auto rec2 = make_sub();
      if (!rec1.verified || !rec2.verified || !max_subsolution_check(m, rec1, rec2)) ++res.failures;
    } catch (const Error&) {
      ++res.failures;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Perturbation suites
// ---------------------------------------------------------------------------

inline SuiteResult radius_identity_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "radius_identity";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = (t % 3 == 0) ? random_gainy(n_max, rng) : random_sub_markovian(n_max, rng);
    Vector Vv(m.n());
    for (int i = 0; i < m.n(); ++i) Vv[i] = -1.0 + 3.0 * unit(rng);
    const PerturbedOperator p = perturb(m, Potential(Vv));
    const double alpha = p.spectral_bound + 0.1 + 2.0 * unit(rng);

    const RadiusIdentity id = spectral_radius_identity_check(p, alpha);
    const double rel = std::abs(id.lhs * (alpha - p.spectral_bound) - 1.0);
    res.worst = std::max(res.worst, rel);
    if (rel > 1e-9) ++res.failures;
  }
  return res;
}

inline SuiteResult potential_monotonicity_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "potential_monotonicity";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    Vector v1(m.n()), bump = Vector::Zero(m.n());
    for (int i = 0; i < m.n(); ++i) v1[i] = -1.0 + 2.0 * unit(rng);
    if (unit(rng) < 0.5) {
      bump[static_cast<int>(unit(rng) * m.n())] = 0.2 + unit(rng);  // single-state bump
    } else {
      for (int i = 0; i < m.n(); ++i) bump[i] = unit(rng);
      bump[static_cast<int>(unit(rng) * m.n())] += 0.2;
    }
    if (!potential_monotonicity_check(m, Potential(v1), Potential(v1 + bump))) ++res.failures;
  }
  return res;
}

inline SuiteResult zero_mode_suite(long trials, int n_max, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "zero_mode";
  res.trials = trials;

  for (long t = 0; t < trials; ++t) {
    const GeneratorModel m = random_sub_markovian(n_max, rng);
    const double lam = lambda1(m, Potential::zero(m.n()));
    Vector mu(m.n()), beta(m.n());
    for (int i = 0; i < m.n(); ++i) {
      mu[i] = lam + 0.5 + 2.0 * unit(rng);
      beta[i] = 0.5 + unit(rng);
    }
    const Nonlinearity f = Nonlinearity::logistic(mu, beta);
    const SolutionReport rep = solve(m, f);
    if (!rep.u) {
      ++res.failures;
      continue;
    }
    const double z = zero_mode_check(m, *rep.u, f);
    res.worst = std::max(res.worst, z);
    if (z > 1e-7) ++res.failures;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Stochastic oracle agreement
// ---------------------------------------------------------------------------

inline SuiteResult oracle_agreement_suite(long runs, long n_paths, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SuiteResult res;
  res.name = "oracle_agreement";
  res.trials = runs;

  long bad_runs = 0;
  for (long t = 0; t < runs; ++t) {
    const GeneratorModel m = random_sub_markovian(10, rng);
    const int start = static_cast<int>(unit(rng) * m.n());
    Vector g(m.n()), Vv(m.n());
    for (int i = 0; i < m.n(); ++i) {
      g[i] = 0.2 + 2.0 * unit(rng);
      Vv[i] = -0.5 + 1.5 * unit(rng);
    }

    mc::EstimatorOptions opt;
    opt.n_paths = n_paths;
    bool run_ok = true;

    {
      const double alpha = (t % 2 == 0) ? 0.0 : 0.7;
      const auto est = mc::estimate_resolvent_apply(m, g, alpha, start, seed + 1000 + t, opt);
      const double ref = resolvent_apply(m, alpha, g)[start];
      if (std::abs(est.value - ref) > 3.0 * est.std_error) run_ok = false;
    }
    {
      const double tt = 0.5 + unit(rng);
      const auto est = mc::estimate_feynman_kac(m, Vv, g, tt, start, seed + 2000 + t, opt);
      Matrix op = m.L;
      for (int i = 0; i < m.n(); ++i) op(i, i) -= Vv[i];
      const double ref = ((tt * op).exp() * g)(start);
      if (std::abs(est.value - ref) > 3.0 * est.std_error) run_ok = false;
    }

    if (!run_ok) ++bad_runs;
  }
  // statistical acceptance: at most 1% of runs (rounded up) may fall outside
  res.failures = (bad_runs > std::max<long>(1, runs / 100)) ? bad_runs : 0;
  res.worst = static_cast<double>(bad_runs);
  res.note = std::to_string(bad_runs) + " of " + std::to_string(runs) + " runs outside 3 SE";
  return res;
}

}  // namespace sublin::suites
