#pragma once

// Command drivers shared by the command-line tool and the test suite.
//
// Exit-code contract (stable):
//   0  success
//   1  parse or generator-structure error
//   2  hypothesis (F1)-(F3) failure
//   3  existence criterion not satisfied
//   4  convergence failure (inner iteration, diverging branch, residual)
//   5  property-suite failure

#include "sublin/core.hpp"
#include "sublin/feynman_kac.hpp"
#include "sublin/generator.hpp"
#include "sublin/io.hpp"
#include "sublin/report.hpp"
#include "sublin/solver.hpp"
#include "sublin/stochastic.hpp"
#include "sublin/suites.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace sublin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 1;
inline constexpr int kExitHypothesis = 2;
inline constexpr int kExitCriterion = 3;
inline constexpr int kExitConvergence = 4;
inline constexpr int kExitSuite = 5;

struct CliResult {
  int exit_code = kExitOk;
  io::RunReport report;
  Vector solution;  // nonempty only for solve
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline io::json certificate_json(const HypothesisCertificate& cert) {
  io::json c{{"lambda", cert.lambda},
             {"h", io::to_json(cert.h)},
             {"checked_grid", cert.checked_grid},
             {"pass", cert.pass}};
  io::json cd = io::json::object();
  for (const auto& [delta, value] : cert.c_delta) cd[std::to_string(delta)] = value;
  c["c_delta"] = cd;
  if (cert.witness) {
    c["witness"] = io::json{{"state", cert.witness->state + 1},
                            {"y", cert.witness->y},
                            {"violation", cert.witness->violation},
                            {"condition", cert.witness->condition}};
  }
  return c;
}

inline void finish(io::RunReport& rep, const Stopwatch& sw, int exit_code) {
  rep.doc["timing"]["seconds"] = sw.seconds();
  rep.doc["exit_code"] = exit_code;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

inline CliResult cmd_validate(const io::ProblemConfig& cfg) {
  detail::Stopwatch sw;
  CliResult out;
  out.report = io::RunReport::make("validate", cfg.seed);
  auto& doc = out.report.doc;

  GeneratorModel model;
  try {
    model = validate_generator(cfg.L, cfg.space(), /*allow_degraded=*/true);
  } catch (const Error& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
    return out;
  }

  doc["generator"] = io::json{{"n", model.n()},
                              {"sub_markovian", model.sub_markovian},
                              {"irreducible", model.irreducible},
                              {"spectral_bound", model.spectral_bound}};

  int code = kExitOk;
  if (cfg.f) {
    const HypothesisCertificate cert =
        validate_hypotheses(*cfg.f, GridSpec{}, {0.1, 0.5, cfg.solver.delta});
    doc["hypotheses"] = detail::certificate_json(cert);
    if (!cert.pass) code = kExitHypothesis;
  }

  detail::finish(out.report, sw, code);
  out.exit_code = code;
  return out;
}

// ---------------------------------------------------------------------------
// criterion
// ---------------------------------------------------------------------------

inline CliResult cmd_criterion(const io::ProblemConfig& cfg) {
  detail::Stopwatch sw;
  CliResult out;
  out.report = io::RunReport::make("criterion", cfg.seed);
  auto& doc = out.report.doc;

  try {
    if (!cfg.f) throw ParseError("config has no nonlinearity");
    const GeneratorModel model = validate_generator(cfg.L, cfg.space());
    const CriterionResult crit = evaluate_criterion(model, *cfg.f, cfg.solver.limits);
    doc["criterion"] = io::to_json(crit);
    const int code = crit.satisfied ? kExitOk : kExitCriterion;
    detail::finish(out.report, sw, code);
    out.exit_code = code;
  } catch (const ParseError& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
  } catch (const Error& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
  }
  return out;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

inline CliResult cmd_solve(const io::ProblemConfig& cfg) {
  detail::Stopwatch sw;
  CliResult out;
  out.report = io::RunReport::make("solve", cfg.seed);
  auto& doc = out.report.doc;

  GeneratorModel model;
  try {
    if (!cfg.f) throw ParseError("config has no nonlinearity");
    model = validate_generator(cfg.L, cfg.space());
  } catch (const Error& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
    return out;
  }

  SolveOptions opts = cfg.solver;
  opts.eigen.seed = cfg.seed;

  int code = kExitOk;
  try {
    SolutionReport rep = solve(model, *cfg.f, opts);
    if (rep.u && cfg.run_uniqueness) {
      UniquenessOptions uopt;
      uopt.solve = opts;
      const UniquenessVerdict verdict = uniqueness_check(model, *cfg.f, {*rep.u}, uopt);
      rep.uniqueness = UniquenessSummary{verdict.unique, verdict.branch_gap, verdict.zero_mode_check};
    }
    doc["solution"] = io::to_json(rep);
    if (rep.u) {
      out.solution = *rep.u;
    } else {
      code = kExitCriterion;
    }
  } catch (const HypothesisViolation& e) {
    doc["error"] = e.what();
    doc["hypotheses"] = detail::certificate_json(e.certificate);
    code = kExitHypothesis;
  } catch (const CriterionFailed& e) {
    doc["error"] = e.what();
    code = kExitCriterion;
  } catch (const DivergingBranch& e) {
    doc["error"] = e.what();
    doc["divergence"] = io::json{{"w", io::to_json(e.diagnostics.w)},
                                 {"level", e.diagnostics.level},
                                 {"lambda_ainf_l", e.diagnostics.lambda_ainf_l},
                                 {"pairing", e.diagnostics.pairing}};
    code = kExitConvergence;
  } catch (const NoConvergence& e) {
    doc["error"] = e.what();
    code = kExitConvergence;
  } catch (const ResidualTooLarge& e) {
    doc["error"] = e.what();
    code = kExitConvergence;
  } catch (const MonotonicityNotStrict& e) {
    doc["error"] = e.what();
    code = kExitConvergence;
  } catch (const Error& e) {
    doc["error"] = e.what();
    code = kExitParse;
  }

  detail::finish(out.report, sw, code);
  out.exit_code = code;
  return out;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

inline CliResult cmd_verify(const io::ProblemConfig& cfg, bool oracle_only = false) {
  detail::Stopwatch sw;
  CliResult out;
  out.report = io::RunReport::make("verify", cfg.seed);
  auto& doc = out.report.doc;

  const io::VerifySpec& v = cfg.verify;
  const bool fault = (v.fault_injection == "resolvent_sign_flip");
  std::vector<suites::SuiteResult> results;

  if (!oracle_only) {
    results.push_back(suites::kato_suite(v.kato_trials, v.max_states, cfg.seed + 1, fault));
    results.push_back(suites::concave_image_suite(v.concave_trials, v.max_states, cfg.seed + 2));
    results.push_back(suites::convexity_defect_suite(v.convexity_trials, v.max_states, cfg.seed + 3));
    results.push_back(suites::supermedian_agreement_suite(v.agreement_trials, v.max_states, cfg.seed + 4));
    results.push_back(suites::max_subsolution_suite(v.maxsub_trials, v.max_states, cfg.seed + 5));
    results.push_back(suites::radius_identity_suite(v.radius_trials, v.max_states, cfg.seed + 6));
    results.push_back(
        suites::potential_monotonicity_suite(v.monotonicity_trials, v.max_states, cfg.seed + 7));
    results.push_back(suites::zero_mode_suite(v.zero_mode_trials, std::min(v.max_states, 8), cfg.seed + 8));
  }
  results.push_back(suites::oracle_agreement_suite(v.oracle_runs, v.oracle_paths, cfg.seed + 9));

  bool all_pass = true;
  io::json list = io::json::array();
  for (const auto& r : results) {
    list.push_back(io::json{{"name", r.name},
                            {"trials", r.trials},
                            {"failures", r.failures},
                            {"worst", r.worst},
                            {"note", r.note},
                            {"pass", r.pass()}});
    if (!r.pass()) all_pass = false;
  }
  doc["verify"] = io::json{{"suites", list}, {"pass", all_pass}};

  const int code = all_pass ? kExitOk : kExitSuite;
  detail::finish(out.report, sw, code);
  out.exit_code = code;
  return out;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

inline CliResult cmd_oracle(const io::ProblemConfig& cfg) {
  detail::Stopwatch sw;
  CliResult out;
  out.report = io::RunReport::make("oracle", cfg.seed);
  auto& doc = out.report.doc;

  try {
    const GeneratorModel model = validate_generator(cfg.L, cfg.space());
    const io::OracleSpec& spec = cfg.oracle;
    const int start = spec.start - 1;
    const Vector g = spec.g ? *spec.g : Vector::Ones(model.n());

    mc::EstimatorOptions opt;
    opt.n_paths = spec.n_paths;

    io::json estimates = io::json::array();
    if (spec.estimator == "resolvent") {
      const auto est = mc::estimate_resolvent_apply(model, g, spec.alpha, start, cfg.seed, opt);
      const double ref = resolvent_apply(model, spec.alpha, g)[start];
      estimates.push_back(io::json{{"name", "resolvent_apply"},
                                   {"alpha", spec.alpha},
                                   {"start", spec.start},
                                   {"value", est.value},
                                   {"std_error", est.std_error},
                                   {"n_paths", est.n_paths},
                                   {"reference", ref},
                                   {"within_3se", std::abs(est.value - ref) <= 3.0 * est.std_error}});
    } else if (spec.estimator == "feynman_kac") {
      const Vector V = spec.V ? *spec.V : Vector::Zero(model.n());
      const auto est = mc::estimate_feynman_kac(model, V, g, spec.t, start, cfg.seed, opt);
      Matrix op = model.L;
      for (int i = 0; i < model.n(); ++i) op(i, i) -= V[i];
      const double ref = ((spec.t * op).exp() * g)(start);
      estimates.push_back(io::json{{"name", "feynman_kac"},
                                   {"t", spec.t},
                                   {"start", spec.start},
                                   {"value", est.value},
                                   {"std_error", est.std_error},
                                   {"n_paths", est.n_paths},
                                   {"reference", ref},
                                   {"within_3se", std::abs(est.value - ref) <= 3.0 * est.std_error}});
    } else if (spec.estimator == "supermartingale") {
      const Vector v = spec.g ? *spec.g : supersolution_seed(model, 0.0);
      const auto cert = is_supermedian(model, v);
      if (!cert.verdict) throw PreconditionUnverified("probe vector is supermedian");
      const auto probe = mc::supermartingale_probe(model, v, spec.t_grid, start, cfg.seed, opt);
      io::json pts = io::json::array();
      for (const auto& p : probe.points)
        pts.push_back(io::json{{"t", p.t}, {"estimate", p.estimate}, {"std_error", p.std_error}});
      estimates.push_back(io::json{{"name", "supermartingale_probe"},
                                   {"start", spec.start},
                                   {"points", pts},
                                   {"nonincreasing_within_slack", probe.ok}});
    } else {
      throw ParseError("oracle.estimator must be resolvent | feynman_kac | supermartingale");
    }

    doc["oracle"] = io::json{{"estimates", estimates}};
    detail::finish(out.report, sw, kExitOk);
    out.exit_code = kExitOk;
  } catch (const ParseError& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
  } catch (const Error& e) {
    doc["error"] = e.what();
    detail::finish(out.report, sw, kExitParse);
    out.exit_code = kExitParse;
  }
  return out;
}

}  // namespace sublin::cli
