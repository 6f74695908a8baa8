#pragma once

// Input formats:
//   * generator: coordinate text, first line "n nnz", then nnz lines
//     "i j value" with 1-based indices; unspecified entries are zero;
//   * measure weights: one value per line, or "uniform";
//   * a single JSON config document bundling generator, weights,
//     nonlinearity, solver options and suite sizes (generator and weights may
//     be inline or file references; relative paths resolve against the
//     config's directory).

#include "sublin/core.hpp"
#include "sublin/nonlinearity.hpp"
#include "sublin/solver.hpp"
#include "sublin/stochastic.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sublin::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Coordinate generator format
// ---------------------------------------------------------------------------

inline Matrix parse_coordinate_matrix(std::istream& in, const std::string& origin = "<stream>") {
  int n = 0;
  long nnz = 0;
  if (!(in >> n >> nnz)) throw ParseError(origin + ": expected header line 'n nnz'");
  if (n < 1) throw ParseError(origin + ": state count must be >= 1");
  if (nnz < 0) throw ParseError(origin + ": negative entry count");

  Matrix L = Matrix::Zero(n, n);
  for (long e = 0; e < nnz; ++e) {
    int i = 0, j = 0;
    double value = 0.0;
    if (!(in >> i >> j >> value))
      throw ParseError(origin + ": truncated entry " + std::to_string(e + 1) + " of " +
                       std::to_string(nnz));
    if (i < 1 || i > n || j < 1 || j > n)
      throw ParseError(origin + ": index (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for n = " + std::to_string(n));
    L(i - 1, j - 1) = value;
  }
  return L;
}

inline Matrix load_coordinate_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open generator file " + path);
  return parse_coordinate_matrix(in, path);
}

inline std::string format_coordinate_matrix(const Matrix& L) {
  std::ostringstream out;
  out.precision(17);
  long nnz = 0;
  for (int i = 0; i < L.rows(); ++i)
    for (int j = 0; j < L.cols(); ++j)
      if (L(i, j) != 0.0) ++nnz;
  out << L.rows() << " " << nnz << "\n";
  for (int i = 0; i < L.rows(); ++i)
    for (int j = 0; j < L.cols(); ++j)
      if (L(i, j) != 0.0) out << (i + 1) << " " << (j + 1) << " " << L(i, j) << "\n";
  return out.str();
}

inline Vector load_weights(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weights file " + path);
  std::vector<double> w;
  double v = 0.0;
  while (in >> v) w.push_back(v);
  if (static_cast<int>(w.size()) != n)
    throw ParseError(path + ": expected " + std::to_string(n) + " weights, found " +
                     std::to_string(w.size()));
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = w[static_cast<size_t>(i)];
  return out;
}

// ---------------------------------------------------------------------------
// Config document
// ---------------------------------------------------------------------------

struct VerifySpec {
  long kato_trials = 1000;
  long radius_trials = 500;
  long monotonicity_trials = 500;
  long concave_trials = 500;
  long convexity_trials = 500;
  long agreement_trials = 500;
  long maxsub_trials = 100;
  long zero_mode_trials = 10;
  int max_states = 20;
  long oracle_runs = 20;
  long oracle_paths = 20000;
  std::string fault_injection = "none";
};

struct OracleSpec {
  std::string estimator = "resolvent";  // resolvent | feynman_kac | supermartingale
  int start = 1;                        // 1-based, matching the coordinate format
  double alpha = 0.0;
  double t = 1.0;
  std::vector<double> t_grid = {0.5, 1.0, 2.0};
  std::optional<Vector> g;              // default: all ones
  std::optional<Vector> V;              // default: all zeros
  long n_paths = 100000;
};

struct ProblemConfig {
  Matrix L;
  Vector weights;
  double p = 2.0;
  std::optional<Nonlinearity> f;  // absent for pure state-model configs
  SolveOptions solver;
  uint64_t seed = 1;
  bool strict = false;
  bool run_uniqueness = false;
  bool run_oracle = false;
  VerifySpec verify;
  OracleSpec oracle;

  MeasureSpace space() const { return MeasureSpace(weights, p); }
};

namespace detail {

inline Vector json_to_vector(const json& j, int n, const std::string& what) {
  if (j.is_number()) return Vector::Constant(n, j.get<double>());
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != n)
      throw ParseError(what + ": expected " + std::to_string(n) + " entries, found " +
                       std::to_string(j.size()));
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
    return v;
  }
  throw ParseError(what + ": expected a number or an array");
}

inline Nonlinearity parse_nonlinearity(const json& j, int n) {
  if (!j.is_object() || !j.contains("kind"))
    throw ParseError("nonlinearity: expected an object with a 'kind' field");
  const std::string kind = j.at("kind").get<std::string>();

  if (kind == "power_minus_linear")
    return Nonlinearity::power_minus_linear(n, j.at("q").get<double>(), j.at("c").get<double>());
  if (kind == "logistic")
    return Nonlinearity::logistic(json_to_vector(j.at("mu"), n, "logistic.mu"),
                                  json_to_vector(j.at("beta"), n, "logistic.beta"));
  if (kind == "saturating")
    return Nonlinearity::saturating(json_to_vector(j.at("a"), n, "saturating.a"));
  if (kind == "linear")
    return Nonlinearity::linear(json_to_vector(j.at("slope"), n, "linear.slope"));
  if (kind == "tabulated") {
    auto parse_table = [](const json& tj) {
      Nonlinearity::Table t;
      t.knots = tj.at("knots").get<std::vector<double>>();
      t.values = tj.at("values").get<std::vector<double>>();
      return t;
    };
    if (j.contains("table")) return Nonlinearity::tabulated(n, parse_table(j.at("table")));
    const auto& list = j.at("tables");
    if (static_cast<int>(list.size()) != n)
      throw ParseError("tabulated.tables: expected one table per state");
    std::vector<Nonlinearity::Table> ts;
    for (const auto& tj : list) ts.push_back(parse_table(tj));
    return Nonlinearity::tabulated(std::move(ts));
  }
  if (kind == "shifted")
    return Nonlinearity::shifted(parse_nonlinearity(j.at("inner"), n), j.at("shift").get<double>());
  throw ParseError("nonlinearity: unknown kind '" + kind + "'");
}

}  // namespace detail

inline ProblemConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  ProblemConfig cfg;

  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base_dir / fp).string();
  };

  if (!j.contains("generator")) throw ParseError("config: missing 'generator'");
  const auto& gj = j.at("generator");
  if (gj.is_string()) {
    cfg.L = load_coordinate_matrix(resolve(gj.get<std::string>()));
  } else if (gj.is_object()) {
    const int n = gj.at("n").get<int>();
    std::ostringstream synth;
    synth << n << " " << gj.at("entries").size() << "\n";
    for (const auto& e : gj.at("entries")) {
      if (!e.is_array() || e.size() != 3) throw ParseError("generator.entries: expected [i, j, value]");
      synth << e[0].get<long>() << " " << e[1].get<long>() << " ";
      synth.precision(17);
      synth << e[2].get<double>() << "\n";
    }
    std::istringstream in(synth.str());
    cfg.L = parse_coordinate_matrix(in, "generator.entries");
  } else {
    throw ParseError("config: 'generator' must be a path or an inline object");
  }
  const int n = static_cast<int>(cfg.L.rows());

  if (!j.contains("weights") || (j.at("weights").is_string() && j.at("weights") == "uniform")) {
    cfg.weights = Vector::Ones(n);
  } else if (j.at("weights").is_string()) {
    cfg.weights = load_weights(resolve(j.at("weights").get<std::string>()), n);
  } else {
    cfg.weights = detail::json_to_vector(j.at("weights"), n, "weights");
  }

  cfg.p = j.value("p", 2.0);
  if (j.contains("nonlinearity")) cfg.f = detail::parse_nonlinearity(j.at("nonlinearity"), n);

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    cfg.solver.delta = s.value("delta", cfg.solver.delta);
    cfg.solver.margin = s.value("margin", cfg.solver.margin);
    cfg.solver.inner_tol = s.value("inner_tol", cfg.solver.inner_tol);
    cfg.solver.outer_tol = s.value("outer_tol", cfg.solver.outer_tol);
    cfg.solver.residual_tol = s.value("residual_tol", cfg.solver.residual_tol);
    cfg.solver.max_doublings = s.value("max_doublings", cfg.solver.max_doublings);
    cfg.solver.divergence_ceiling = s.value("divergence_ceiling", cfg.solver.divergence_ceiling);
    for (const char* key : {"delta", "margin", "inner_tol", "outer_tol", "residual_tol",
                            "max_doublings", "divergence_ceiling"}) {
      if (s.contains(key) && s.at(key).is_number() && !(s.at(key).get<double>() > 0.0))
        throw ParseError(std::string("solver.") + key + " must be positive");
    }
  }

  cfg.seed = j.value("seed", uint64_t{1});
  cfg.strict = j.value("strict", false);
  cfg.run_uniqueness = j.value("run_uniqueness", false);
  cfg.run_oracle = j.value("run_oracle", false);
  cfg.solver.strict = cfg.strict;

  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    cfg.verify.kato_trials = v.value("kato_trials", cfg.verify.kato_trials);
    cfg.verify.radius_trials = v.value("radius_trials", cfg.verify.radius_trials);
    cfg.verify.monotonicity_trials = v.value("monotonicity_trials", cfg.verify.monotonicity_trials);
    cfg.verify.concave_trials = v.value("concave_trials", cfg.verify.concave_trials);
    cfg.verify.convexity_trials = v.value("convexity_trials", cfg.verify.convexity_trials);
    cfg.verify.agreement_trials = v.value("agreement_trials", cfg.verify.agreement_trials);
    cfg.verify.maxsub_trials = v.value("maxsub_trials", cfg.verify.maxsub_trials);
    cfg.verify.zero_mode_trials = v.value("zero_mode_trials", cfg.verify.zero_mode_trials);
    cfg.verify.max_states = v.value("max_states", cfg.verify.max_states);
    cfg.verify.oracle_runs = v.value("oracle_runs", cfg.verify.oracle_runs);
    cfg.verify.oracle_paths = v.value("oracle_paths", cfg.verify.oracle_paths);
    cfg.verify.fault_injection = v.value("fault_injection", cfg.verify.fault_injection);
  }

  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    cfg.oracle.estimator = o.value("estimator", cfg.oracle.estimator);
    cfg.oracle.start = o.value("start", cfg.oracle.start);
    cfg.oracle.alpha = o.value("alpha", cfg.oracle.alpha);
    cfg.oracle.t = o.value("t", cfg.oracle.t);
    if (o.contains("t_grid")) cfg.oracle.t_grid = o.at("t_grid").get<std::vector<double>>();
    if (o.contains("g") && !(o.at("g").is_string() && o.at("g") == "ones"))
      cfg.oracle.g = detail::json_to_vector(o.at("g"), n, "oracle.g");
    if (o.contains("V")) cfg.oracle.V = detail::json_to_vector(o.at("V"), n, "oracle.V");
    cfg.oracle.n_paths = o.value("n_paths", cfg.oracle.n_paths);
    if (cfg.oracle.start < 1 || cfg.oracle.start > n)
      throw ParseError("oracle.start out of range (1-based)");
  }

  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

}  // namespace sublin::io
