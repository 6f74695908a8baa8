#pragma once

// Structured run reports. A report is a JSON document with a stable layout;
// serialization round-trips exactly (doubles at max precision) and two runs
// with the same config and seed produce byte-identical documents except for
// the "timing" subtree.

#include "sublin/core.hpp"
#include "sublin/solver.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace sublin::io {

using json = nlohmann::json;

inline json to_json(const ExtendedReal& x) {
  switch (x.kind) {
    case ExtendedReal::Kind::PlusInf: return json("+inf");
    case ExtendedReal::Kind::MinusInf: return json("-inf");
    default: return json{{"finite", x.value}};
  }
}

inline ExtendedReal extended_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf") return ExtendedReal::plus_inf();
    if (s == "-inf" || s == "−inf") return ExtendedReal::minus_inf();
    throw ParseError("extended real: unknown tag '" + s + "'");
  }
  if (j.is_object() && j.contains("finite")) return ExtendedReal::finite(j.at("finite").get<double>());
  throw ParseError("extended real: expected {\"finite\": x} | \"+inf\" | \"-inf\"");
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const LimitEigenvalue& le) {
  json trace = json::array();
  for (const auto& step : le.trace) trace.push_back(json::array({step.k, step.lambda}));
  return json{{"value", to_json(le.value)},
              {"sign", le.sign},
              {"converged", le.converged},
              {"trace", trace}};
}

inline json to_json(const CriterionResult& c) {
  return json{{"lambda1_a0", to_json(c.lambda1_a0)},
              {"lambda1_ainf", to_json(c.lambda1_ainf)},
              {"satisfied", c.satisfied}};
}

inline json to_json(const SolutionReport& r) {
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back(json{{"k", t.k}, {"n", t.n}, {"inner_iterations", t.inner_iterations}, {"norm", t.norm}});

  json out{{"criterion", to_json(r.criterion)},
           {"trace", trace},
           {"shifts", json{{"kappa", r.kappa}, {"c_delta", r.c_delta}}},
           {"doob_used", r.doob_used},
           {"truncation_limit", r.truncation_limit}};
  if (r.u) {
    out["u"] = to_json(*r.u);
    out["residual"] = r.residual;
    out["bracket"] = json{{"sub", to_json(r.bracket_sub)}, {"super", to_json(r.bracket_super)}};
  }
  if (r.uniqueness) {
    out["uniqueness"] = json{{"unique", r.uniqueness->unique},
                             {"branch_gap", r.uniqueness->branch_gap},
                             {"zero_mode", r.uniqueness->zero_mode}};
  } else {
    out["uniqueness"] = "not_checked";
  }
  if (r.divergence) {
    out["divergence"] = json{{"w", to_json(r.divergence->w)},
                             {"level", r.divergence->level},
                             {"lambda_ainf_l", r.divergence->lambda_ainf_l},
                             {"pairing", r.divergence->pairing}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// RunReport
// ---------------------------------------------------------------------------

struct RunReport {
  json doc = json::object();

  static RunReport make(const std::string& command, uint64_t seed) {
    RunReport r;
    r.doc["command"] = command;
    r.doc["seed"] = seed;
    r.doc["environment"] = json{{"library", "sublin"},
                                {"version", "0.1.0"},
                                {"compiler",
#if defined(__clang__)
                                 "clang " + std::to_string(__clang_major__)
#elif defined(__GNUC__)
                                 "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__)
#else
                                 "unknown"
#endif
                                },
                                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                              std::to_string(EIGEN_MINOR_VERSION)}};
    r.doc["timing"] = json{{"seconds", 0.0}};
    return r;
  }

  std::string serialize() const { return doc.dump(2); }

  static RunReport parse(const std::string& text) {
    RunReport r;
    try {
      r.doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("report: ") + e.what());
    }
    return r;
  }

  // equality modulo nothing: a parsed serialization reproduces the document
  friend bool operator==(const RunReport& a, const RunReport& b) { return a.doc == b.doc; }

  // byte identity except the timing subtree (determinism contract)
  static bool equal_modulo_timing(const RunReport& a, const RunReport& b) {
    json ja = a.doc, jb = b.doc;
    ja.erase("timing");
    jb.erase("timing");
    return ja.dump() == jb.dump();
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report to " + path);
    out << serialize() << "\n";
  }
};

// one value per state, 1-based indices, plot-ready
inline std::string vector_to_csv(const Vector& v, const std::string& column = "u") {
  std::ostringstream out;
  out.precision(17);
  out << "state," << column << "\n";
  for (int i = 0; i < v.size(); ++i) out << (i + 1) << "," << v[i] << "\n";
  return out.str();
}

}  // namespace sublin::io
