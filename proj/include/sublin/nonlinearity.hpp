#pragma once

// Caratheodory nonlinearities f(x,y) on [0,inf), their generalized slopes
//
//     a0(x)   = liminf_{y->0+} f(x,y)/y,
//     ainf(x) = limsup_{y->inf} f(x,y)/y,
//
// and the growth/lower-bound certificates
//
//     (F1)  f(x,y) <= h(x) + lambda * y          for some lambda >= 0, h > 0,
//     (F2)  y |-> f(x,y) continuous on [0,inf),
//     (F3)  f(x,y) >= -C_delta * y on [0,delta]  for every delta > 0.
//
// Built-in families carry exact analytic slopes; tabulated (piecewise-linear)
// nonlinearities take their slopes from the terminal segments, where liminf
// and limsup coincide. Arbitrary user-coded callables are deliberately not
// supported.

#include "sublin/core.hpp"
#include "sublin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sublin {

// ---------------------------------------------------------------------------
// Nonlinearity
// ---------------------------------------------------------------------------

class Nonlinearity {
 public:
  // f(y) = y^q - c*y with 0 < q < 1, c >= 0; a0 = +inf, ainf = -c
  static Nonlinearity power_minus_linear(int n, double q, double c) {
    if (!(q > 0.0 && q < 1.0)) throw Error("power exponent q must lie in (0,1)");
    if (!(c >= 0.0)) throw Error("linear coefficient c must be >= 0");
    Nonlinearity f;
    f.n_ = n;
    f.kind_ = Power{q, c};
    return f;
  }

  // f(i,y) = mu_i*y - beta_i*y^2 with beta_i >= 0; a0 = mu, ainf = -inf where beta > 0
  static Nonlinearity logistic(Vector mu, Vector beta) {
    if (mu.size() != beta.size()) throw Error("logistic parameter sizes differ");
    for (int i = 0; i < beta.size(); ++i)
      if (!(beta[i] >= 0.0)) throw Error("logistic beta must be >= 0");
    Nonlinearity f;
    f.n_ = static_cast<int>(mu.size());
    f.kind_ = Logistic{std::move(mu), std::move(beta)};
    return f;
  }
  static Nonlinearity logistic(int n, double mu, double beta) {
    return logistic(Vector::Constant(n, mu), Vector::Constant(n, beta));
  }

  // f(i,y) = a_i * y / (1 + y); a0 = a, ainf = 0
  static Nonlinearity saturating(Vector a) {
    Nonlinearity f;
    f.n_ = static_cast<int>(a.size());
    f.kind_ = Saturating{std::move(a)};
    return f;
  }
  static Nonlinearity saturating(int n, double a) {
    return saturating(Vector::Constant(n, a));
  }

  // Piecewise-linear table on strictly increasing knots starting at 0; the
  // last segment is extended linearly.
  struct Table {
    std::vector<double> knots;
    std::vector<double> values;
  };
  static Nonlinearity tabulated(std::vector<Table> per_state) {
    Nonlinearity f;
    f.n_ = static_cast<int>(per_state.size());
    for (const auto& t : per_state) validate_table(t);
    f.kind_ = Tabulated{std::move(per_state)};
    return f;
  }
  static Nonlinearity tabulated(int n, Table shared) {
    validate_table(shared);
    std::vector<Table> ts(static_cast<size_t>(n), std::move(shared));
    return tabulated(std::move(ts));
  }

  // f(i,y) = slope_i * y, realized as a two-knot table
  static Nonlinearity linear(Vector slope) {
    std::vector<Table> ts;
    ts.reserve(static_cast<size_t>(slope.size()));
    for (int i = 0; i < slope.size(); ++i) ts.push_back(Table{{0.0, 1.0}, {0.0, slope[i]}});
    return tabulated(std::move(ts));
  }
  static Nonlinearity linear(int n, double slope) { return linear(Vector::Constant(n, slope)); }

  // f(i,y) = inner(i,y) + C*y; slopes shift by C in the extended reals
  static Nonlinearity shifted(Nonlinearity inner, double C) {
    Nonlinearity f;
    f.n_ = inner.n_;
    f.kind_ = Shifted{std::make_shared<Nonlinearity>(std::move(inner)), C};
    return f;
  }

  // f(i,y) = inner(i, phi_i*y) / phi_i for strictly positive phi (the ground-
  // state conjugation); slopes are unchanged
  static Nonlinearity conjugated(Nonlinearity inner, Vector phi) {
    if (phi.size() != inner.n_) throw Error("conjugation vector size mismatch");
    for (int i = 0; i < phi.size(); ++i)
      if (!(phi[i] > 0.0)) throw Error("conjugation vector must be strictly positive");
    Nonlinearity f;
    f.n_ = inner.n_;
    f.kind_ = Conjugated{std::make_shared<Nonlinearity>(std::move(inner)), std::move(phi)};
    return f;
  }

  int states() const { return n_; }

  double evaluate(int i, double y) const {
    if (!(y >= 0.0)) throw NegativeArgument(y);
    if (i < 0 || i >= n_) throw Error("state index out of range");
    return eval_raw(i, y);
  }
  double fplus(int i, double y) const { return std::max(evaluate(i, y), 0.0); }
  double fminus(int i, double y) const { return std::max(-evaluate(i, y), 0.0); }

  Vector evaluate_all(const Vector& u) const {
    Vector r(n_);
    for (int i = 0; i < n_; ++i) r[i] = evaluate(i, u[i]);
    return r;
  }

  // (a0, ainf) as extended-real potentials
  std::pair<Potential, Potential> slopes() const {
    Potential a0 = Potential::zero(n_);
    Potential ainf = Potential::zero(n_);
    slopes_into(a0, ainf);
    return {a0, ainf};
  }

  // total linear shift accumulated by `shifted` wrappers
  double shift_amount() const {
    if (const auto* s = std::get_if<Shifted>(&kind_)) {
      return s->C + s->inner->shift_amount();
    }
    return 0.0;
  }

  std::string kind_name() const {
    switch (kind_.index()) {
      case 0: return "power_minus_linear";
      case 1: return "logistic";
      case 2: return "saturating";
      case 3: return "tabulated";
      case 4: return "shifted";
      default: return "conjugated";
    }
  }

 private:
  struct Power {
    double q, c;
  };
  struct Logistic {
    Vector mu, beta;
  };
  struct Saturating {
    Vector a;
  };
  struct Tabulated {
    std::vector<Table> tables;
  };
  struct Shifted {
    std::shared_ptr<Nonlinearity> inner;
    double C;
  };
  struct Conjugated {
    std::shared_ptr<Nonlinearity> inner;
    Vector phi;
  };

  static void validate_table(const Table& t) {
    if (t.knots.size() < 2 || t.knots.size() != t.values.size())
      throw Error("tabulated nonlinearity needs at least two knots with matching values");
    if (t.knots.front() != 0.0) throw Error("tabulated knots must start at 0");
    for (size_t j = 1; j < t.knots.size(); ++j)
      if (!(t.knots[j] > t.knots[j - 1])) throw Error("tabulated knots must be strictly increasing");
  }

  static double table_eval(const Table& t, double y) {
    const auto& k = t.knots;
    const auto& v = t.values;
    const size_t m = k.size();
    if (y >= k[m - 1]) {
      const double s = (v[m - 1] - v[m - 2]) / (k[m - 1] - k[m - 2]);
      return v[m - 1] + s * (y - k[m - 1]);
    }
    const auto it = std::upper_bound(k.begin(), k.end(), y);
    const size_t j = static_cast<size_t>(it - k.begin());  // k[j-1] <= y < k[j]
    const double s = (v[j] - v[j - 1]) / (k[j] - k[j - 1]);
    return v[j - 1] + s * (y - k[j - 1]);
  }

  double eval_raw(int i, double y) const {
    switch (kind_.index()) {
      case 0: {
        const auto& p = std::get<Power>(kind_);
        return std::pow(y, p.q) - p.c * y;
      }
      case 1: {
        const auto& l = std::get<Logistic>(kind_);
        return l.mu[i] * y - l.beta[i] * y * y;
      }
      case 2: {
        const auto& s = std::get<Saturating>(kind_);
        return s.a[i] * y / (1.0 + y);
      }
      case 3: {
        return table_eval(std::get<Tabulated>(kind_).tables[static_cast<size_t>(i)], y);
      }
      case 4: {
        const auto& s = std::get<Shifted>(kind_);
        return s.inner->eval_raw(i, y) + s.C * y;
      }
      default: {
        const auto& c = std::get<Conjugated>(kind_);
        return c.inner->eval_raw(i, c.phi[i] * y) / c.phi[i];
      }
    }
  }

  void slopes_into(Potential& a0, Potential& ainf) const {
    switch (kind_.index()) {
      case 0: {
        // f/y = y^{q-1} - c: +inf at 0+, -c at infinity
        const auto& p = std::get<Power>(kind_);
        a0 = Potential::plus_inf(n_);
        ainf = Potential::constant(n_, -p.c);
        return;
      }
      case 1: {
        const auto& l = std::get<Logistic>(kind_);
        a0 = Potential(l.mu);
        ainf = Potential(l.mu);
        for (int i = 0; i < n_; ++i)
          if (l.beta[i] > 0.0) ainf.tags[static_cast<size_t>(i)] = Potential::Tag::MinusInf;
        return;
      }
      case 2: {
        const auto& s = std::get<Saturating>(kind_);
        a0 = Potential(s.a);
        ainf = Potential::zero(n_);
        return;
      }
      case 3: {
        const auto& tb = std::get<Tabulated>(kind_);
        a0 = Potential::zero(n_);
        ainf = Potential::zero(n_);
        for (int i = 0; i < n_; ++i) {
          const auto& t = tb.tables[static_cast<size_t>(i)];
          const size_t m = t.knots.size();
          if (t.values[0] > 0.0) {
            a0.tags[static_cast<size_t>(i)] = Potential::Tag::PlusInf;
          } else if (t.values[0] < 0.0) {
            a0.tags[static_cast<size_t>(i)] = Potential::Tag::MinusInf;
          } else {
            a0.values[i] = (t.values[1] - t.values[0]) / (t.knots[1] - t.knots[0]);
          }
          ainf.values[i] = (t.values[m - 1] - t.values[m - 2]) / (t.knots[m - 1] - t.knots[m - 2]);
        }
        return;
      }
      case 4: {
        const auto& s = std::get<Shifted>(kind_);
        s.inner->slopes_into(a0, ainf);
        a0 = a0.plus(s.C);
        ainf = ainf.plus(s.C);
        return;
      }
      default: {
        // strictly positive per-state rescaling leaves both limits unchanged
        std::get<Conjugated>(kind_).inner->slopes_into(a0, ainf);
        return;
      }
    }
  }

  int n_ = 0;
  std::variant<Power, Logistic, Saturating, Tabulated, Shifted, Conjugated> kind_;
};

// ---------------------------------------------------------------------------
// Hypothesis validation
// ---------------------------------------------------------------------------

struct GridSpec {
  double y_min = 1e-8;
  double y_max = 1e8;
  int points = 400;

  std::vector<double> sample() const {
    std::vector<double> ys(static_cast<size_t>(points));
    const double l0 = std::log(y_min), l1 = std::log(y_max);
    for (int j = 0; j < points; ++j)
      ys[static_cast<size_t>(j)] = std::exp(l0 + (l1 - l0) * j / (points - 1));
    return ys;
  }
};

struct HypothesisCertificate {
  double lambda = 0.0;                 // (F1) slope
  Vector h;                            // (F1) offset, strictly positive
  std::map<double, double> c_delta;    // (F3) delta -> C_delta
  std::string checked_grid;
  bool pass = true;

  struct Witness {
    int state = -1;
    double y = 0.0;
    double violation = 0.0;
    std::string condition;
  };
  std::optional<Witness> witness;

  double c_for(double delta) const {
    auto it = c_delta.find(delta);
    if (it == c_delta.end()) throw MissingF3Certificate(delta);
    return it->second;
  }
};

namespace detail {

// one parabolic refinement pass around a grid argmax of a smooth profile
inline double refine_max(const std::function<double(double)>& g, double y_lo, double y_mid,
                         double y_hi) {
  double best = g(y_mid);
  for (int pass = 0; pass < 60; ++pass) {
    const double m1 = 0.5 * (y_lo + y_mid), m2 = 0.5 * (y_mid + y_hi);
    const double g1 = g(m1), g2 = g(m2);
    if (g1 > best && g1 >= g2) {
      y_hi = y_mid;
      y_mid = m1;
      best = g1;
    } else if (g2 > best) {
      y_lo = y_mid;
      y_mid = m2;
      best = g2;
    } else {
      y_lo = m1;
      y_hi = m2;
    }
    if (y_hi - y_lo < 1e-12 * (1.0 + y_mid)) break;
  }
  return best;
}

}  // namespace detail

// Samples (F1) and (F3) over a log grid. lambda comes from the slope data
// (the finite part of ainf); h is the refined maximum of the excess
// f(i,y) - lambda*y over the grid. C_delta tables are built for each
// requested delta. The verdict fails with a witness when the ratio
// -f(i,y)/y keeps growing toward y -> 0 (no finite C_delta exists) or when
// the excess keeps growing at the right edge (no finite (lambda, h)).
inline HypothesisCertificate validate_hypotheses(const Nonlinearity& f, GridSpec grid = {},
                                                 std::vector<double> deltas = {0.1, 0.5, 1.0}) {
  const int n = f.states();
  const auto ys = grid.sample();
  if (ys.empty()) throw Error("sampling grid is empty");

  HypothesisCertificate cert;
  cert.checked_grid = std::to_string(grid.points) + " log-spaced points on [" +
                      std::to_string(grid.y_min) + ", " + std::to_string(grid.y_max) + "]";

  auto [a0, ainf] = f.slopes();

  // ---- (F1): lambda from the finite slope data, h from the excess ----
  double lambda = 0.0;
  bool f1_possible = true;
  for (int i = 0; i < n; ++i) {
    const auto s0 = a0.at(i);
    const auto si = ainf.at(i);
    if (si.is_plus_inf()) f1_possible = false;
    if (s0.is_finite()) lambda = std::max(lambda, s0.value);
    if (si.is_finite()) lambda = std::max(lambda, si.value);
  }
  cert.h = Vector::Constant(n, 1e-9);
  if (!f1_possible) {
    cert.pass = false;
    cert.witness = HypothesisCertificate::Witness{0, grid.y_max, std::numeric_limits<double>::infinity(),
                                                  "F1: superlinear growth at infinity"};
  } else {
    // If the excess f - lambda*y still climbs at the right edge (sublinear
    // growth not covered by the slope data, e.g. pure y^q), raise lambda by
    // the measured terminal slope until the maximum moves inside the grid.
    for (int bump = 0; bump < 4; ++bump) {
      double terminal_slope = 0.0;
      bool edge_growth = false;
      for (int i = 0; i < n; ++i) {
        const double y1 = ys[ys.size() - 40], y2 = ys.back();
        const double e1 = f.evaluate(i, y1) - lambda * y1;
        const double e2 = f.evaluate(i, y2) - lambda * y2;
        if (e2 > std::max(1.0, e1)) {
          edge_growth = true;
          terminal_slope = std::max(terminal_slope, (e2 - e1) / (y2 - y1));
        }
      }
      if (!edge_growth) break;
      if (terminal_slope <= 0.0 || bump == 3) {
        cert.pass = false;
        if (!cert.witness)
          cert.witness = HypothesisCertificate::Witness{
              0, grid.y_max, terminal_slope, "F1: excess grows at the right edge"};
        break;
      }
      lambda += 2.0 * terminal_slope;
    }

    for (int i = 0; i < n; ++i) {
      double best = 0.0;
      size_t arg = 0;
      for (size_t j = 0; j < ys.size(); ++j) {
        const double e = f.evaluate(i, ys[j]) - lambda * ys[j];
        if (e > best) {
          best = e;
          arg = j;
        }
      }
      // also check the excess at 0
      best = std::max(best, f.evaluate(i, 0.0));
      if (best > 0.0 && arg > 0 && arg + 1 < ys.size()) {
        auto excess = [&](double y) { return f.evaluate(i, y) - lambda * y; };
        best = std::max(best, detail::refine_max(excess, ys[arg - 1], ys[arg], ys[arg + 1]));
      }
      cert.h[i] = std::max(best, 1e-9);
    }
  }
  cert.lambda = lambda;

  // ---- (F3): C_delta tables, divergence of -f/y near 0 fails the verdict ----
  // f(x,0) >= 0 is forced by (F3) at y = 0
  for (int i = 0; i < n; ++i) {
    const double f0 = f.evaluate(i, 0.0);
    if (f0 < 0.0) {
      cert.pass = false;
      if (!cert.witness) cert.witness = HypothesisCertificate::Witness{i, 0.0, -f0, "F3: f(x,0) < 0"};
    }
  }

  auto ratio = [&](int i, double y) { return std::max(0.0, -f.evaluate(i, y) / y); };

  for (double d : deltas) {
    double c = 0.0;
    for (int i = 0; i < n; ++i)
      for (double y : ys)
        if (y <= d) c = std::max(c, ratio(i, y));
    cert.c_delta[d] = c;
  }

  // divergence heuristic at the left edge: the ratio exceeds 1e3 at the
  // smallest sample and has grown by >= 5x over the last two decades
  for (int i = 0; i < n; ++i) {
    const double y0 = ys.front();
    const double r0 = ratio(i, y0);
    if (r0 > 1e3) {
      const double r2 = ratio(i, std::min(100.0 * y0, ys.back()));
      if (r0 >= 5.0 * r2) {
        cert.pass = false;
        if (!cert.witness)
          cert.witness = HypothesisCertificate::Witness{i, y0, r0, "F3: -f(x,y)/y diverges as y -> 0"};
      }
    }
  }

  return cert;
}

// Shifts f by (C_delta + eps)*y so the result is strictly positive on
// (0, delta]; the identity shift is used when f is already strictly positive
// there. The caller must co-shift the generator by the same constant, read
// back through Nonlinearity::shift_amount().
inline Nonlinearity shift_delta(const Nonlinearity& f, double delta,
                                const HypothesisCertificate& cert, double eps = 1e-6) {
  if (!(delta > 0.0)) throw Error("delta must be strictly positive");
  const double c_delta = cert.c_for(delta);  // throws MissingF3Certificate

  // already strictly positive on (0, delta]?
  bool strictly_positive = true;
  GridSpec probe{1e-10 * delta, delta, 160};
  for (int i = 0; i < f.states() && strictly_positive; ++i)
    for (double y : probe.sample())
      if (!(f.evaluate(i, y) > 0.0)) {
        strictly_positive = false;
        break;
      }
  if (strictly_positive) return f;

  return Nonlinearity::shifted(f, c_delta + eps);
}

}  // namespace sublin
