#pragma once

// Monte Carlo oracle on the killed continuous-time Markov chain attached to a
// sub-Markovian generator: exact jump-hold (Gillespie) path sampling, with
// estimators for resolvent applications int_0^zeta e^{-alpha t} g(X_t) dt,
// Feynman-Kac weights e^{-int V} g(X_t), and supermartingale probes of
// supermedian vectors. Holding times enter all integrals exactly, segment by
// segment.
//
// Reproducibility: draws come from a counter-based generator keyed by
// (seed, path_index), so the path stream is bitwise deterministic and the
// paths can be simulated in parallel without shared state. Estimator
// reductions run over fixed path-index batches combined in batch order, which
// keeps results identical across thread counts.

#include "sublin/core.hpp"
#include "sublin/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sublin::mc {

// ---------------------------------------------------------------------------
// Counter-based RNG
// ---------------------------------------------------------------------------

namespace detail {
inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Stateless mixing of (key, counter); key is derived from (seed, stream).
struct CounterRng {
  uint64_t key = 0;
  uint64_t ctr = 0;

  CounterRng(uint64_t seed, uint64_t stream)
      : key(detail::splitmix64(detail::splitmix64(seed) ^ (stream * 0xd1342543de82ef95ULL))) {}

  uint64_t next_u64() { return detail::splitmix64(key ^ (0x2545f4914f6cdd1dULL * ++ctr)); }

  // uniform in (0, 1]
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53; }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }
};

// ---------------------------------------------------------------------------
// Path sampling
// ---------------------------------------------------------------------------

struct PathSample {
  std::vector<int> states;         // visited states; one longer than jump_times
  std::vector<double> jump_times;  // strictly increasing transition times
  bool killed = false;
  std::optional<double> lifetime;  // kill time zeta; empty marks "not killed" (+inf)
};

namespace detail {

inline void require_sub_markovian(const GeneratorModel& m) {
  if (!m.sub_markovian) throw NotSubMarkovian();
}

// Jump-hold walk shared by the sampler and all estimators, so every consumer
// sees the same draw sequence. Visitor contract:
//   segment(state, t0, t1)  occupation of `state` on [t0, t1)
//   jump(state, t)          transition into `state` at time t
//   finish(killed, t_end, last_state)
template <class Visitor>
void walk(const GeneratorModel& m, int start, double horizon, CounterRng& rng, Visitor&& vis) {
  int state = start;
  double t = 0.0;
  while (true) {
    const double q = -m.L(state, state);
    if (q <= sublin::detail::kStructuralZero) {  // absorbing real state: occupied forever
      vis.segment(state, t, horizon);
      vis.finish(false, horizon, state);
      return;
    }
    const double hold = rng.exponential(q);
    const double t_next = t + hold;
    if (t_next >= horizon) {
      vis.segment(state, t, horizon);
      vis.finish(false, horizon, state);
      return;
    }
    vis.segment(state, t, t_next);

    // one draw picks the jump target, with the row deficiency as killing mass
    const double r = rng.uniform01() * q;
    double acc = 0.0;
    int target = -1;
    for (int j = 0; j < m.n(); ++j) {
      if (j == state) continue;
      acc += m.L(state, j);
      if (r <= acc) {
        target = j;
        break;
      }
    }
    if (target < 0) {  // killed: sent to the cemetery at t_next
      vis.finish(true, t_next, state);
      return;
    }
    state = target;
    t = t_next;
    vis.jump(state, t);
  }
}

inline int env_thread_count() {
  if (const char* s = std::getenv("SUBLIN_THREADS")) {
    const int k = std::atoi(s);
    if (k >= 1) return k;
  }
  return 1;
}

// Deterministic batch map-reduce: batch b owns path indices [b*size, ...);
// results are combined in batch order regardless of thread count.
template <class PathFn>
std::vector<double> batched_path_means(long n_paths, int n_batches, int threads, PathFn&& per_path) {
  std::vector<double> batch_mean(static_cast<size_t>(n_batches), 0.0);
  const long batch_size = (n_paths + n_batches - 1) / n_batches;

  auto run_batch = [&](int b) {
    const long lo = static_cast<long>(b) * batch_size;
    const long hi = std::min(n_paths, lo + batch_size);
    double acc = 0.0;
    for (long p = lo; p < hi; ++p) acc += per_path(p);
    batch_mean[static_cast<size_t>(b)] = (hi > lo) ? acc / static_cast<double>(hi - lo) : 0.0;
  };

  if (threads <= 1) {
    for (int b = 0; b < n_batches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int tid = 0; tid < threads; ++tid) {
      pool.emplace_back([&, tid] {
        for (int b = tid; b < n_batches; b += threads) run_batch(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  return batch_mean;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe reduce(const std::vector<double>& batch_means) {
  const int B = static_cast<int>(batch_means.size());
  double mean = 0.0;
  for (double v : batch_means) mean += v;
  mean /= B;
  double var = 0.0;
  for (double v : batch_means) var += (v - mean) * (v - mean);
  var /= (B - 1);
  return {mean, std::sqrt(var / B)};
}

}  // namespace detail

inline PathSample sample_path(const GeneratorModel& m, int start, double horizon, uint64_t seed,
                              uint64_t path_index = 0) {
  detail::require_sub_markovian(m);
  if (start < 0 || start >= m.n()) throw Error("start state out of range");

  struct Recorder {
    PathSample path;
    void segment(int, double, double) {}
    void jump(int s, double t) {
      path.states.push_back(s);
      path.jump_times.push_back(t);
    }
    void finish(bool killed, double t, int) {
      path.killed = killed;
      if (killed) path.lifetime = t;
    }
  } rec;
  rec.path.states.push_back(start);

  CounterRng rng(seed, path_index);
  detail::walk(m, start, horizon, rng, rec);
  return rec.path;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct EstimatorResult {
  double value = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  uint64_t seed = 0;
};

struct EstimatorOptions {
  long n_paths = 100000;
  int n_batches = 50;            // clamped to >= 30 independent batches for the SE
  double horizon = 0.0;          // 0 = default 50 / |s(L)|
  int threads = 0;               // 0 = SUBLIN_THREADS or 1

  int batches() const { return std::max(30, n_batches); }
};

namespace detail {
inline double pick_horizon(const GeneratorModel& m, const EstimatorOptions& opt, double alpha) {
  if (opt.horizon > 0.0) return opt.horizon;
  const double decay = std::max(alpha - std::min(m.spectral_bound, 0.0), -m.spectral_bound);
  if (!(decay > 0.0)) throw Error("no decay available: provide an explicit horizon");
  return 50.0 / decay;
}
}  // namespace detail

// E_start int_0^zeta e^{-alpha t} g(X_t) dt with exact per-segment integrals;
// agrees with resolvent(m, alpha) * g at the start state.
inline EstimatorResult estimate_resolvent_apply(const GeneratorModel& m, const Vector& g,
                                                double alpha, int start, uint64_t seed,
                                                EstimatorOptions opt = {}) {
  detail::require_sub_markovian(m);
  if (alpha < 0.0) throw Error("alpha must be nonnegative");
  if (alpha == 0.0 && !(m.spectral_bound < 0.0)) throw SpectralBoundNotNegative(m.spectral_bound);
  const double horizon = detail::pick_horizon(m, opt, alpha);
  const int threads = opt.threads > 0 ? opt.threads : detail::env_thread_count();

  struct Integrator {
    const Vector* g;
    double alpha;
    double acc = 0.0;
    double tail_t = 0.0;
    bool alive_at_horizon = false;
    void segment(int s, double t0, double t1) {
      if (alpha == 0.0) {
        acc += (*g)[s] * (t1 - t0);
      } else {
        acc += (*g)[s] * (std::exp(-alpha * t0) - std::exp(-alpha * t1)) / alpha;
      }
    }
    void jump(int, double) {}
    void finish(bool killed, double t, int) {
      alive_at_horizon = !killed;
      tail_t = t;
    }
  };

  double truncated_fraction = 0.0;
  auto per_path = [&](long p) {
    CounterRng rng(seed, static_cast<uint64_t>(p));
    Integrator it{&g, alpha};
    detail::walk(m, start, horizon, rng, it);
    return it.acc;
  };
  const auto means = detail::batched_path_means(opt.n_paths, opt.batches(), threads, per_path);
  const auto [mean, se] = detail::reduce(means);

  // truncated-mass budget: surviving paths keep contributing beyond the
  // horizon; bound the tail by ||g||_inf e^{(s - alpha) H} / (alpha - s) and
  // fold it into the error budget
  {
    const double rate = alpha - m.spectral_bound;
    truncated_fraction = g.cwiseAbs().maxCoeff() * std::exp(-rate * horizon) / rate;
  }

  EstimatorResult out;
  out.value = mean;
  out.std_error = se + truncated_fraction;
  out.n_paths = opt.n_paths;
  out.seed = seed;
  return out;
}

// E_start[ e^{-int_0^t V(X_s) ds} g(X_t) ; t < zeta ] with the V-integral
// accumulated exactly along holds; agrees with e^{t(L - diag V)} g.
inline EstimatorResult estimate_feynman_kac(const GeneratorModel& m, const Vector& V,
                                            const Vector& g, double t, int start, uint64_t seed,
                                            EstimatorOptions opt = {}) {
  detail::require_sub_markovian(m);
  if (!(t >= 0.0)) throw Error("time must be nonnegative");

  const int threads = opt.threads > 0 ? opt.threads : detail::env_thread_count();

  struct Weigher {
    const Vector* V;
    const Vector* g;
    double int_v = 0.0;
    double value = 0.0;
    void segment(int s, double t0, double t1) { int_v += (*V)[s] * (t1 - t0); }
    void jump(int, double) {}
    void finish(bool killed, double, int last) {
      value = killed ? 0.0 : std::exp(-int_v) * (*g)[last];
    }
  };

  auto per_path = [&](long p) {
    CounterRng rng(seed, static_cast<uint64_t>(p));
    Weigher wg{&V, &g};
    detail::walk(m, start, t, rng, wg);
    return wg.value;
  };
  const auto means = detail::batched_path_means(opt.n_paths, opt.batches(), threads, per_path);
  const auto [mean, se] = detail::reduce(means);

  EstimatorResult out;
  out.value = mean;
  out.std_error = se;
  out.n_paths = opt.n_paths;
  out.seed = seed;
  return out;
}

// t |-> E_start v(X_t) (zero at the cemetery) along a time grid; for
// supermedian v this is bounded by v(start) and nonincreasing up to
// statistical slack.
struct ProbePoint {
  double t = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct SupermartingaleProbe {
  std::vector<ProbePoint> points;
  bool ok = false;  // <= v(start) + 3 se and nonincreasing within slack
};

inline SupermartingaleProbe supermartingale_probe(const GeneratorModel& m, const Vector& v,
                                                  std::vector<double> t_grid, int start,
                                                  uint64_t seed, EstimatorOptions opt = {}) {
  detail::require_sub_markovian(m);
  std::sort(t_grid.begin(), t_grid.end());
  if (t_grid.empty()) throw Error("time grid is empty");
  const double horizon = t_grid.back() + 1e-12;
  const int threads = opt.threads > 0 ? opt.threads : detail::env_thread_count();

  // evaluates v(X_t) at every grid point in one walk; killed paths keep 0
  struct GridEval {
    const Vector* v;
    const std::vector<double>* grid;
    std::vector<double>* values;
    void segment(int s, double t0, double t1) {
      for (size_t j = 0; j < grid->size(); ++j) {
        const double t = (*grid)[j];
        if (t >= t0 && t < t1) (*values)[j] = (*v)[s];
      }
    }
    void jump(int, double) {}
    void finish(bool, double, int) {}
  };

  const size_t n_grid = t_grid.size();
  const int n_batches = opt.batches();
  const long batch_size = (opt.n_paths + n_batches - 1) / n_batches;
  std::vector<std::vector<double>> batch_means(static_cast<size_t>(n_batches),
                                               std::vector<double>(n_grid, 0.0));

  auto run_batch = [&](int b) {
    const long lo = static_cast<long>(b) * batch_size;
    const long hi = std::min<long>(opt.n_paths, lo + batch_size);
    std::vector<double> acc(n_grid, 0.0), values(n_grid, 0.0);
    for (long p = lo; p < hi; ++p) {
      std::fill(values.begin(), values.end(), 0.0);
      CounterRng rng(seed, static_cast<uint64_t>(p));
      GridEval ge{&v, &t_grid, &values};
      detail::walk(m, start, horizon, rng, ge);
      for (size_t j = 0; j < n_grid; ++j) acc[j] += values[j];
    }
    if (hi > lo)
      for (size_t j = 0; j < n_grid; ++j)
        batch_means[static_cast<size_t>(b)][j] = acc[j] / static_cast<double>(hi - lo);
  };

  if (threads <= 1) {
    for (int b = 0; b < n_batches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < threads; ++tid)
      pool.emplace_back([&, tid] {
        for (int b = tid; b < n_batches; b += threads) run_batch(b);
      });
    for (auto& th : pool) th.join();
  }

  SupermartingaleProbe probe;
  probe.points.resize(n_grid);
  for (size_t j = 0; j < n_grid; ++j) {
    std::vector<double> col(static_cast<size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) col[static_cast<size_t>(b)] = batch_means[static_cast<size_t>(b)][j];
    const auto [mean, se] = detail::reduce(col);
    probe.points[j] = {t_grid[j], mean, se};
  }

  probe.ok = true;
  for (size_t j = 0; j < probe.points.size(); ++j) {
    const auto& pt = probe.points[j];
    if (pt.estimate > v[start] + 3.0 * pt.std_error + 1e-12) probe.ok = false;
    if (j > 0) {
      const auto& prev = probe.points[j - 1];
      if (pt.estimate > prev.estimate + 3.0 * (pt.std_error + prev.std_error) + 1e-12)
        probe.ok = false;
    }
  }
  return probe;
}

}  // namespace sublin::mc
