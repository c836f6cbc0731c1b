#include "mimo/tail_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mimo/prng.hpp"
#include "mimo/vsa.hpp"

namespace mimo {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Fans trials out across workers. Each trial draws its own substream keyed
// by the trial index, so the violation count is independent of the worker
// count (integer sum, order-free).
std::uint64_t count_violations(std::uint64_t trials, std::uint64_t seed, int workers,
                               bool (*violates)(SplitRng&, const void*), const void* ctx) {
  require(trials >= 1, "estimator: trials must be positive");
  int nw = std::max(1, workers);
  SplitRng root(seed, 0x7472u);
  if (nw == 1) {
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      SplitRng trial = root.substream(t);
      if (violates(trial, ctx)) ++hits;
    }
    return hits;
  }
  std::vector<std::uint64_t> partial(static_cast<std::size_t>(nw), 0);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      std::uint64_t hits = 0;
      for (std::uint64_t t = static_cast<std::uint64_t>(w); t < trials;
           t += static_cast<std::uint64_t>(nw)) {
        SplitRng trial = root.substream(t);
        if (violates(trial, ctx)) ++hits;
      }
      partial[static_cast<std::size_t>(w)] = hits;
    });
  }
  for (auto& th : pool) th.join();
  std::uint64_t total = 0;
  for (auto h : partial) total += h;
  return total;
}

}  // namespace

nlohmann::json BoundReport::to_json() const {
  return nlohmann::json{{"bound", bound_value},
                        {"empirical", empirical_probability},
                        {"trials", trials},
                        {"violations", violations},
                        {"config", config},
                        {"seed", seed}};
}

double BoundReport::standard_error() const {
  if (trials == 0) return 0.0;
  double p = empirical_probability;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

double hoeffding_orthogonality_bound(std::size_t D, double alpha) {
  require(D >= 1, "hoeffding_orthogonality_bound: D must be positive");
  require(alpha >= 0.0, "hoeffding_orthogonality_bound: alpha must be nonnegative");
  return clamp01(2.0 * std::exp(-0.5 * static_cast<double>(D) * alpha * alpha));
}

namespace {

struct InterferenceCtx {
  std::size_t D;
  double alpha;
};

bool interference_violates(SplitRng& rng, const void* p) {
  const auto& ctx = *static_cast<const InterferenceCtx*>(p);
  // |cos(x, y)| = |<x, y>| / D for bipolar vectors.
  double acc = 0.0;
  for (std::size_t i = 0; i < ctx.D; ++i) acc += rng.rademacher() * rng.rademacher();
  return std::abs(acc) >= ctx.alpha * static_cast<double>(ctx.D);
}

}  // namespace

BoundReport estimate_interference_probability(std::size_t D, double alpha, std::uint64_t trials,
                                              std::uint64_t seed, int workers) {
  InterferenceCtx ctx{D, alpha};
  BoundReport rep;
  rep.bound_value = hoeffding_orthogonality_bound(D, alpha);
  rep.violations = count_violations(trials, seed, workers, interference_violates, &ctx);
  rep.trials = trials;
  rep.empirical_probability =
      static_cast<double>(rep.violations) / static_cast<double>(trials);
  rep.seed = seed;
  rep.config = {{"kind", "hoeffding"}, {"D", D}, {"alpha", alpha}};
  return rep;
}

double cleanup_noise_bound(const std::vector<Vec>& values, ConstSpan omega, std::size_t k,
                           double alpha) {
  require(!values.empty(), "cleanup_noise_bound: no values");
  require(k < values.size(), "cleanup_noise_bound: channel index out of range");
  require(alpha > 0.0, "cleanup_noise_bound: alpha must be positive");
  for (const auto& v : values)
    require(v.size() == omega.size(), "cleanup_noise_bound: dimension mismatch");
  if (values.size() == 1) return 0.0;

  double signal = dot(values[k], omega);
  require(signal != 0.0, "cleanup_noise_bound: <x_k, Omega> must be nonzero");

  double denom = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == k) continue;
    for (std::size_t d = 0; d < omega.size(); ++d) {
      double t = values[i][d] * omega[d];
      denom += t * t;
    }
  }
  if (denom == 0.0) return 0.0;  // no interference mass at all
  return clamp01(2.0 * std::exp(-(alpha * alpha * signal * signal) / (2.0 * denom)));
}

namespace {

struct CleanupCtx {
  const std::vector<Vec>* values;
  ConstSpan omega;
  std::size_t k;
  double alpha;
};

bool cleanup_violates(SplitRng& rng, const void* p) {
  const auto& ctx = *static_cast<const CleanupCtx*>(p);
  const auto& values = *ctx.values;
  std::size_t n = values.size();
  std::size_t dim = ctx.omega.size();
  // s = sum_i a_i . x_i with fresh bipolar keys; deviation event is
  // |<s, a_k . Omega> - <x_k, Omega>| > alpha |<x_k, Omega>|.
  Vec ak(dim);
  Vec noise_acc(dim, 0.0);
  double signal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == ctx.k) {
      for (std::size_t d = 0; d < dim; ++d) {
        ak[d] = rng.rademacher();
        signal += values[i][d] * ctx.omega[d];
      }
    } else {
      for (std::size_t d = 0; d < dim; ++d) noise_acc[d] += rng.rademacher() * values[i][d];
    }
  }
  double noise = 0.0;
  for (std::size_t d = 0; d < dim; ++d) noise += noise_acc[d] * ak[d] * ctx.omega[d];
  return std::abs(noise) > ctx.alpha * std::abs(signal);
}

}  // namespace

BoundReport estimate_cleanup_distortion(const std::vector<Vec>& values, ConstSpan omega,
                                        std::size_t k, double alpha, std::uint64_t trials,
                                        std::uint64_t seed, int workers) {
  BoundReport rep;
  rep.bound_value = cleanup_noise_bound(values, omega, k, alpha);
  CleanupCtx ctx{&values, omega, k, alpha};
  if (values.size() == 1) {
    rep.violations = 0;  // exact retrieval, nothing to sample
  } else {
    rep.violations = count_violations(trials, seed, workers, cleanup_violates, &ctx);
  }
  rep.trials = trials;
  rep.empirical_probability =
      static_cast<double>(rep.violations) / static_cast<double>(trials);
  rep.seed = seed;
  rep.config = {{"kind", "cleanup"},
                {"N", values.size()},
                {"D", omega.size()},
                {"k", k},
                {"alpha", alpha}};
  return rep;
}

double FavorSBounds::min_bound() const {
  return std::min(std::min(markov_rows, markov_cols), std::min(chebyshev, hoeffding));
}

FavorSBounds favor_s_interference_bounds(const VecGrid& kbar, const VecGrid& qbar, std::size_t u,
                                         std::size_t n, double alpha) {
  require(kbar.m == qbar.m && kbar.n == qbar.n && kbar.dim == qbar.dim,
          "favor_s_interference_bounds: grid shape mismatch");
  require(u < kbar.m && n < kbar.n, "favor_s_interference_bounds: channel index out of range");
  require(alpha > 0.0, "favor_s_interference_bounds: alpha must be positive");
  std::size_t M = kbar.m, N = kbar.n;

  double signal = dot(kbar.at(u, n), qbar.at(u, n));
  require(signal != 0.0, "favor_s_interference_bounds: intended signal inner product is zero");

  // Xi[(u,w),(t,n)] = alpha^2 signal^2 / |kbar^{(u,w)} . qbar^{(t,n)}|^2 over
  // all cross pairs; the diagonal (t,w) == (u,n) is the signal itself.
  FavorSBounds b;
  double num = alpha * alpha * signal * signal;
  double nm1 = static_cast<double>(N * M - 1);
  if (N * M < 2) return b;  // no cross terms, every bound is an empty sum

  double sum_inv = 0.0;
  double sum_exp = 0.0;
  Vec col_inv(M, 0.0);  // indexed by t, summed over w
  for (std::size_t w = 0; w < N; ++w) {
    double row_inv = 0.0;
    for (std::size_t t = 0; t < M; ++t) {
      if (t == u && w == n) continue;
      double h2 = 0.0;
      ConstSpan kv = kbar.at(u, w);
      ConstSpan qv = qbar.at(t, n);
      for (std::size_t d = 0; d < kbar.dim; ++d) {
        double x = kv[d] * qv[d];
        h2 += x * x;
      }
      if (h2 == 0.0) continue;  // Xi = +inf contributes nothing
      double inv_xi = h2 / num;
      row_inv += inv_xi;
      col_inv[t] += inv_xi;
      sum_inv += inv_xi;
      sum_exp += std::exp(-num / (h2 * 2.0 * nm1 * nm1));
    }
    b.markov_rows += std::sqrt(row_inv);
  }
  for (std::size_t t = 0; t < M; ++t) b.markov_cols += std::sqrt(col_inv[t]);
  b.chebyshev = sum_inv;
  b.hoeffding = 2.0 * sum_exp;

  b.markov_rows = clamp01(b.markov_rows);
  b.markov_cols = clamp01(b.markov_cols);
  b.chebyshev = clamp01(b.chebyshev);
  b.hoeffding = clamp01(b.hoeffding);
  return b;
}

namespace {

struct FavorSCtx {
  const VecGrid* kbar;
  const VecGrid* qbar;
  std::size_t u, n;
  double alpha;
};

bool favor_s_violates(SplitRng& rng, const void* p) {
  const auto& ctx = *static_cast<const FavorSCtx*>(p);
  const VecGrid& kbar = *ctx.kbar;
  const VecGrid& qbar = *ctx.qbar;
  std::size_t M = kbar.m, N = kbar.n, dim = kbar.dim;

  // Bind each channel with a fresh bipolar key, superpose row u of the keys
  // and column n of the queries, and test the inner-product distortion.
  Vec keysum(dim, 0.0), querysum(dim, 0.0);
  std::vector<Vec> keys(M * N, Vec(dim));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t j = 0; j < N; ++j) {
      Vec& a = keys[m * N + j];
      for (std::size_t d = 0; d < dim; ++d) a[d] = rng.rademacher();
    }
  for (std::size_t w = 0; w < N; ++w) {
    ConstSpan kv = kbar.at(ctx.u, w);
    const Vec& a = keys[ctx.u * N + w];
    for (std::size_t d = 0; d < dim; ++d) keysum[d] += kv[d] * a[d];
  }
  for (std::size_t t = 0; t < M; ++t) {
    ConstSpan qv = qbar.at(t, ctx.n);
    const Vec& a = keys[t * N + ctx.n];
    for (std::size_t d = 0; d < dim; ++d) querysum[d] += qv[d] * a[d];
  }
  double observed = dot(keysum, querysum);
  double signal = dot(kbar.at(ctx.u, ctx.n), qbar.at(ctx.u, ctx.n));
  return std::abs(observed - signal) > ctx.alpha * std::abs(signal);
}

}  // namespace

BoundReport estimate_favor_s_distortion(const VecGrid& kbar, const VecGrid& qbar, std::size_t u,
                                        std::size_t n, double alpha, std::uint64_t trials,
                                        std::uint64_t seed, int workers) {
  FavorSBounds bounds = favor_s_interference_bounds(kbar, qbar, u, n, alpha);
  BoundReport rep;
  rep.bound_value = bounds.min_bound();
  FavorSCtx ctx{&kbar, &qbar, u, n, alpha};
  if (kbar.m * kbar.n == 1) {
    rep.violations = 0;  // single channel, binding cancels exactly
  } else {
    rep.violations = count_violations(trials, seed, workers, favor_s_violates, &ctx);
  }
  rep.trials = trials;
  rep.empirical_probability =
      static_cast<double>(rep.violations) / static_cast<double>(trials);
  rep.seed = seed;
  rep.config = {{"kind", "favor_s"}, {"M", kbar.m}, {"N", kbar.n},
                {"D", kbar.dim},     {"u", u},      {"n", n},
                {"alpha", alpha},
                {"bounds", {{"markov_rows", bounds.markov_rows},
                            {"markov_cols", bounds.markov_cols},
                            {"chebyshev", bounds.chebyshev},
                            {"hoeffding", bounds.hoeffding}}}};
  return rep;
}

std::pair<double, double> hadamard_norm_stats(std::size_t D, std::uint64_t trials,
                                              std::uint64_t seed, double beta) {
  require(D >= 1, "hadamard_norm_stats: D must be positive");
  require(trials >= 1, "hadamard_norm_stats: trials must be positive");
  require(beta > 0.0, "hadamard_norm_stats: beta must be positive");
  SplitRng root(seed, 0x6861u);
  Vec x = root.substream(~0ull).unit_sphere(D);
  double threshold = (1.0 + beta) / static_cast<double>(D);
  double mean_acc = 0.0;
  std::uint64_t below = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    SplitRng trial = root.substream(t);
    Vec y = trial.unit_sphere(D);
    double sq = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      double v = x[d] * y[d];
      sq += v * v;
    }
    mean_acc += sq;
    if (sq <= threshold) ++below;
  }
  return {mean_acc / static_cast<double>(trials),
          static_cast<double>(below) / static_cast<double>(trials)};
}

}  // namespace mimo
