#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mimo/common.hpp"

namespace mimo {

// Closed-form concentration bound paired with a matched Monte Carlo estimate.
// bound_value is clamped to <= 1 (a probability report should not exceed 1).
struct BoundReport {
  double bound_value = 0.0;
  double empirical_probability = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  std::uint64_t seed = 0;
  nlohmann::json config;

  nlohmann::json to_json() const;

  /// Binomial standard error of the empirical probability.
  double standard_error() const;

  /// empirical <= bound + 3 * SE; finite-trial noise cannot fail the check.
  bool dominated() const { return empirical_probability <= bound_value + 3.0 * standard_error(); }
};

/// min(1, 2 exp(-D alpha^2 / 2)): probability that two independent bipolar
/// vectors have |cos angle| >= alpha.
double hoeffding_orthogonality_bound(std::size_t D, double alpha);

/// Draws independent bipolar pairs and counts |cos| >= alpha events.
BoundReport estimate_interference_probability(std::size_t D, double alpha, std::uint64_t trials,
                                              std::uint64_t seed, int workers = 1);

/// Dictionary-cleanup noise bound: 2 exp(-alpha^2 <x_k,Omega>^2 /
/// (2 sum_{i != k} |x_i . Omega|^2)), clamped to 1. N == 1 has no
/// interference terms and returns 0.
double cleanup_noise_bound(const std::vector<Vec>& values, ConstSpan omega, std::size_t k,
                           double alpha);

/// Resamples bipolar keys per trial, forms the superposition, and counts
/// deviations of <s, a_k . Omega> outside [1-alpha, 1+alpha] <x_k, Omega>.
BoundReport estimate_cleanup_distortion(const std::vector<Vec>& values, ConstSpan omega,
                                        std::size_t k, double alpha, std::uint64_t trials,
                                        std::uint64_t seed, int workers = 1);

// M x N grid of equal-length vectors (rows m, columns n).
struct VecGrid {
  std::size_t m = 0, n = 0, dim = 0;
  Vec data;

  VecGrid() = default;
  VecGrid(std::size_t m_, std::size_t n_, std::size_t dim_)
      : m(m_), n(n_), dim(dim_), data(m_ * n_ * dim_, 0.0) {}

  ConstSpan at(std::size_t i, std::size_t j) const {
    return ConstSpan(data).subspan((i * n + j) * dim, dim);
  }
  std::span<double> at(std::size_t i, std::size_t j) {
    return std::span<double>(data).subspan((i * n + j) * dim, dim);
  }
};

// The four tail bounds on inter-channel attention distortion, each clamped
// to [0,1]: two Markov/Khintchine forms, a Chebyshev form, and a Hoeffding
// form with the (NM-1)^2 union split.
struct FavorSBounds {
  double markov_rows = 0.0;
  double markov_cols = 0.0;
  double chebyshev = 0.0;
  double hoeffding = 0.0;

  double min_bound() const;
};

FavorSBounds favor_s_interference_bounds(const VecGrid& kbar, const VecGrid& qbar, std::size_t u,
                                         std::size_t n, double alpha);

/// Fresh i.i.d. bipolar channel keys per trial; counts distortions of the
/// superposed key/query inner product relative to the intended diagonal
/// signal. bound_value is the min of the four closed-form bounds.
BoundReport estimate_favor_s_distortion(const VecGrid& kbar, const VecGrid& qbar, std::size_t u,
                                        std::size_t n, double alpha, std::uint64_t trials,
                                        std::uint64_t seed, int workers = 1);

/// X a fixed unit vector, Y uniform on the sphere per trial. Returns the
/// empirical mean of |X . Y|_2^2 (expected 1/D) and the empirical
/// P{ |X . Y|_2^2 <= (1+beta)/D } (Markov gives >= 1/(1+1/beta)).
std::pair<double, double> hadamard_norm_stats(std::size_t D, std::uint64_t trials,
                                              std::uint64_t seed, double beta);

}  // namespace mimo
