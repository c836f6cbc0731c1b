#pragma once

#include <cstdint>
#include <vector>

#include "mimo/common.hpp"

namespace mimo {

enum class KeyKind { Bipolar, Gaussian };

// A binding/unbinding key. Bipolar entries are in {-1,+1}; Gaussian entries
// are drawn N(0, 1/D) so keys are unit norm in expectation.
struct KeyVector {
  std::size_t dim = 0;
  KeyKind kind = KeyKind::Bipolar;
  Vec entries;
};

// Square unbinding matrix (matrix-binding-of-additive-terms style).
struct UnbindMatrix {
  std::size_t dim = 0;
  Vec entries;  // dim x dim, row-major

  double at(std::size_t r, std::size_t c) const { return entries[r * dim + c]; }
  double& at(std::size_t r, std::size_t c) { return entries[r * dim + c]; }
};

// Elementwise sum of bound items plus bookkeeping.
struct Superposition {
  Vec payload;
  std::size_t channel_count = 0;
  std::uint64_t key_family_seed = 0;
};

struct CleanupResult {
  std::size_t index = 0;
  Vec scores;
};

/// Deterministic key for (seed, dim, kind). Bipolar signs come straight off
/// the PRNG stream; Gaussian entries are N(0, 1/D).
KeyVector gen_key(std::uint64_t seed, std::size_t dim, KeyKind kind);

Vec bind_hadamard(const KeyVector& key, ConstSpan x);

/// Same elementwise product as bind_hadamard. Exact inverse for bipolar keys;
/// for Gaussian keys this is not an inverse, just the definitional product.
Vec unbind_hadamard(const KeyVector& key, ConstSpan y);

/// Direct O(D^2) circular convolution: out_d = sum_j a_j x_{(d-j) mod D}.
Vec circular_convolve(ConstSpan a, ConstSpan x);

/// Circular correlation: out_d = sum_j a_j y_{(d+j) mod D}. Approximate
/// inverse of circular_convolve for unit-norm quasi-orthogonal keys.
Vec circular_correlate(ConstSpan a, ConstSpan y);

/// Position-wise HRR: circularly convolve every spatial channel fiber with
/// the key. Requires key.dim == x.c.
Tensor3 bind_pwhrr(const KeyVector& key, const Tensor3& x);

/// out = m * h.
Vec unbind_mbat(const UnbindMatrix& m, ConstSpan h);

/// Exact inverse of the circulant operator x -> circular_convolve(key, x),
/// obtained by solving the D x D linear system. Throws if singular.
UnbindMatrix circulant_inverse(const KeyVector& key);

Superposition superpose(const std::vector<Vec>& items, std::uint64_t key_family_seed = 0);

/// Scores s against key-bound dictionary entries; argmax with lowest-index
/// tie-breaking.
CleanupResult dictionary_cleanup(ConstSpan s, const KeyVector& key,
                                 const std::vector<Vec>& dictionary);

/// mu/C(N,2) * sum_{i<j} cos^2(a_i, a_j) + mu/N * sum_i (|a_i| - 1)^2.
/// Zero-norm keys are rejected.
double key_orthogonality_loss(const std::vector<KeyVector>& keys, double mu);

}  // namespace mimo
