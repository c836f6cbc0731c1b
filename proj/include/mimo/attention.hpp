#pragma once

#include <cstdint>
#include <vector>

#include "mimo/common.hpp"
#include "mimo/vsa.hpp"

namespace mimo {

enum class FeatureKind { ReluMap, PositiveSoftmaxMap };
enum class RowScheme { IID, OrthogonalBlocks };

// Random-feature projection phi: R^D -> R_+^R.
//   ReluMap:            phi_i(x) = ReLU(w_i^T x) / sqrt(R sqrt(D))
//   PositiveSoftmaxMap: phi_i(x) = exp(w_i^T x / D^{1/4} - |x|^2/(2 sqrt(D))) / sqrt(R)
// With OrthogonalBlocks, rows are drawn in blocks of D from the orthogonal
// group and rescaled to chi_D norms, so each row is still marginally N(0, I).
struct FeatureMapSpec {
  std::size_t R = 0, D = 0;
  FeatureKind kind = FeatureKind::ReluMap;
  RowScheme rows = RowScheme::IID;
  Matrix projection;  // R x D
  std::uint64_t seed = 0;
};

FeatureMapSpec build_feature_map(std::uint64_t seed, std::size_t R, std::size_t D,
                                 FeatureKind kind, RowScheme rows);

/// phi(x); if mult_count is non-null it is incremented by the number of
/// multiplies (and divisions) actually performed.
Vec apply_feature_map(const FeatureMapSpec& fm, ConstSpan x,
                      std::uint64_t* mult_count = nullptr);

// One attention problem: keys, queries, values are L x D.
struct AttentionInstance {
  std::size_t L = 0, D = 0;
  Matrix keys, queries, values;
};

/// Softmax attention with scores <k_j, q_i>/sqrt(D), stabilized by per-query
/// max subtraction. Output is L x D.
Matrix exact_softmax_attention(const AttentionInstance& inst);

/// E[ReLU(w^T x) ReLU(w^T y)] for w ~ N(0, I):
/// (<x,y> + |x||y| g(rho)) / 4 with
/// g(rho) = (2/pi)(sqrt(1-rho^2) + |rho| arctan(|rho|/sqrt(1-rho^2))).
double relu_kernel_closed_form(ConstSpan x, ConstSpan y);

struct FavorOutput {
  Matrix out;                 // L x D
  bool denom_floored = false; // some denominator hit the 1e-12 floor
  std::uint64_t multiplies = 0;
};

/// FAVOR+ linear attention: A = sum_j v_j phi(k_j)^T and C = sum_j phi(k_j)
/// are built once, then each query costs one matrix-vector product.
FavorOutput favor_plus(const AttentionInstance& inst, const FeatureMapSpec& fm);

// M x N grid of attention channels plus one bipolar protection key per cell.
struct ChannelGrid {
  std::size_t M = 0, N = 0, L = 0, D = 0;
  std::vector<AttentionInstance> cells;  // M*N, row-major (m, n)
  std::vector<KeyVector> keys;           // M*N bipolar keys of dim D

  AttentionInstance& cell(std::size_t m, std::size_t n) { return cells[m * N + n]; }
  const AttentionInstance& cell(std::size_t m, std::size_t n) const { return cells[m * N + n]; }
  KeyVector& key(std::size_t m, std::size_t n) { return keys[m * N + n]; }
  const KeyVector& key(std::size_t m, std::size_t n) const { return keys[m * N + n]; }
};

/// Random grid helper: unit-scale tokens, fresh bipolar keys.
ChannelGrid make_channel_grid(std::size_t M, std::size_t N, std::size_t L, std::size_t D,
                              std::uint64_t seed, double token_scale = 1.0);

/// Elementwise-multiplies every key/query/value token of cell (m,n) by the
/// cell key. Involutive for bipolar keys.
ChannelGrid bind_grid(const ChannelGrid& grid);

struct FavorSOutput {
  std::size_t M = 0, N = 0, L = 0, D = 0;
  std::vector<Matrix> S;  // N entries, each L x D
  Vec B;                  // M x N x L, indexed (m * N + n) * L + i
  bool denom_floored = false;
  std::uint64_t multiplies = 0;

  double b_at(std::size_t m, std::size_t n, std::size_t i) const {
    return B[(m * N + n) * L + i];
  }
};

/// Attention in superposition over the 2D channel grid. A_s and the per-row
/// feature sums are built once; each superposed query feature vector is
/// shared between the S product and all M normalizers.
FavorSOutput favor_plus_s(const ChannelGrid& bound, const FeatureMapSpec& fm);

/// Attention-only readout: o^{(m,n)} = (S^{(n)} . a^{(m,n)}) / B^{(m,n)}.
/// Returns M*N matrices (L x D) in (m, n) row-major order.
std::vector<Matrix> unbind_attention_only(const FavorSOutput& s,
                                          const std::vector<KeyVector>& keys);

/// Joint normalization for the att.+MLP variant:
/// Sbar^{(n)} = S^{(n)} / sum_m B^{(m,n)}. Returns N matrices (L x D).
std::vector<Matrix> joint_normalize(const FavorSOutput& s);

enum class LayerMode { AttOnly, AttMlp };

// Weights of one MIMOFormer layer (no biases, ReLU MLP).
struct MimoformerParams {
  std::size_t E = 0, heads = 1, hidden = 0, R = 0;
  Matrix Wq, Wk, Wv, Wo;  // E x E
  Matrix W1;              // E x hidden
  Matrix W2;              // hidden x E
};

MimoformerParams random_mimoformer_params(std::uint64_t seed, std::size_t E, std::size_t heads,
                                          std::size_t hidden, std::size_t R);

// Frozen per-layer randomness: one bipolar key set protecting the FAVOR+S
// tokens, a second one for the skip superposition and final unbinding, and
// the random-feature projection (R x D_head).
struct MimoformerLayerState {
  std::vector<KeyVector> bind_keys;  // M*N, dim E
  std::vector<KeyVector> skip_keys;  // M*N, dim E
  FeatureMapSpec feature_map;
};

MimoformerLayerState make_mimoformer_state(std::uint64_t seed, std::size_t M, std::size_t N,
                                           const MimoformerParams& p);

/// One layer over M*N per-channel token arrays (each L x E). AttOnly unbinds
/// right after attention and runs the linear/MLP per channel; AttMlp keeps
/// the N superposed streams through the linear and MLP and unbinds at the
/// layer output.
std::vector<Matrix> mimoformer_layer(const std::vector<Matrix>& tokens, std::size_t M,
                                     std::size_t N, const MimoformerParams& p, LayerMode mode,
                                     const MimoformerLayerState& state);

/// Convenience overload deriving the frozen state from the seed.
std::vector<Matrix> mimoformer_layer(const std::vector<Matrix>& tokens, std::size_t M,
                                     std::size_t N, const MimoformerParams& p, LayerMode mode,
                                     std::uint64_t seed);

}  // namespace mimo
