#include "mimo/attention.hpp"

#include <algorithm>
#include <cmath>

#include "mimo/prng.hpp"

namespace mimo {

namespace {

constexpr double kDenomFloor = 1e-12;
constexpr double kPi = 3.14159265358979323846;

void orthonormalize_block(Matrix& w, std::size_t row0, std::size_t nrows, std::size_t D,
                          SplitRng& rng) {
  // Modified Gram-Schmidt; a degenerate row is redrawn (probability-zero
  // event for Gaussian draws, but cheap to guard).
  for (std::size_t i = 0; i < nrows; ++i) {
    for (;;) {
      auto ri = w.row(row0 + i);
      for (std::size_t j = 0; j < i; ++j) {
        auto rj = w.row(row0 + j);
        double p = dot(ri, rj);
        for (std::size_t d = 0; d < D; ++d) ri[d] -= p * rj[d];
      }
      double n = norm2(ri);
      if (n > 1e-8) {
        for (std::size_t d = 0; d < D; ++d) ri[d] /= n;
        break;
      }
      for (std::size_t d = 0; d < D; ++d) ri[d] = rng.gaussian();
    }
  }
}

}  // namespace

FeatureMapSpec build_feature_map(std::uint64_t seed, std::size_t R, std::size_t D,
                                 FeatureKind kind, RowScheme rows) {
  require(R >= 1 && D >= 1, "build_feature_map: R and D must be positive");
  FeatureMapSpec fm;
  fm.R = R;
  fm.D = D;
  fm.kind = kind;
  fm.rows = rows;
  fm.seed = seed;
  fm.projection = Matrix(R, D);
  SplitRng root(seed, 0x666du);

  if (rows == RowScheme::IID) {
    SplitRng g = root.substream(0);
    for (auto& v : fm.projection.a) v = g.gaussian();
    return fm;
  }

  // Orthogonal blocks of size D; the final partial block keeps the leading
  // rows of a full orthogonal set. chi_D row norms keep rows marginally
  // N(0, I_D).
  std::size_t done = 0;
  std::uint64_t block_id = 0;
  while (done < R) {
    std::size_t nrows = std::min(D, R - done);
    SplitRng g = root.substream(1 + block_id);
    Matrix block(D, D);
    for (auto& v : block.a) v = g.gaussian();
    orthonormalize_block(block, 0, D, D, g);
    SplitRng cg = root.substream(0x10000 + block_id);
    for (std::size_t i = 0; i < nrows; ++i) {
      double chi2 = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        double z = cg.gaussian();
        chi2 += z * z;
      }
      double scale = std::sqrt(chi2);
      for (std::size_t d = 0; d < D; ++d) fm.projection(done + i, d) = scale * block(i, d);
    }
    done += nrows;
    ++block_id;
  }
  return fm;
}

Vec apply_feature_map(const FeatureMapSpec& fm, ConstSpan x, std::uint64_t* mult_count) {
  require(x.size() == fm.D, "apply_feature_map: input dimension mismatch");
  Vec phi(fm.R);
  std::uint64_t mults = 0;
  if (fm.kind == FeatureKind::ReluMap) {
    double scale = 1.0 / std::sqrt(static_cast<double>(fm.R) *
                                   std::sqrt(static_cast<double>(fm.D)));
    for (std::size_t r = 0; r < fm.R; ++r) {
      double s = dot(fm.projection.row(r), x);
      phi[r] = s > 0.0 ? s * scale : 0.0;
    }
    mults += fm.R * fm.D + fm.R;
  } else {
    double d = static_cast<double>(fm.D);
    double arg_scale = 1.0 / std::pow(d, 0.25);
    double nx2 = 0.0;
    for (double v : x) nx2 += v * v;
    double offset = -nx2 / (2.0 * std::sqrt(d));
    double out_scale = 1.0 / std::sqrt(static_cast<double>(fm.R));
    for (std::size_t r = 0; r < fm.R; ++r) {
      double s = dot(fm.projection.row(r), x);
      phi[r] = std::exp(s * arg_scale + offset) * out_scale;
    }
    mults += fm.R * fm.D + 2 * fm.R + fm.D;
  }
  if (mult_count) *mult_count += mults;
  return phi;
}

Matrix exact_softmax_attention(const AttentionInstance& inst) {
  require(inst.L >= 1, "exact_softmax_attention: empty sequence");
  require(inst.keys.rows == inst.L && inst.queries.rows == inst.L && inst.values.rows == inst.L,
          "exact_softmax_attention: row count mismatch");
  require(inst.keys.cols == inst.D && inst.queries.cols == inst.D && inst.values.cols == inst.D,
          "exact_softmax_attention: column count mismatch");
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(inst.D));
  Matrix out(inst.L, inst.D);
  Vec scores(inst.L);
  for (std::size_t i = 0; i < inst.L; ++i) {
    double mx = -1e308;
    for (std::size_t j = 0; j < inst.L; ++j) {
      scores[j] = dot(inst.keys.row(j), inst.queries.row(i)) * inv_sqrt_d;
      mx = std::max(mx, scores[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < inst.L; ++j) {
      scores[j] = std::exp(scores[j] - mx);
      z += scores[j];
    }
    for (std::size_t j = 0; j < inst.L; ++j) {
      double wgt = scores[j] / z;
      auto vj = inst.values.row(j);
      for (std::size_t d = 0; d < inst.D; ++d) out(i, d) += wgt * vj[d];
    }
  }
  return out;
}

double relu_kernel_closed_form(ConstSpan x, ConstSpan y) {
  require(x.size() == y.size(), "relu_kernel_closed_form: dimension mismatch");
  double nx = norm2(x), ny = norm2(y);
  require(nx > 0.0 && ny > 0.0, "relu_kernel_closed_form: zero-norm input");
  double rho = dot(x, y) / (nx * ny);
  rho = std::clamp(rho, -1.0, 1.0);
  double r = std::abs(rho);
  double g;
  if (r >= 1.0) {
    g = 1.0;  // limit of the arctan term
  } else {
    double root = std::sqrt(1.0 - r * r);
    g = (2.0 / kPi) * (root + r * std::atan2(r, root));
  }
  return (dot(x, y) + nx * ny * g) / 4.0;
}

FavorOutput favor_plus(const AttentionInstance& inst, const FeatureMapSpec& fm) {
  require(fm.D == inst.D, "favor_plus: feature map dimension mismatch");
  FavorOutput res;
  res.out = Matrix(inst.L, inst.D);

  // A (D x R) and C (R) are accumulated once over the sequence.
  Matrix A(inst.D, fm.R);
  Vec C(fm.R, 0.0);
  for (std::size_t j = 0; j < inst.L; ++j) {
    Vec phik = apply_feature_map(fm, inst.keys.row(j), &res.multiplies);
    auto vj = inst.values.row(j);
    for (std::size_t d = 0; d < inst.D; ++d) {
      double v = vj[d];
      auto arow = A.row(d);
      for (std::size_t r = 0; r < fm.R; ++r) arow[r] += v * phik[r];
    }
    res.multiplies += inst.D * fm.R;
    for (std::size_t r = 0; r < fm.R; ++r) C[r] += phik[r];
  }

  for (std::size_t i = 0; i < inst.L; ++i) {
    Vec phiq = apply_feature_map(fm, inst.queries.row(i), &res.multiplies);
    double denom = dot(C, phiq);
    res.multiplies += fm.R;
    if (denom < kDenomFloor) {
      denom = kDenomFloor;
      res.denom_floored = true;
    }
    for (std::size_t d = 0; d < inst.D; ++d) {
      res.out(i, d) = dot(A.row(d), phiq) / denom;
    }
    res.multiplies += inst.D * fm.R + inst.D;
  }
  return res;
}

ChannelGrid make_channel_grid(std::size_t M, std::size_t N, std::size_t L, std::size_t D,
                              std::uint64_t seed, double token_scale) {
  require(M >= 1 && N >= 1 && L >= 1 && D >= 1, "make_channel_grid: bad shape");
  ChannelGrid g;
  g.M = M;
  g.N = N;
  g.L = L;
  g.D = D;
  g.cells.resize(M * N);
  g.keys.resize(M * N);
  SplitRng root(seed, 0x6772u);
  double scale = token_scale / std::sqrt(static_cast<double>(D));
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      AttentionInstance& cell = g.cell(m, n);
      cell.L = L;
      cell.D = D;
      cell.keys = Matrix(L, D);
      cell.queries = Matrix(L, D);
      cell.values = Matrix(L, D);
      SplitRng cg = root.substream(m * N + n);
      for (auto& v : cell.keys.a) v = cg.gaussian() * scale;
      for (auto& v : cell.queries.a) v = cg.gaussian() * scale;
      for (auto& v : cell.values.a) v = cg.gaussian();
      g.key(m, n) = gen_key(root.substream(0x4000 + m * N + n).next_u64(), D, KeyKind::Bipolar);
    }
  }
  return g;
}

ChannelGrid bind_grid(const ChannelGrid& grid) {
  ChannelGrid out = grid;
  for (std::size_t m = 0; m < grid.M; ++m) {
    for (std::size_t n = 0; n < grid.N; ++n) {
      const KeyVector& a = grid.key(m, n);
      require(a.dim == grid.D, "bind_grid: key dimension mismatch");
      AttentionInstance& cell = out.cell(m, n);
      for (std::size_t j = 0; j < grid.L; ++j) {
        auto kr = cell.keys.row(j);
        auto qr = cell.queries.row(j);
        auto vr = cell.values.row(j);
        for (std::size_t d = 0; d < grid.D; ++d) {
          kr[d] *= a.entries[d];
          qr[d] *= a.entries[d];
          vr[d] *= a.entries[d];
        }
      }
    }
  }
  return out;
}

FavorSOutput favor_plus_s(const ChannelGrid& bound, const FeatureMapSpec& fm) {
  require(fm.D == bound.D, "favor_plus_s: feature map dimension mismatch");
  std::size_t M = bound.M, N = bound.N, L = bound.L, D = bound.D;
  FavorSOutput res;
  res.M = M;
  res.N = N;
  res.L = L;
  res.D = D;
  res.B.assign(M * N * L, 0.0);

  // Row-superposed keys and values: K_j^{(u)} = sum_w k_j^{(u,w)} and
  // V_j^{(u)} = sum_q v_j^{(u,q)} (additions only).
  Matrix A_s(D, fm.R);
  std::vector<Vec> Cs(M, Vec(fm.R, 0.0));  // C_s^{(m)}
  Vec ksum(D), vsum(D);
  for (std::size_t u = 0; u < M; ++u) {
    for (std::size_t j = 0; j < L; ++j) {
      std::fill(ksum.begin(), ksum.end(), 0.0);
      std::fill(vsum.begin(), vsum.end(), 0.0);
      for (std::size_t w = 0; w < N; ++w) {
        auto kr = bound.cell(u, w).keys.row(j);
        auto vr = bound.cell(u, w).values.row(j);
        for (std::size_t d = 0; d < D; ++d) {
          ksum[d] += kr[d];
          vsum[d] += vr[d];
        }
      }
      Vec phik = apply_feature_map(fm, ksum, &res.multiplies);
      for (std::size_t d = 0; d < D; ++d) {
        double v = vsum[d];
        auto arow = A_s.row(d);
        for (std::size_t r = 0; r < fm.R; ++r) arow[r] += v * phik[r];
      }
      res.multiplies += D * fm.R;
      Vec& cs = Cs[u];
      for (std::size_t r = 0; r < fm.R; ++r) cs[r] += phik[r];
    }
  }

  // Column-superposed queries; phi of each superposed query is computed once
  // and shared between S and all M normalizers.
  res.S.assign(N, Matrix(L, D));
  Vec qsum(D);
  for (std::size_t n = 0; n < N; ++n) {
    Matrix& Sn = res.S[n];
    for (std::size_t i = 0; i < L; ++i) {
      std::fill(qsum.begin(), qsum.end(), 0.0);
      for (std::size_t t = 0; t < M; ++t) {
        auto qr = bound.cell(t, n).queries.row(i);
        for (std::size_t d = 0; d < D; ++d) qsum[d] += qr[d];
      }
      Vec phiq = apply_feature_map(fm, qsum, &res.multiplies);
      for (std::size_t d = 0; d < D; ++d) Sn(i, d) = dot(A_s.row(d), phiq);
      res.multiplies += D * fm.R;
      for (std::size_t m = 0; m < M; ++m) {
        res.B[(m * N + n) * L + i] = dot(Cs[m], phiq);
        res.multiplies += fm.R;
      }
    }
  }
  return res;
}

std::vector<Matrix> unbind_attention_only(const FavorSOutput& s,
                                          const std::vector<KeyVector>& keys) {
  require(keys.size() == s.M * s.N, "unbind_attention_only: key count mismatch");
  std::vector<Matrix> out(s.M * s.N, Matrix(s.L, s.D));
  for (std::size_t m = 0; m < s.M; ++m) {
    for (std::size_t n = 0; n < s.N; ++n) {
      const KeyVector& a = keys[m * s.N + n];
      require(a.dim == s.D, "unbind_attention_only: key dimension mismatch");
      Matrix& o = out[m * s.N + n];
      const Matrix& Sn = s.S[n];
      for (std::size_t i = 0; i < s.L; ++i) {
        double b = std::max(s.b_at(m, n, i), kDenomFloor);
        for (std::size_t d = 0; d < s.D; ++d) o(i, d) = Sn(i, d) * a.entries[d] / b;
      }
    }
  }
  return out;
}

std::vector<Matrix> joint_normalize(const FavorSOutput& s) {
  std::vector<Matrix> out(s.N, Matrix(s.L, s.D));
  for (std::size_t n = 0; n < s.N; ++n) {
    Matrix& o = out[n];
    const Matrix& Sn = s.S[n];
    for (std::size_t i = 0; i < s.L; ++i) {
      double b = 0.0;
      for (std::size_t m = 0; m < s.M; ++m) b += s.b_at(m, n, i);
      if (b < kDenomFloor) b = kDenomFloor;
      for (std::size_t d = 0; d < s.D; ++d) o(i, d) = Sn(i, d) / b;
    }
  }
  return out;
}

namespace {

Matrix matmul(const Matrix& x, const Matrix& w) {
  Matrix out(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < x.cols; ++k) {
      double v = x(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < w.cols; ++j) out(i, j) += v * w(k, j);
    }
  }
  return out;
}

Matrix gaussian_matrix(SplitRng& g, std::size_t r, std::size_t c, double scale) {
  Matrix m(r, c);
  for (auto& v : m.a) v = g.gaussian() * scale;
  return m;
}

}  // namespace

MimoformerParams random_mimoformer_params(std::uint64_t seed, std::size_t E, std::size_t heads,
                                          std::size_t hidden, std::size_t R) {
  require(E % heads == 0, "random_mimoformer_params: E must be divisible by heads");
  MimoformerParams p;
  p.E = E;
  p.heads = heads;
  p.hidden = hidden;
  p.R = R;
  SplitRng root(seed, 0x6d66u);
  double se = 1.0 / std::sqrt(static_cast<double>(E));
  double sh = 1.0 / std::sqrt(static_cast<double>(hidden));
  SplitRng g0 = root.substream(0);
  p.Wq = gaussian_matrix(g0, E, E, se);
  SplitRng g1 = root.substream(1);
  p.Wk = gaussian_matrix(g1, E, E, se);
  SplitRng g2 = root.substream(2);
  p.Wv = gaussian_matrix(g2, E, E, se);
  SplitRng g3 = root.substream(3);
  p.Wo = gaussian_matrix(g3, E, E, se);
  SplitRng g4 = root.substream(4);
  p.W1 = gaussian_matrix(g4, E, hidden, se);
  SplitRng g5 = root.substream(5);
  p.W2 = gaussian_matrix(g5, hidden, E, sh);
  return p;
}

MimoformerLayerState make_mimoformer_state(std::uint64_t seed, std::size_t M, std::size_t N,
                                           const MimoformerParams& p) {
  MimoformerLayerState st;
  SplitRng root(seed, 0x6c79u);
  st.bind_keys.resize(M * N);
  st.skip_keys.resize(M * N);
  for (std::size_t c = 0; c < M * N; ++c) {
    st.bind_keys[c] = gen_key(root.substream(c).next_u64(), p.E, KeyKind::Bipolar);
    st.skip_keys[c] = gen_key(root.substream(0x8000 + c).next_u64(), p.E, KeyKind::Bipolar);
  }
  st.feature_map = build_feature_map(root.substream(0xfeed).next_u64(), p.R, p.E / p.heads,
                                     FeatureKind::ReluMap, RowScheme::OrthogonalBlocks);
  return st;
}

std::vector<Matrix> mimoformer_layer(const std::vector<Matrix>& tokens, std::size_t M,
                                     std::size_t N, const MimoformerParams& p, LayerMode mode,
                                     std::uint64_t seed) {
  return mimoformer_layer(tokens, M, N, p, mode, make_mimoformer_state(seed, M, N, p));
}

std::vector<Matrix> mimoformer_layer(const std::vector<Matrix>& tokens, std::size_t M,
                                     std::size_t N, const MimoformerParams& p, LayerMode mode,
                                     const MimoformerLayerState& state) {
  require(tokens.size() == M * N, "mimoformer_layer: token array count mismatch");
  std::size_t E = p.E;
  std::size_t heads = p.heads;
  std::size_t Dh = E / heads;
  std::size_t L = tokens[0].rows;
  for (const auto& t : tokens)
    require(t.rows == L && t.cols == E, "mimoformer_layer: token shape mismatch");
  const std::vector<KeyVector>& bind_keys = state.bind_keys;
  const std::vector<KeyVector>& skip_keys = state.skip_keys;
  require(bind_keys.size() == M * N && skip_keys.size() == M * N,
          "mimoformer_layer: key set size mismatch");
  for (std::size_t c = 0; c < M * N; ++c)
    require(bind_keys[c].dim == E && skip_keys[c].dim == E,
            "mimoformer_layer: key dimension must equal E");
  const FeatureMapSpec& fm = state.feature_map;
  require(fm.D == Dh, "mimoformer_layer: feature map head dimension mismatch");

  // Per-channel projections (never in superposition).
  std::vector<Matrix> Q(M * N), K(M * N), V(M * N);
  for (std::size_t c = 0; c < M * N; ++c) {
    Q[c] = matmul(tokens[c], p.Wq);
    K[c] = matmul(tokens[c], p.Wk);
    V[c] = matmul(tokens[c], p.Wv);
  }

  // FAVOR+S per head; per-channel slices of the dim-E binding keys act as
  // dim-Dh head keys.
  std::vector<Matrix> att_channels;  // AttOnly: M*N of L x E
  std::vector<Matrix> att_streams;   // AttMlp: N of L x E
  if (mode == LayerMode::AttOnly) att_channels.assign(M * N, Matrix(L, E));
  else att_streams.assign(N, Matrix(L, E));

  for (std::size_t h = 0; h < heads; ++h) {
    ChannelGrid grid;
    grid.M = M;
    grid.N = N;
    grid.L = L;
    grid.D = Dh;
    grid.cells.resize(M * N);
    grid.keys.resize(M * N);
    for (std::size_t c = 0; c < M * N; ++c) {
      AttentionInstance& cell = grid.cells[c];
      cell.L = L;
      cell.D = Dh;
      cell.keys = Matrix(L, Dh);
      cell.queries = Matrix(L, Dh);
      cell.values = Matrix(L, Dh);
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t d = 0; d < Dh; ++d) {
          cell.keys(i, d) = K[c](i, h * Dh + d);
          cell.queries(i, d) = Q[c](i, h * Dh + d);
          cell.values(i, d) = V[c](i, h * Dh + d);
        }
      KeyVector hk;
      hk.dim = Dh;
      hk.kind = KeyKind::Bipolar;
      hk.entries.assign(bind_keys[c].entries.begin() + static_cast<long>(h * Dh),
                        bind_keys[c].entries.begin() + static_cast<long>((h + 1) * Dh));
      grid.keys[c] = hk;
    }
    FavorSOutput s = favor_plus_s(bind_grid(grid), fm);
    if (mode == LayerMode::AttOnly) {
      std::vector<Matrix> outs = unbind_attention_only(s, grid.keys);
      for (std::size_t c = 0; c < M * N; ++c)
        for (std::size_t i = 0; i < L; ++i)
          for (std::size_t d = 0; d < Dh; ++d) att_channels[c](i, h * Dh + d) = outs[c](i, d);
    } else {
      std::vector<Matrix> streams = joint_normalize(s);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < L; ++i)
          for (std::size_t d = 0; d < Dh; ++d) att_streams[n](i, h * Dh + d) = streams[n](i, d);
    }
  }

  auto mlp = [&](const Matrix& x) {
    Matrix h1 = matmul(x, p.W1);
    for (auto& v : h1.a) v = std::max(v, 0.0);
    return matmul(h1, p.W2);
  };

  std::vector<Matrix> out(M * N);
  if (mode == LayerMode::AttOnly) {
    for (std::size_t c = 0; c < M * N; ++c) {
      Matrix y = matmul(att_channels[c], p.Wo);
      for (std::size_t i = 0; i < L * E; ++i) y.a[i] += tokens[c].a[i];
      Matrix z = mlp(y);
      for (std::size_t i = 0; i < L * E; ++i) z.a[i] += y.a[i];
      out[c] = std::move(z);
    }
  } else {
    for (std::size_t n = 0; n < N; ++n) {
      Matrix y = matmul(att_streams[n], p.Wo);
      // Skip connection: superpose the channel inputs bound with the
      // unbinding keys so the streams stay aligned.
      for (std::size_t m = 0; m < M; ++m) {
        const KeyVector& a = skip_keys[m * N + n];
        const Matrix& x = tokens[m * N + n];
        for (std::size_t i = 0; i < L; ++i)
          for (std::size_t d = 0; d < E; ++d) y(i, d) += a.entries[d] * x(i, d);
      }
      Matrix z = mlp(y);
      for (std::size_t i = 0; i < L * E; ++i) z.a[i] += y.a[i];
      for (std::size_t m = 0; m < M; ++m) {
        const KeyVector& a = skip_keys[m * N + n];
        Matrix o(L, E);
        for (std::size_t i = 0; i < L; ++i)
          for (std::size_t d = 0; d < E; ++d) o(i, d) = a.entries[d] * z(i, d);
        out[m * N + n] = std::move(o);
      }
    }
  }
  return out;
}

}  // namespace mimo
