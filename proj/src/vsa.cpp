#include "mimo/vsa.hpp"

#include <cmath>

#include "mimo/prng.hpp"

namespace mimo {

KeyVector gen_key(std::uint64_t seed, std::size_t dim, KeyKind kind) {
  require(dim >= 1, "gen_key: dimension must be positive");
  KeyVector key;
  key.dim = dim;
  key.kind = kind;
  key.entries.resize(dim);
  SplitRng rng(seed, kind == KeyKind::Bipolar ? 0x62u : 0x67u);
  if (kind == KeyKind::Bipolar) {
    for (auto& e : key.entries) e = rng.rademacher();
  } else {
    double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& e : key.entries) e = rng.gaussian() * scale;
  }
  return key;
}

Vec bind_hadamard(const KeyVector& key, ConstSpan x) {
  require(key.dim == x.size(), "bind_hadamard: dimension mismatch");
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = key.entries[i] * x[i];
  return out;
}

Vec unbind_hadamard(const KeyVector& key, ConstSpan y) {
  require(key.dim == y.size(), "unbind_hadamard: dimension mismatch");
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = key.entries[i] * y[i];
  return out;
}

Vec circular_convolve(ConstSpan a, ConstSpan x) {
  require(a.size() == x.size(), "circular_convolve: length mismatch");
  std::size_t d = a.size();
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[j] * x[(i + d - j) % d];
    out[i] = s;
  }
  return out;
}

Vec circular_correlate(ConstSpan a, ConstSpan y) {
  require(a.size() == y.size(), "circular_correlate: length mismatch");
  std::size_t d = a.size();
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[j] * y[(i + j) % d];
    out[i] = s;
  }
  return out;
}

Tensor3 bind_pwhrr(const KeyVector& key, const Tensor3& x) {
  require(key.dim == x.c, "bind_pwhrr: key dim must equal channel count");
  Tensor3 out(x.c, x.h, x.w);
  Vec fiber(x.c), bound;
  for (std::size_t hi = 0; hi < x.h; ++hi) {
    for (std::size_t wi = 0; wi < x.w; ++wi) {
      for (std::size_t ci = 0; ci < x.c; ++ci) fiber[ci] = x.at(ci, hi, wi);
      bound = circular_convolve(key.entries, fiber);
      for (std::size_t ci = 0; ci < x.c; ++ci) out.at(ci, hi, wi) = bound[ci];
    }
  }
  return out;
}

Vec unbind_mbat(const UnbindMatrix& m, ConstSpan h) {
  require(m.dim == h.size(), "unbind_mbat: dimension mismatch");
  Vec out(m.dim, 0.0);
  for (std::size_t r = 0; r < m.dim; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.dim; ++c) s += m.at(r, c) * h[c];
    out[r] = s;
  }
  return out;
}

UnbindMatrix circulant_inverse(const KeyVector& key) {
  std::size_t d = key.dim;
  require(d >= 1, "circulant_inverse: empty key");
  // Circulant of circular convolution with key: C[r][c] = key[(r - c) mod D].
  // Invert by Gauss-Jordan with partial pivoting.
  std::vector<Vec> aug(d, Vec(2 * d, 0.0));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) aug[r][c] = key.entries[(r + d - c) % d];
    aug[r][d + r] = 1.0;
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    require(std::abs(aug[piv][col]) > 1e-12, "circulant_inverse: singular circulant");
    std::swap(aug[piv], aug[col]);
    double inv = 1.0 / aug[col][col];
    for (std::size_t c = 0; c < 2 * d; ++c) aug[col][c] *= inv;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      double f = aug[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < 2 * d; ++c) aug[r][c] -= f * aug[col][c];
    }
  }
  UnbindMatrix m;
  m.dim = d;
  m.entries.resize(d * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m.at(r, c) = aug[r][d + c];
  return m;
}

Superposition superpose(const std::vector<Vec>& items, std::uint64_t key_family_seed) {
  require(!items.empty(), "superpose: empty item list");
  std::size_t n = items[0].size();
  for (const auto& it : items) require(it.size() == n, "superpose: shape mismatch");
  Superposition s;
  s.payload.assign(n, 0.0);
  // Fixed input order, plain summation: bit-stable for a given order.
  for (const auto& it : items)
    for (std::size_t i = 0; i < n; ++i) s.payload[i] += it[i];
  s.channel_count = items.size();
  s.key_family_seed = key_family_seed;
  return s;
}

CleanupResult dictionary_cleanup(ConstSpan s, const KeyVector& key,
                                 const std::vector<Vec>& dictionary) {
  require(!dictionary.empty(), "dictionary_cleanup: empty dictionary");
  require(key.dim == s.size(), "dictionary_cleanup: key/superposition dim mismatch");
  CleanupResult res;
  res.scores.reserve(dictionary.size());
  for (const auto& omega : dictionary) {
    require(omega.size() == s.size(), "dictionary_cleanup: dictionary dim mismatch");
    Vec bound = bind_hadamard(key, omega);
    res.scores.push_back(dot(s, bound));
  }
  res.index = 0;
  for (std::size_t j = 1; j < res.scores.size(); ++j)
    if (res.scores[j] > res.scores[res.index]) res.index = j;
  return res;
}

double key_orthogonality_loss(const std::vector<KeyVector>& keys, double mu) {
  require(!keys.empty(), "key_orthogonality_loss: no keys");
  std::size_t n = keys.size();
  std::size_t d = keys[0].dim;
  for (const auto& k : keys) require(k.dim == d, "key_orthogonality_loss: dim mismatch");

  Vec norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm2(keys[i].entries);
    require(norms[i] > 0.0, "key_orthogonality_loss: zero-norm key");
  }

  double pair_term = 0.0;
  if (n >= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double c = dot(keys[i].entries, keys[j].entries) / (norms[i] * norms[j]);
        pair_term += c * c;
      }
    }
    double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    pair_term *= mu / pairs;
  }

  double norm_term = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dnorm = norms[i] - 1.0;
    norm_term += dnorm * dnorm;
  }
  norm_term *= mu / static_cast<double>(n);

  return pair_term + norm_term;
}

}  // namespace mimo
