#include "mimo/convnet.hpp"

#include <algorithm>
#include <cmath>

#include "mimo/prng.hpp"

namespace mimo {

namespace {

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t stride) {
  std::size_t pad = k / 2;
  return (in + 2 * pad - k) / stride + 1;
}

// Gradient w.r.t. the conv input (stride 1 only; the trunk is unstrided).
Tensor3 conv2d_input_grad(const Tensor3& dout, const ConvKernel& kernel, std::size_t in_h,
                          std::size_t in_w) {
  require(kernel.stride == 1, "conv2d_input_grad: stride > 1 not supported");
  std::size_t pad = kernel.k / 2;
  Tensor3 din(kernel.ci, in_h, in_w);
  for (std::size_t o = 0; o < kernel.co; ++o) {
    for (std::size_t y = 0; y < dout.h; ++y) {
      for (std::size_t x = 0; x < dout.w; ++x) {
        double g = dout.at(o, y, x);
        if (g == 0.0) continue;
        for (std::size_t i = 0; i < kernel.ci; ++i) {
          for (std::size_t s = 0; s < kernel.k; ++s) {
            std::size_t yy = y + s;
            if (yy < pad || yy - pad >= in_h) continue;
            for (std::size_t t = 0; t < kernel.k; ++t) {
              std::size_t xx = x + t;
              if (xx < pad || xx - pad >= in_w) continue;
              din.at(i, yy - pad, xx - pad) += g * kernel.at(o, i, s, t);
            }
          }
        }
      }
    }
  }
  return din;
}

void conv2d_weight_grad(const Tensor3& input, const Tensor3& dout, const ConvKernel& kernel,
                        Vec& dw) {
  require(kernel.stride == 1, "conv2d_weight_grad: stride > 1 not supported");
  std::size_t pad = kernel.k / 2;
  for (std::size_t o = 0; o < kernel.co; ++o) {
    for (std::size_t i = 0; i < kernel.ci; ++i) {
      for (std::size_t s = 0; s < kernel.k; ++s) {
        for (std::size_t t = 0; t < kernel.k; ++t) {
          double acc = 0.0;
          for (std::size_t y = 0; y < dout.h; ++y) {
            std::size_t yy = y + s;
            if (yy < pad || yy - pad >= input.h) continue;
            for (std::size_t x = 0; x < dout.w; ++x) {
              std::size_t xx = x + t;
              if (xx < pad || xx - pad >= input.w) continue;
              acc += dout.at(o, y, x) * input.at(i, yy - pad, xx - pad);
            }
          }
          dw[((o * kernel.ci + i) * kernel.k + s) * kernel.k + t] += acc;
        }
      }
    }
  }
}

// dLoss/dx and per-feature-map dLoss/db given pre-activation x.
void activation_backward(const Tensor3& x, const ActivationParam& p, const Tensor3& dy,
                         Tensor3& dx, Vec* db) {
  std::size_t hw = x.h * x.w;
  for (std::size_t c = 0; c < x.c; ++c) {
    double slope = p.b.empty() ? 0.0 : p.b[c];
    double db_acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) {
      double v = x.v[c * hw + j];
      double g = dy.v[c * hw + j];
      switch (p.kind) {
        case ActKind::Relu:
          dx.v[c * hw + j] = v > 0.0 ? g : 0.0;
          break;
        case ActKind::PRelu:
          dx.v[c * hw + j] = v > 0.0 ? g : g * slope;
          if (v < 0.0) db_acc += g * v;
          break;
        case ActKind::SRelu:
          dx.v[c * hw + j] = v > slope ? g : 0.0;
          if (v <= slope) db_acc += g;
          break;
      }
    }
    if (db && !p.b.empty()) (*db)[c] += db_acc;
  }
}

Vec global_average_pool(const Tensor3& x) {
  Vec out(x.c, 0.0);
  double inv = 1.0 / static_cast<double>(x.h * x.w);
  std::size_t hw = x.h * x.w;
  for (std::size_t c = 0; c < x.c; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < hw; ++j) s += x.v[c * hw + j];
    out[c] = s * inv;
  }
  return out;
}

Tensor3 pwhrr_backward(const KeyVector& key, const Tensor3& dbound) {
  // Transpose of per-fiber circular convolution is circular correlation.
  Tensor3 dz(dbound.c, dbound.h, dbound.w);
  Vec fiber(dbound.c);
  for (std::size_t hi = 0; hi < dbound.h; ++hi) {
    for (std::size_t wi = 0; wi < dbound.w; ++wi) {
      for (std::size_t ci = 0; ci < dbound.c; ++ci) fiber[ci] = dbound.at(ci, hi, wi);
      Vec g = circular_correlate(key.entries, fiber);
      for (std::size_t ci = 0; ci < dbound.c; ++ci) dz.at(ci, hi, wi) = g[ci];
    }
  }
  return dz;
}

struct BlockCache {
  Tensor3 x;   // block input
  Tensor3 h1;  // conv1 output (pre-activation)
  Tensor3 h2;  // activation output
};

Tensor3 run_block(const TrunkBlock& blk, const Tensor3& x, BlockCache* cache) {
  Tensor3 h1 = conv2d(x, blk.conv1);
  Tensor3 h2 = activation(h1, blk.act);
  Tensor3 y = conv2d(h2, blk.conv2);
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
  if (cache) {
    cache->x = x;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return y;
}

Vec softmax(ConstSpan logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  Vec p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace

ConvNetParams init_convnet(std::uint64_t seed, std::size_t n_channels, std::size_t d,
                           std::size_t blocks, std::size_t classes, std::size_t in_channels) {
  require(n_channels >= 1, "init_convnet: need at least one channel");
  ConvNetParams p;
  SplitRng root(seed, 0x6376u);

  auto he_kernel = [&](std::size_t co, std::size_t ci, std::uint64_t id) {
    ConvKernel k;
    k.co = co;
    k.ci = ci;
    k.k = 3;
    k.stride = 1;
    k.w.resize(co * ci * 9);
    SplitRng g = root.substream(id);
    double scale = std::sqrt(2.0 / static_cast<double>(ci * 9));
    for (auto& v : k.w) v = g.gaussian() * scale;
    return k;
  };

  p.first_conv = he_kernel(d, in_channels, 1);
  for (std::size_t bidx = 0; bidx < blocks; ++bidx) {
    TrunkBlock blk;
    blk.conv1 = he_kernel(d, d, 100 + 2 * bidx);
    blk.conv2 = he_kernel(d, d, 101 + 2 * bidx);
    blk.act.kind = ActKind::PRelu;
    blk.act.b.assign(d, 0.5);
    p.trunk.push_back(std::move(blk));
  }
  for (std::size_t c = 0; c < n_channels; ++c) {
    KeyVector key = gen_key(root.substream(0x2000 + c).next_u64(), d, KeyKind::Gaussian);
    p.unbind.push_back(circulant_inverse(key));
    p.bind_keys.push_back(std::move(key));
  }
  p.classifier = Matrix(classes, d);
  SplitRng cg = root.substream(0x3000);
  double cscale = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& v : p.classifier.a) v = cg.gaussian() * cscale;
  return p;
}

Tensor3 conv2d(const Tensor3& x, const ConvKernel& kernel) {
  require(kernel.ci == x.c, "conv2d: channel mismatch");
  require(kernel.k % 2 == 1, "conv2d: kernel size must be odd");
  require(kernel.stride >= 1, "conv2d: bad stride");
  std::size_t pad = kernel.k / 2;
  Tensor3 out(kernel.co, out_extent(x.h, kernel.k, kernel.stride),
              out_extent(x.w, kernel.k, kernel.stride));
  for (std::size_t o = 0; o < kernel.co; ++o) {
    for (std::size_t y = 0; y < out.h; ++y) {
      for (std::size_t x0 = 0; x0 < out.w; ++x0) {
        double acc = 0.0;
        std::size_t base_y = y * kernel.stride;
        std::size_t base_x = x0 * kernel.stride;
        for (std::size_t i = 0; i < kernel.ci; ++i) {
          for (std::size_t s = 0; s < kernel.k; ++s) {
            std::size_t yy = base_y + s;
            if (yy < pad || yy - pad >= x.h) continue;
            for (std::size_t t = 0; t < kernel.k; ++t) {
              std::size_t xx = base_x + t;
              if (xx < pad || xx - pad >= x.w) continue;
              acc += kernel.at(o, i, s, t) * x.at(i, yy - pad, xx - pad);
            }
          }
        }
        out.at(o, y, x0) = acc;
      }
    }
  }
  return out;
}

Tensor3 activation(const Tensor3& x, const ActivationParam& p) {
  if (p.kind != ActKind::Relu)
    require(p.b.size() == x.c, "activation: parameter length must match feature maps");
  Tensor3 out(x.c, x.h, x.w);
  std::size_t hw = x.h * x.w;
  for (std::size_t c = 0; c < x.c; ++c) {
    double b = p.b.empty() ? 0.0 : p.b[c];
    for (std::size_t j = 0; j < hw; ++j) {
      double v = x.v[c * hw + j];
      switch (p.kind) {
        case ActKind::Relu: out.v[c * hw + j] = std::max(v, 0.0); break;
        case ActKind::PRelu: out.v[c * hw + j] = std::max(v, 0.0) + b * std::min(v, 0.0); break;
        case ActKind::SRelu: out.v[c * hw + j] = std::max(v, b); break;
      }
    }
  }
  return out;
}

Vec conv_self_correlation(const ConvKernel& kernel) {
  std::size_t k = kernel.k, co = kernel.co, ci = kernel.ci;
  std::size_t pad = k / 2;
  Vec out(co * co * k * k, 0.0);
  // O[a,b,c,d] = sum_{r,s,t} W[a,r,c+s-pad,d+t-pad] W[b,r,s,t]
  for (std::size_t a = 0; a < co; ++a) {
    for (std::size_t b = 0; b < co; ++b) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t d = 0; d < k; ++d) {
          double acc = 0.0;
          for (std::size_t r = 0; r < ci; ++r) {
            for (std::size_t s = 0; s < k; ++s) {
              std::size_t ii = c + s;
              if (ii < pad || ii - pad >= k) continue;
              for (std::size_t t = 0; t < k; ++t) {
                std::size_t jj = d + t;
                if (jj < pad || jj - pad >= k) continue;
                acc += kernel.at(a, r, ii - pad, jj - pad) * kernel.at(b, r, s, t);
              }
            }
          }
          out[((a * co + b) * k + c) * k + d] = acc;
        }
      }
    }
  }
  return out;
}

namespace {

ConvKernel transpose_first_axes(const ConvKernel& kernel) {
  ConvKernel t;
  t.co = kernel.ci;
  t.ci = kernel.co;
  t.k = kernel.k;
  t.stride = kernel.stride;
  t.w.resize(t.co * t.ci * t.k * t.k);
  for (std::size_t o = 0; o < kernel.co; ++o)
    for (std::size_t i = 0; i < kernel.ci; ++i)
      for (std::size_t s = 0; s < kernel.k; ++s)
        for (std::size_t tt = 0; tt < kernel.k; ++tt) t.at(i, o, s, tt) = kernel.at(o, i, s, tt);
  return t;
}

// Residual of Conv(V,V) against the center identity, laid out (co,co,k,k).
Vec self_correlation_residual(const ConvKernel& v) {
  Vec res = conv_self_correlation(v);
  std::size_t k = v.k, co = v.co;
  std::size_t c0 = k / 2;
  for (std::size_t a = 0; a < co; ++a) res[((a * co + a) * k + c0) * k + c0] -= 1.0;
  return res;
}

}  // namespace

double isometry_loss(const ConvKernel& kernel, double gamma) {
  require(gamma >= 0.0, "isometry_loss: gamma must be nonnegative");
  if (gamma == 0.0) return 0.0;
  // L(W) needs W an isometry candidate: use W when C_i > C_o, else W^T.
  ConvKernel v = kernel.ci > kernel.co ? kernel : transpose_first_axes(kernel);
  Vec res = self_correlation_residual(v);
  double f2 = 0.0;
  for (double r : res) f2 += r * r;
  return 0.5 * gamma * f2;
}

Vec isometry_loss_grad(const ConvKernel& kernel, double gamma) {
  Vec dw(kernel.w.size(), 0.0);
  if (gamma == 0.0) return dw;
  bool transposed = !(kernel.ci > kernel.co);
  ConvKernel v = transposed ? transpose_first_axes(kernel) : kernel;
  Vec g = self_correlation_residual(v);  // gamma applied below
  std::size_t k = v.k, co = v.co, ci = v.ci;
  std::size_t pad = k / 2;
  ConvKernel dv;
  dv.co = co;
  dv.ci = ci;
  dv.k = k;
  dv.w.assign(v.w.size(), 0.0);
  auto gat = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return g[((a * co + b) * k + c) * k + d];
  };
  // O is bilinear in (V, V); both occurrences contribute.
  for (std::size_t e = 0; e < co; ++e) {
    for (std::size_t f = 0; f < ci; ++f) {
      for (std::size_t gg = 0; gg < k; ++gg) {
        for (std::size_t hh = 0; hh < k; ++hh) {
          double acc = 0.0;
          for (std::size_t b = 0; b < co; ++b) {
            for (std::size_t c = 0; c < k; ++c) {
              // term 1: s = gg - c + pad, t = hh - d + pad
              std::size_t ss = gg + pad;
              if (ss < c || ss - c >= k) continue;
              for (std::size_t d = 0; d < k; ++d) {
                std::size_t tt = hh + pad;
                if (tt < d || tt - d >= k) continue;
                acc += gat(e, b, c, d) * v.at(b, f, ss - c, tt - d);
              }
            }
          }
          for (std::size_t a = 0; a < co; ++a) {
            for (std::size_t c = 0; c < k; ++c) {
              // term 2: U index (c + gg - pad, d + hh - pad)
              std::size_t ii = c + gg;
              if (ii < pad || ii - pad >= k) continue;
              for (std::size_t d = 0; d < k; ++d) {
                std::size_t jj = d + hh;
                if (jj < pad || jj - pad >= k) continue;
                acc += gat(a, e, c, d) * v.at(a, f, ii - pad, jj - pad);
              }
            }
          }
          dv.at(e, f, gg, hh) = gamma * acc;
        }
      }
    }
  }
  ConvKernel back = transposed ? transpose_first_axes(dv) : dv;
  return back.w;
}

std::vector<Vec> mimoconv_forward(const std::vector<Tensor3>& inputs, const ConvNetParams& p) {
  std::size_t n = p.channels();
  require(inputs.size() == n, "mimoconv_forward: input count must equal channel count");

  Tensor3 s;
  for (std::size_t c = 0; c < n; ++c) {
    Tensor3 z = conv2d(inputs[c], p.first_conv);
    Tensor3 bound = bind_pwhrr(p.bind_keys[c], z);
    if (c == 0) {
      s = std::move(bound);
    } else {
      require(s.same_shape(bound), "mimoconv_forward: input shape mismatch");
      for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] += bound.v[i];
    }
  }
  for (const auto& blk : p.trunk) s = run_block(blk, s, nullptr);
  Vec pooled = global_average_pool(s);

  std::vector<Vec> logits(n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec u = unbind_mbat(p.unbind[c], pooled);
    Vec lg(p.classifier.rows, 0.0);
    for (std::size_t r = 0; r < p.classifier.rows; ++r) lg[r] = dot(p.classifier.row(r), u);
    logits[c] = std::move(lg);
  }
  return logits;
}

double cross_entropy(ConstSpan logits, std::size_t label) {
  require(label < logits.size(), "cross_entropy: label out of range");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return std::log(z) - (logits[label] - mx);
}

LossTerms loss_and_gradients(const std::vector<std::vector<Tensor3>>& batch_inputs,
                             const std::vector<std::vector<std::size_t>>& labels,
                             const ConvNetParams& p, double gamma, double mu,
                             ConvNetGrads* grads) {
  std::size_t batch = batch_inputs.size();
  std::size_t n = p.channels();
  require(batch >= 1 && labels.size() == batch, "loss_and_gradients: batch shape mismatch");
  for (std::size_t b = 0; b < batch; ++b)
    require(batch_inputs[b].size() == n && labels[b].size() == n,
            "loss_and_gradients: per-element channel count mismatch");

  LossTerms terms;
  double inv_bn = 1.0 / static_cast<double>(batch * n);
  std::size_t d_o = p.unbind.empty() ? 0 : p.unbind[0].dim;

  for (std::size_t b = 0; b < batch; ++b) {
    // forward with caches
    std::vector<Tensor3> z(n), bound(n);
    Tensor3 s;
    for (std::size_t c = 0; c < n; ++c) {
      z[c] = conv2d(batch_inputs[b][c], p.first_conv);
      bound[c] = bind_pwhrr(p.bind_keys[c], z[c]);
      if (c == 0) s = bound[c];
      else
        for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] += bound[c].v[i];
    }
    std::vector<BlockCache> caches(p.trunk.size());
    Tensor3 cur = s;
    for (std::size_t j = 0; j < p.trunk.size(); ++j) cur = run_block(p.trunk[j], cur, &caches[j]);
    Vec pooled = global_average_pool(cur);

    std::vector<Vec> u(n), probs(n);
    for (std::size_t c = 0; c < n; ++c) {
      u[c] = unbind_mbat(p.unbind[c], pooled);
      Vec lg(p.classifier.rows, 0.0);
      for (std::size_t r = 0; r < p.classifier.rows; ++r) lg[r] = dot(p.classifier.row(r), u[c]);
      terms.cross_entropy += cross_entropy(lg, labels[b][c]) * inv_bn;
      if (grads) probs[c] = softmax(lg);
    }
    if (!grads) continue;

    // backward
    Vec dpooled(d_o, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      Vec dlogits = probs[c];
      dlogits[labels[b][c]] -= 1.0;
      for (auto& v : dlogits) v *= inv_bn;
      Vec du(d_o, 0.0);
      for (std::size_t r = 0; r < p.classifier.rows; ++r) {
        double g = dlogits[r];
        auto wrow = p.classifier.row(r);
        for (std::size_t cdx = 0; cdx < d_o; ++cdx) {
          grads->classifier[r * d_o + cdx] += g * u[c][cdx];
          du[cdx] += g * wrow[cdx];
        }
      }
      const UnbindMatrix& m = p.unbind[c];
      Vec& dm = grads->unbind[c];
      for (std::size_t r = 0; r < d_o; ++r) {
        double g = du[r];
        for (std::size_t cdx = 0; cdx < d_o; ++cdx) {
          dm[r * d_o + cdx] += g * pooled[cdx];
          dpooled[cdx] += g * m.at(r, cdx);
        }
      }
    }

    Tensor3 dcur(cur.c, cur.h, cur.w);
    double inv_hw = 1.0 / static_cast<double>(cur.h * cur.w);
    std::size_t hw = cur.h * cur.w;
    for (std::size_t c = 0; c < cur.c; ++c)
      for (std::size_t j = 0; j < hw; ++j) dcur.v[c * hw + j] = dpooled[c] * inv_hw;

    for (std::size_t j = p.trunk.size(); j-- > 0;) {
      // y = x + conv2(act(conv1(x))); dcur holds dy on entry, dy + dx on exit.
      const TrunkBlock& blk = p.trunk[j];
      const BlockCache& cache = caches[j];
      TrunkBlockGrads& bg = grads->trunk[j];
      Tensor3 dh2 = conv2d_input_grad(dcur, blk.conv2, cache.h2.h, cache.h2.w);
      conv2d_weight_grad(cache.h2, dcur, blk.conv2, bg.conv2);
      Tensor3 dh1(cache.h1.c, cache.h1.h, cache.h1.w);
      activation_backward(cache.h1, blk.act, dh2, dh1, &bg.act_b);
      Tensor3 dx = conv2d_input_grad(dh1, blk.conv1, cache.x.h, cache.x.w);
      conv2d_weight_grad(cache.x, dh1, blk.conv1, bg.conv1);
      for (std::size_t i = 0; i < dcur.v.size(); ++i) dcur.v[i] += dx.v[i];
    }

    for (std::size_t c = 0; c < n; ++c) {
      Tensor3 dz = pwhrr_backward(p.bind_keys[c], dcur);
      conv2d_weight_grad(batch_inputs[b][c], dz, p.first_conv, grads->first_conv);
    }
  }

  // regularizers (batch independent)
  std::vector<const ConvKernel*> kernels;
  kernels.push_back(&p.first_conv);
  for (const auto& blk : p.trunk) {
    kernels.push_back(&blk.conv1);
    kernels.push_back(&blk.conv2);
  }
  for (const auto* kn : kernels) terms.isometry += isometry_loss(*kn, gamma);
  terms.key_orthogonality = key_orthogonality_loss(p.bind_keys, mu);

  if (grads) {
    auto add = [](Vec& dst, const Vec& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    add(grads->first_conv, isometry_loss_grad(p.first_conv, gamma));
    for (std::size_t j = 0; j < p.trunk.size(); ++j) {
      add(grads->trunk[j].conv1, isometry_loss_grad(p.trunk[j].conv1, gamma));
      add(grads->trunk[j].conv2, isometry_loss_grad(p.trunk[j].conv2, gamma));
    }
    // binding keys are frozen: the key penalty is reported but has no
    // trainable gradient target
  }
  return terms;
}

std::vector<Vec> dynamic_partition(const std::vector<Tensor3>& inputs,
                                   const std::vector<std::size_t>& assignment,
                                   const ConvNetParams& p) {
  std::size_t n = p.channels();
  require(assignment.size() == n, "dynamic_partition: assignment must cover all channels");
  require(!inputs.empty() && inputs.size() <= n, "dynamic_partition: bad input count");
  std::vector<std::size_t> usage(inputs.size(), 0);
  std::vector<Tensor3> routed(n);
  for (std::size_t c = 0; c < n; ++c) {
    require(assignment[c] < inputs.size(), "dynamic_partition: assignment index out of range");
    routed[c] = inputs[assignment[c]];
    ++usage[assignment[c]];
  }
  for (std::size_t i = 0; i < usage.size(); ++i)
    require(usage[i] >= 1, "dynamic_partition: every input needs at least one channel");

  std::vector<Vec> logits = mimoconv_forward(routed, p);
  std::vector<Vec> out(inputs.size(), Vec(p.classifier.rows, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    Vec& acc = out[assignment[c]];
    for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += logits[c][r];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (auto& v : out[i]) v /= static_cast<double>(usage[i]);
  return out;
}

ConvNetGrads make_zero_grads(const ConvNetParams& p) {
  ConvNetGrads g;
  g.first_conv.assign(p.first_conv.w.size(), 0.0);
  g.trunk.resize(p.trunk.size());
  for (std::size_t j = 0; j < p.trunk.size(); ++j) {
    g.trunk[j].conv1.assign(p.trunk[j].conv1.w.size(), 0.0);
    g.trunk[j].act_b.assign(p.trunk[j].act.b.size(), 0.0);
    g.trunk[j].conv2.assign(p.trunk[j].conv2.w.size(), 0.0);
  }
  g.unbind.resize(p.unbind.size());
  for (std::size_t c = 0; c < p.unbind.size(); ++c)
    g.unbind[c].assign(p.unbind[c].entries.size(), 0.0);
  g.classifier.assign(p.classifier.a.size(), 0.0);
  return g;
}

std::vector<std::pair<std::string, Vec*>> parameter_tensors(ConvNetParams& p) {
  std::vector<std::pair<std::string, Vec*>> out;
  out.emplace_back("first_conv", &p.first_conv.w);
  for (std::size_t j = 0; j < p.trunk.size(); ++j) {
    out.emplace_back("trunk[" + std::to_string(j) + "].conv1", &p.trunk[j].conv1.w);
    out.emplace_back("trunk[" + std::to_string(j) + "].act_b", &p.trunk[j].act.b);
    out.emplace_back("trunk[" + std::to_string(j) + "].conv2", &p.trunk[j].conv2.w);
  }
  for (std::size_t c = 0; c < p.unbind.size(); ++c)
    out.emplace_back("unbind[" + std::to_string(c) + "]", &p.unbind[c].entries);
  out.emplace_back("classifier", &p.classifier.a);
  return out;
}

std::vector<std::pair<std::string, Vec*>> gradient_tensors(ConvNetGrads& g) {
  std::vector<std::pair<std::string, Vec*>> out;
  out.emplace_back("first_conv", &g.first_conv);
  for (std::size_t j = 0; j < g.trunk.size(); ++j) {
    out.emplace_back("trunk[" + std::to_string(j) + "].conv1", &g.trunk[j].conv1);
    out.emplace_back("trunk[" + std::to_string(j) + "].act_b", &g.trunk[j].act_b);
    out.emplace_back("trunk[" + std::to_string(j) + "].conv2", &g.trunk[j].conv2);
  }
  for (std::size_t c = 0; c < g.unbind.size(); ++c)
    out.emplace_back("unbind[" + std::to_string(c) + "]", &g.unbind[c]);
  out.emplace_back("classifier", &g.classifier);
  return out;
}

void sgd_step(ConvNetParams& p, const ConvNetGrads& g, double lr) {
  auto upd = [lr](Vec& pv, const Vec& gv) {
    require(pv.size() == gv.size(), "sgd_step: tensor size mismatch");
    for (std::size_t j = 0; j < pv.size(); ++j) pv[j] -= lr * gv[j];
  };
  upd(p.first_conv.w, g.first_conv);
  for (std::size_t j = 0; j < p.trunk.size(); ++j) {
    upd(p.trunk[j].conv1.w, g.trunk[j].conv1);
    upd(p.trunk[j].act.b, g.trunk[j].act_b);
    upd(p.trunk[j].conv2.w, g.trunk[j].conv2);
  }
  for (std::size_t c = 0; c < p.unbind.size(); ++c) upd(p.unbind[c].entries, g.unbind[c]);
  upd(p.classifier.a, g.classifier);
  for (auto& blk : p.trunk) {
    if (blk.act.kind == ActKind::PRelu)
      for (auto& b : blk.act.b) b = std::clamp(b, -1.0, 1.0);
  }
}

}  // namespace mimo
