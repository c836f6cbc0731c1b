#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mimo/common.hpp"
#include "mimo/vsa.hpp"

namespace mimo {

// Conv kernel W: (c_out, c_in, k, k) row-major, odd k, zero padding floor(k/2).
struct ConvKernel {
  std::size_t co = 0, ci = 0, k = 0, stride = 1;
  Vec w;

  double at(std::size_t o, std::size_t i, std::size_t s, std::size_t t) const {
    return w[((o * ci + i) * k + s) * k + t];
  }
  double& at(std::size_t o, std::size_t i, std::size_t s, std::size_t t) {
    return w[((o * ci + i) * k + s) * k + t];
  }
};

enum class ActKind { Relu, PRelu, SRelu };

// Per-feature-map activation parameter b.
//   PRelu: max(x,0) + b min(x,0), b in [-1,1] (clamped after updates)
//   SRelu: max(x,b)
struct ActivationParam {
  ActKind kind = ActKind::PRelu;
  Vec b;
};

struct TrunkBlock {
  ConvKernel conv1;
  ActivationParam act;
  ConvKernel conv2;
};

// Miniature MIMOConv: per-input first conv, PWHRR binding, superposed
// residual trunk, global average pooling, per-channel MBAT unbinding,
// shared classifier.
struct ConvNetParams {
  ConvKernel first_conv;
  std::vector<TrunkBlock> trunk;
  std::vector<KeyVector> bind_keys;    // N Gaussian keys, dim = first_conv.co
  std::vector<UnbindMatrix> unbind;    // N matrices, dim = trunk width
  Matrix classifier;                   // classes x D_o

  std::size_t channels() const { return bind_keys.size(); }
};

struct TrunkBlockGrads {
  Vec conv1, act_b, conv2;
};

struct ConvNetGrads {
  Vec first_conv;
  std::vector<TrunkBlockGrads> trunk;
  std::vector<Vec> unbind;
  Vec classifier;
};

/// Fresh network: N channels, trunk width d (also the binding dimension),
/// `blocks` residual blocks, PRelu slopes initialized at 0.5, frozen Gaussian
/// binding keys, unbinding matrices initialized at the circulant inverse of
/// their key.
ConvNetParams init_convnet(std::uint64_t seed, std::size_t n_channels, std::size_t d,
                           std::size_t blocks, std::size_t classes, std::size_t in_channels);

Tensor3 conv2d(const Tensor3& x, const ConvKernel& kernel);

Tensor3 activation(const Tensor3& x, const ActivationParam& p);

/// Self-correlation Conv(W, W): zero-padded correlation of the kernel with
/// itself; result is (co, co, k, k) flat.
Vec conv_self_correlation(const ConvKernel& kernel);

/// (gamma/2) |Conv(V,V) - delta|_F^2 with V = W if c_i > c_o else W^T and
/// delta the center identity.
double isometry_loss(const ConvKernel& kernel, double gamma);

/// d isometry_loss / dW, laid out like kernel.w.
Vec isometry_loss_grad(const ConvKernel& kernel, double gamma);

/// Full forward pass: one input per channel, N logit vectors out.
std::vector<Vec> mimoconv_forward(const std::vector<Tensor3>& inputs, const ConvNetParams& p);

/// Stabilized softmax cross-entropy.
double cross_entropy(ConstSpan logits, std::size_t label);

struct LossTerms {
  double cross_entropy = 0.0;
  double isometry = 0.0;
  double key_orthogonality = 0.0;
  double total() const { return cross_entropy + isometry + key_orthogonality; }
};

/// Batch loss: mean cross-entropy over batch elements and channels, plus the
/// isometry penalty of every conv layer and the (frozen, constant) binding
/// key penalty. If grads is non-null, fills analytic gradients for every
/// trainable tensor.
LossTerms loss_and_gradients(const std::vector<std::vector<Tensor3>>& batch_inputs,
                             const std::vector<std::vector<std::size_t>>& labels,
                             const ConvNetParams& p, double gamma, double mu,
                             ConvNetGrads* grads);

/// Channel partitioning for dynamic inference: assignment[ch] names the input
/// carried by that channel; the prediction for an input is the mean of the
/// logits of its channels. Returns one logit vector per distinct input.
std::vector<Vec> dynamic_partition(const std::vector<Tensor3>& inputs,
                                   const std::vector<std::size_t>& assignment,
                                   const ConvNetParams& p);

ConvNetGrads make_zero_grads(const ConvNetParams& p);

/// Named views over every trainable tensor (frozen binding keys excluded).
std::vector<std::pair<std::string, Vec*>> parameter_tensors(ConvNetParams& p);
std::vector<std::pair<std::string, Vec*>> gradient_tensors(ConvNetGrads& g);

/// SGD step p -= lr * g followed by the PRelu [-1,1] projection.
void sgd_step(ConvNetParams& p, const ConvNetGrads& g, double lr);

}  // namespace mimo
