#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimo/convnet.hpp"

namespace mimo {

// Synthetic classification task: one fixed random template per class plus
// additive Gaussian noise. Templates are redrawn until pairwise |cos| < 0.5,
// so classes are linearly separable at sigma = 0.
struct SyntheticTask {
  std::uint64_t seed = 0;
  std::size_t num_classes = 0;
  std::size_t samples_per_class = 0;
  double sigma = 0.0;
  std::size_t height = 8, width = 8;
  std::vector<Tensor3> templates;  // one per class
  std::vector<Tensor3> samples;    // class-major
  std::vector<std::size_t> labels;

  std::size_t size() const { return samples.size(); }
};

SyntheticTask make_task(std::uint64_t seed, std::size_t num_classes,
                        std::size_t samples_per_class, double sigma);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_per_channel = 4;
  double learning_rate = 0.05;
  double gamma = 1e-4;  // isometry coefficient
  double mu = 0.1;      // key-orthogonality coefficient
  std::size_t channels = 2;
  std::uint64_t seed = 0;
  std::size_t num_classes = 4;
  std::size_t samples_per_class = 32;
  double sigma = 0.1;
  std::size_t trunk_blocks = 3;
  std::size_t width = 64;  // feature maps / binding dimension
  double fast_mode_fraction = 1.0;  // 1.0 trains fast mode only
  std::size_t eval_interval = 200;
};

struct TrainMetrics {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::size_t divergence_step = 0;
  std::vector<nlohmann::json> records;  // one per evaluation interval
  std::vector<double> final_per_channel_accuracy;
  LossTerms final_loss;
};

/// total batch loss as the spec composes it: mean cross-entropy over
/// channels plus isometry and key-orthogonality penalties.
LossTerms total_loss(const std::vector<Vec>& logits_per_channel,
                     const std::vector<std::size_t>& labels_per_channel,
                     const ConvNetParams& params, double gamma, double mu);

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

/// Central finite differences against the analytic gradients, one entry per
/// parameter tensor. Denominators floored at 1e-8.
GradCheckReport grad_check(ConvNetParams& params,
                           const std::vector<std::vector<Tensor3>>& batch_inputs,
                           const std::vector<std::vector<std::size_t>>& labels, double gamma,
                           double mu, double h);

/// Plain single-worker SGD for config.steps; deterministic for a fixed seed.
/// Mixed-mode batches alternate fast/slow by Bernoulli(fast_mode_fraction).
/// Aborts (diverged flag + step) if the loss becomes non-finite.
TrainMetrics train_toy(const TrainConfig& config, ConvNetParams* out_params = nullptr,
                       SyntheticTask* out_task = nullptr);

/// Accuracy of the trained parameters on the task under each named channel
/// partition: fast (one channel per input), slow (all channels on one
/// input), normal (pairs; equals slow when N = 2).
std::map<std::string, double> dynamic_eval(const ConvNetParams& params, const SyntheticTask& task,
                                           const std::vector<std::string>& modes);

}  // namespace mimo
