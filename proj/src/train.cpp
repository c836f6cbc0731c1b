#include "mimo/train.hpp"

#include <algorithm>
#include <cmath>

#include "mimo/prng.hpp"

namespace mimo {

namespace {

std::size_t argmax(ConstSpan v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

double fast_mode_accuracy(const ConvNetParams& params, const SyntheticTask& task) {
  std::size_t n = params.channels();
  std::size_t correct = 0, total = 0;
  // feed the task in channel-sized groups; the tail wraps around
  for (std::size_t base = 0; base < task.size(); base += n) {
    std::vector<Tensor3> inputs(n);
    std::vector<std::size_t> labs(n);
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t idx = (base + c) % task.size();
      inputs[c] = task.samples[idx];
      labs[c] = task.labels[idx];
    }
    std::vector<Vec> logits = mimoconv_forward(inputs, params);
    std::size_t group = std::min(n, task.size() - base);
    for (std::size_t c = 0; c < group; ++c) {
      if (argmax(logits[c]) == labs[c]) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<double> per_channel_accuracy(const ConvNetParams& params, const SyntheticTask& task,
                                         std::uint64_t seed) {
  // every channel sees every sample once, with the other channels carrying
  // random distractors
  std::size_t n = params.channels();
  std::vector<std::size_t> correct(n, 0);
  SplitRng rng(seed, 0x6163u);
  for (std::size_t idx = 0; idx < task.size(); ++idx) {
    std::vector<Tensor3> inputs(n);
    std::vector<std::size_t> labs(n);
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t pick = (c == idx % n) ? idx : rng.next_u64() % task.size();
      inputs[c] = task.samples[pick];
      labs[c] = task.labels[pick];
    }
    std::vector<Vec> logits = mimoconv_forward(inputs, params);
    std::size_t c = idx % n;
    if (argmax(logits[c]) == labs[c]) ++correct[c];
  }
  std::vector<double> acc(n);
  for (std::size_t c = 0; c < n; ++c)
    acc[c] = static_cast<double>(correct[c]) /
             (static_cast<double>(task.size()) / static_cast<double>(n));
  return acc;
}

}  // namespace

SyntheticTask make_task(std::uint64_t seed, std::size_t num_classes,
                        std::size_t samples_per_class, double sigma) {
  require(num_classes >= 2, "make_task: need at least two classes");
  require(samples_per_class >= 1, "make_task: need samples");
  SyntheticTask task;
  task.seed = seed;
  task.num_classes = num_classes;
  task.samples_per_class = samples_per_class;
  task.sigma = sigma;
  SplitRng root(seed, 0x7461u);

  std::size_t dim = task.height * task.width;
  SplitRng tg = root.substream(0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (;;) {
      Tensor3 tpl(1, task.height, task.width);
      double n2 = 0.0;
      for (auto& v : tpl.v) {
        v = tg.gaussian();
        n2 += v * v;
      }
      double inv = std::sqrt(static_cast<double>(dim) / n2);
      for (auto& v : tpl.v) v *= inv;  // norm = sqrt(dim), entries O(1)
      bool ok = true;
      for (const auto& other : task.templates) {
        double c12 = dot(tpl.v, other.v) / static_cast<double>(dim);
        if (std::abs(c12) >= 0.5) {
          ok = false;
          break;
        }
      }
      if (ok) {
        task.templates.push_back(std::move(tpl));
        break;
      }
    }
  }

  for (std::size_t c = 0; c < num_classes; ++c) {
    SplitRng sg = root.substream(1 + c);
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      Tensor3 sample = task.templates[c];
      for (auto& v : sample.v) v += sigma * sg.gaussian();
      task.samples.push_back(std::move(sample));
      task.labels.push_back(c);
    }
  }
  return task;
}

LossTerms total_loss(const std::vector<Vec>& logits_per_channel,
                     const std::vector<std::size_t>& labels_per_channel,
                     const ConvNetParams& params, double gamma, double mu) {
  require(logits_per_channel.size() == labels_per_channel.size(),
          "total_loss: channel count mismatch");
  require(!logits_per_channel.empty(), "total_loss: no channels");
  LossTerms terms;
  for (std::size_t c = 0; c < logits_per_channel.size(); ++c)
    terms.cross_entropy += cross_entropy(logits_per_channel[c], labels_per_channel[c]);
  terms.cross_entropy /= static_cast<double>(logits_per_channel.size());
  terms.isometry += isometry_loss(params.first_conv, gamma);
  for (const auto& blk : params.trunk) {
    terms.isometry += isometry_loss(blk.conv1, gamma);
    terms.isometry += isometry_loss(blk.conv2, gamma);
  }
  terms.key_orthogonality = key_orthogonality_loss(params.bind_keys, mu);
  return terms;
}

GradCheckReport grad_check(ConvNetParams& params,
                           const std::vector<std::vector<Tensor3>>& batch_inputs,
                           const std::vector<std::vector<std::size_t>>& labels, double gamma,
                           double mu, double h) {
  ConvNetGrads grads = make_zero_grads(params);
  loss_and_gradients(batch_inputs, labels, params, gamma, mu, &grads);

  GradCheckReport report;
  auto ptensors = parameter_tensors(params);
  auto gtensors = gradient_tensors(grads);
  for (std::size_t t = 0; t < ptensors.size(); ++t) {
    Vec& pv = *ptensors[t].second;
    const Vec& gv = *gtensors[t].second;
    GradCheckEntry entry;
    entry.name = ptensors[t].first;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      double keep = pv[i];
      pv[i] = keep + h;
      double up = loss_and_gradients(batch_inputs, labels, params, gamma, mu, nullptr).total();
      pv[i] = keep - h;
      double dn = loss_and_gradients(batch_inputs, labels, params, gamma, mu, nullptr).total();
      pv[i] = keep;
      double numeric = (up - dn) / (2.0 * h);
      double denom = std::max({std::abs(numeric), std::abs(gv[i]), 1e-8});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(numeric - gv[i]) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

TrainMetrics train_toy(const TrainConfig& config, ConvNetParams* out_params,
                       SyntheticTask* out_task) {
  require(config.steps >= 1 && config.batch_per_channel >= 1 && config.channels >= 1 &&
              config.learning_rate > 0.0,
          "train_toy: invalid config");
  SyntheticTask task =
      make_task(config.seed, config.num_classes, config.samples_per_class, config.sigma);
  ConvNetParams params = init_convnet(config.seed, config.channels, config.width,
                                      config.trunk_blocks, config.num_classes, 1);

  TrainMetrics metrics;
  metrics.seed = config.seed;
  SplitRng batch_rng(config.seed, 0x7367u);
  SplitRng mode_rng(config.seed, 0x6d6fu);
  std::size_t n = config.channels;

  for (std::size_t step = 0; step < config.steps; ++step) {
    bool fast = mode_rng.uniform() < config.fast_mode_fraction;
    std::vector<std::vector<Tensor3>> inputs(config.batch_per_channel,
                                             std::vector<Tensor3>(n));
    std::vector<std::vector<std::size_t>> labs(config.batch_per_channel,
                                               std::vector<std::size_t>(n));
    for (std::size_t b = 0; b < config.batch_per_channel; ++b) {
      if (fast) {
        // one independent batch slice per channel
        for (std::size_t c = 0; c < n; ++c) {
          std::size_t idx = batch_rng.next_u64() % task.size();
          inputs[b][c] = task.samples[idx];
          labs[b][c] = task.labels[idx];
        }
      } else {
        // slow mode: the same input occupies every channel
        std::size_t idx = batch_rng.next_u64() % task.size();
        for (std::size_t c = 0; c < n; ++c) {
          inputs[b][c] = task.samples[idx];
          labs[b][c] = task.labels[idx];
        }
      }
    }
    ConvNetGrads grads = make_zero_grads(params);
    LossTerms terms = loss_and_gradients(inputs, labs, params, config.gamma, config.mu, &grads);
    if (!std::isfinite(terms.total())) {
      metrics.diverged = true;
      metrics.divergence_step = step;
      break;
    }
    sgd_step(params, grads, config.learning_rate);

    if ((step + 1) % config.eval_interval == 0 || step + 1 == config.steps) {
      std::vector<double> acc = per_channel_accuracy(params, task, config.seed);
      nlohmann::json rec{{"step", step + 1},
                         {"loss", terms.total()},
                         {"cross_entropy", terms.cross_entropy},
                         {"isometry", terms.isometry},
                         {"key_orthogonality", terms.key_orthogonality},
                         {"per_channel_accuracy", acc}};
      metrics.records.push_back(std::move(rec));
      metrics.final_per_channel_accuracy = std::move(acc);
      metrics.final_loss = terms;
    }
  }

  if (out_params) *out_params = std::move(params);
  if (out_task) *out_task = std::move(task);
  return metrics;
}

std::map<std::string, double> dynamic_eval(const ConvNetParams& params, const SyntheticTask& task,
                                           const std::vector<std::string>& modes) {
  std::size_t n = params.channels();
  std::map<std::string, double> result;
  for (const auto& mode : modes) {
    if (mode == "fast") {
      result[mode] = fast_mode_accuracy(params, task);
      continue;
    }
    std::size_t group;
    if (mode == "slow") {
      group = 1;  // one input on all channels
    } else if (mode == "normal") {
      require(n % 2 == 0, "dynamic_eval: normal mode needs an even channel count");
      group = std::max<std::size_t>(1, n / 2);  // pairs of channels per input
    } else {
      fail("dynamic_eval: unknown mode '" + mode + "'");
    }
    // assignment: inputs 0..group-1, each on n/group consecutive channels
    std::vector<std::size_t> assignment(n);
    for (std::size_t c = 0; c < n; ++c) assignment[c] = c / (n / group);
    std::size_t correct = 0, total = 0;
    for (std::size_t base = 0; base < task.size(); base += group) {
      std::vector<Tensor3> inputs;
      std::vector<std::size_t> labs;
      for (std::size_t i = 0; i < group; ++i) {
        std::size_t idx = (base + i) % task.size();
        inputs.push_back(task.samples[idx]);
        labs.push_back(task.labels[idx]);
      }
      std::vector<Vec> preds = dynamic_partition(inputs, assignment, params);
      std::size_t live = std::min(group, task.size() - base);
      for (std::size_t i = 0; i < live; ++i) {
        if (argmax(preds[i]) == labs[i]) ++correct;
        ++total;
      }
    }
    result[mode] = static_cast<double>(correct) / static_cast<double>(total);
  }
  return result;
}

}  // namespace mimo
