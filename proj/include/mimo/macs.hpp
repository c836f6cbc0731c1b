#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mimo {

// One conv layer for MAC accounting: c_in x c_out x k^2 x out_h x out_w.
struct ConvLayerSpec {
  std::size_t ci = 0, co = 0, k = 0, out_h = 0, out_w = 0;

  double macs() const {
    return static_cast<double>(ci) * static_cast<double>(co) * static_cast<double>(k * k) *
           static_cast<double>(out_h) * static_cast<double>(out_w);
  }
};

struct ConvArchSpec {
  ConvLayerSpec first;                // per input, before binding
  std::vector<ConvLayerSpec> trunk;   // in superposition
  std::size_t bind_dim = 0;           // D feature maps at binding
  std::size_t bind_h = 0, bind_w = 0; // spatial size at binding
  std::size_t unbind_dim = 0;         // D_o at unbinding
  std::size_t classes = 0;
  std::size_t channels = 1;           // N
};

enum class FormerMode { Baseline, Performer, AttOnly, AttMlp };

struct TransformerArchSpec {
  std::size_t seq_len = 0, layers = 0, heads = 0, head_dim = 0;
  std::size_t embed = 0, hidden = 0, R = 0;
  std::size_t grid = 1;  // N = M for the superposition grid
  FormerMode mode = FormerMode::Performer;
};

struct MacComponent {
  std::string name;
  double macs = 0.0;
};

// Component breakdown; `unit_scale` is only presentation (1e6 MMAC, 1e9 GMAC).
struct MacReport {
  std::string label;
  std::vector<MacComponent> components;
  double total = 0.0;
  double unit_scale = 1e6;
  std::string unit_name = "MMAC";

  double scaled_total() const { return total / unit_scale; }
  double component(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Per-sample MACs. Trunk cost is amortized by N; first layer, binding
/// (D^2 per pixel), unbinding (D_o^2), and classifier are per input.
MacReport macs_mimoconv(const ConvArchSpec& spec);

/// Per-sample MACs for one attention architecture. Projections and (for
/// att.-only) MLPs stay per channel; the FAVOR+S core follows the 2D-grid
/// cost split and is amortized over the N*M channels.
MacReport macs_mimoformer(const TransformerArchSpec& spec);

/// a.total / b.total; units must match.
double speedup(const MacReport& a, const MacReport& b);

/// WideResNet-28-10 MIMOConv on 32x32 inputs, first conv widened to 64 maps.
ConvArchSpec mimoconv_cifar100_preset(std::size_t channels);

/// Long-sequence text configuration: L=4096, 6 layers, 8 heads of 64,
/// E=512, hidden 2048, R=256.
TransformerArchSpec mimoformer_text_preset(FormerMode mode, std::size_t grid);

/// Aligned text table, one MacReport per row.
std::string render_mac_table(const std::vector<MacReport>& rows);

}  // namespace mimo
