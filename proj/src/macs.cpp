#include "mimo/macs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mimo/common.hpp"

namespace mimo {

double MacReport::component(const std::string& name) const {
  for (const auto& c : components)
    if (c.name == name) return c.macs;
  fail("MacReport: unknown component '" + name + "'");
}

nlohmann::json MacReport::to_json() const {
  nlohmann::json comps = nlohmann::json::object();
  for (const auto& c : components) comps[c.name] = c.macs;
  return nlohmann::json{{"label", label},
                        {"components", comps},
                        {"total", total},
                        {"unit", unit_name},
                        {"scaled_total", scaled_total()}};
}

MacReport macs_mimoconv(const ConvArchSpec& spec) {
  require(spec.channels >= 1, "macs_mimoconv: channels must be positive");
  MacReport rep;
  rep.label = "mimoconv N=" + std::to_string(spec.channels);
  rep.unit_scale = 1e6;
  rep.unit_name = "MMAC";

  double first = spec.first.macs();
  double binding = static_cast<double>(spec.bind_dim) * static_cast<double>(spec.bind_dim) *
                   static_cast<double>(spec.bind_h) * static_cast<double>(spec.bind_w);
  double trunk = 0.0;
  for (const auto& layer : spec.trunk) trunk += layer.macs();
  trunk /= static_cast<double>(spec.channels);
  double unbinding = static_cast<double>(spec.unbind_dim) * static_cast<double>(spec.unbind_dim);
  double classifier = static_cast<double>(spec.unbind_dim) * static_cast<double>(spec.classes);

  rep.components = {{"first_layer", first},
                    {"binding", binding},
                    {"trunk", trunk},
                    {"unbinding", unbinding},
                    {"classifier", classifier}};
  for (const auto& c : rep.components) rep.total += c.macs;
  return rep;
}

MacReport macs_mimoformer(const TransformerArchSpec& spec) {
  require(spec.layers >= 1 && spec.seq_len >= 1, "macs_mimoformer: bad spec");
  double L = static_cast<double>(spec.seq_len);
  double E = static_cast<double>(spec.embed);
  double Dtot = static_cast<double>(spec.heads) * static_cast<double>(spec.head_dim);
  double R = static_cast<double>(spec.R);
  double H = static_cast<double>(spec.hidden);
  double layers = static_cast<double>(spec.layers);
  double G = static_cast<double>(spec.grid);

  MacReport rep;
  rep.unit_scale = 1e9;
  rep.unit_name = "GMAC";

  double projections = 3.0 * L * E * Dtot * layers;
  double attention = 0.0, bind_unbind = 0.0, mlps = 0.0;

  switch (spec.mode) {
    case FormerMode::Baseline:
      rep.label = "transformer";
      // score matrix + weighted values + output projection
      attention = (2.0 * L * L * Dtot + L * Dtot * Dtot) * layers;
      mlps = 2.0 * L * E * H * layers;
      break;
    case FormerMode::Performer:
      rep.label = "performer";
      // phi(K), phi(Q), A build, A x phi(q), C x phi(q), output projection
      attention = (4.0 * L * Dtot * R + L * R + L * Dtot * Dtot) * layers;
      mlps = 2.0 * L * E * H * layers;
      break;
    case FormerMode::AttOnly:
    case FormerMode::AttMlp: {
      bool att_only = spec.mode == FormerMode::AttOnly;
      rep.label = (att_only ? "mimoformer att N=" : "mimoformer att+mlp N=") +
                  std::to_string(spec.grid);
      require(spec.grid >= 1, "macs_mimoformer: grid must be positive");
      double nm = G * G;
      // FAVOR+S core per layer, amortized over the N*M channels:
      // 2(M+N) L Dtot R for superposed features and A_s, N M L R for the
      // normalizers.
      double core = (2.0 * (G + G) * L * Dtot * R + nm * L * R) / nm;
      // output projection: per channel when unbinding right after attention,
      // on the N superposed streams otherwise
      double wo = att_only ? L * Dtot * Dtot : L * Dtot * Dtot / G;
      attention = (core + wo) * layers;
      // bind k/q/v (3), plus either the attention unbind or the skip bind
      // and the post-MLP unbind
      bind_unbind = (att_only ? 4.0 * L * Dtot : 3.0 * L * Dtot + 2.0 * L * E) * layers;
      mlps = (att_only ? 2.0 * L * E * H : 2.0 * L * E * H / G) * layers;
      break;
    }
  }
  double readout = E * H + H * 2.0;

  rep.components = {{"projections", projections},
                    {"attention", attention},
                    {"bind_unbind", bind_unbind},
                    {"mlps", mlps},
                    {"readout", readout}};
  for (const auto& c : rep.components) rep.total += c.macs;
  return rep;
}

double speedup(const MacReport& a, const MacReport& b) {
  require(a.unit_name == b.unit_name, "speedup: unit mismatch");
  require(b.total > 0.0, "speedup: zero denominator");
  return a.total / b.total;
}

ConvArchSpec mimoconv_cifar100_preset(std::size_t channels) {
  ConvArchSpec spec;
  spec.first = {3, 64, 3, 32, 32};
  spec.bind_dim = 64;
  spec.bind_h = 32;
  spec.bind_w = 32;
  spec.unbind_dim = 640;
  spec.classes = 100;
  spec.channels = channels;

  // WideResNet-28-10: three groups of four residual blocks at widths
  // 160/320/640, with a 1x1 projection shortcut on each group entry.
  auto group = [&spec](std::size_t ci, std::size_t co, std::size_t hw) {
    spec.trunk.push_back({ci, co, 3, hw, hw});
    spec.trunk.push_back({co, co, 3, hw, hw});
    spec.trunk.push_back({ci, co, 1, hw, hw});  // shortcut
    for (int b = 0; b < 3; ++b) {
      spec.trunk.push_back({co, co, 3, hw, hw});
      spec.trunk.push_back({co, co, 3, hw, hw});
    }
  };
  group(64, 160, 32);
  group(160, 320, 16);
  group(320, 640, 8);
  return spec;
}

TransformerArchSpec mimoformer_text_preset(FormerMode mode, std::size_t grid) {
  TransformerArchSpec spec;
  spec.seq_len = 4096;
  spec.layers = 6;
  spec.heads = 8;
  spec.head_dim = 64;
  spec.embed = 512;
  spec.hidden = 2048;
  spec.R = 256;
  spec.grid = grid;
  spec.mode = mode;
  return spec;
}

std::string render_mac_table(const std::vector<MacReport>& rows) {
  if (rows.empty()) return "";
  std::string out;
  char buf[64];

  std::size_t label_w = 5;
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());

  out += std::string(label_w, ' ');
  for (const auto& c : rows[0].components) {
    std::snprintf(buf, sizeof(buf), " %14s", c.name.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), " %14s  [%s]\n", "total", rows[0].unit_name.c_str());
  out += buf;

  for (const auto& r : rows) {
    out += r.label + std::string(label_w - r.label.size(), ' ');
    for (const auto& c : r.components) {
      std::snprintf(buf, sizeof(buf), " %14.3f", c.macs / r.unit_scale);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " %14.1f\n", r.scaled_total());
    out += buf;
  }
  return out;
}

}  // namespace mimo
