#include "mimo/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace mimo {

namespace {

static_assert(std::endian::native == std::endian::little,
              "containers are written little-endian; big-endian hosts need swaps");

void write_payload(std::ofstream& out, ConstSpan data) {
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Vec read_payload(std::ifstream& in, std::size_t count) {
  Vec data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  require(static_cast<std::size_t>(in.gcount()) == count * sizeof(double),
          "tensor_io: truncated payload");
  return data;
}

std::size_t shape_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

struct Entry {
  std::string name;
  std::vector<std::size_t> shape;
  std::string kind;
  const Vec* data;
};

std::vector<Entry> checkpoint_entries(const ConvNetParams& p) {
  std::vector<Entry> entries;
  const auto& fc = p.first_conv;
  entries.push_back({"first_conv", {fc.co, fc.ci, fc.k, fc.k}, "conv", &fc.w});
  for (std::size_t j = 0; j < p.trunk.size(); ++j) {
    const auto& blk = p.trunk[j];
    std::string base = "trunk." + std::to_string(j) + ".";
    entries.push_back({base + "conv1", {blk.conv1.co, blk.conv1.ci, blk.conv1.k, blk.conv1.k},
                       "conv", &blk.conv1.w});
    entries.push_back({base + "act_b", {blk.act.b.size()}, "act", &blk.act.b});
    entries.push_back({base + "conv2", {blk.conv2.co, blk.conv2.ci, blk.conv2.k, blk.conv2.k},
                       "conv", &blk.conv2.w});
  }
  for (std::size_t c = 0; c < p.bind_keys.size(); ++c)
    entries.push_back({"bind_key." + std::to_string(c), {p.bind_keys[c].dim},
                       p.bind_keys[c].kind == KeyKind::Bipolar ? "bipolar_key" : "gaussian_key",
                       &p.bind_keys[c].entries});
  for (std::size_t c = 0; c < p.unbind.size(); ++c)
    entries.push_back({"unbind." + std::to_string(c), {p.unbind[c].dim, p.unbind[c].dim},
                       "unbind", &p.unbind[c].entries});
  entries.push_back({"classifier", {p.classifier.rows, p.classifier.cols}, "dense",
                     &p.classifier.a});
  return entries;
}

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<std::size_t>& shape,
                       ConstSpan data) {
  require(shape_count(shape) == data.size(), "write_tensor_file: shape/data mismatch");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_tensor_file: cannot open " + path);
  out << "MTNSR1\n";
  out << nlohmann::json{{"dtype", "f64"}, {"shape", shape}}.dump() << "\n";
  write_payload(out, data);
  require(out.good(), "write_tensor_file: write failed on " + path);
}

std::pair<std::vector<std::size_t>, Vec> read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_tensor_file: cannot open " + path);
  std::string magic, header;
  std::getline(in, magic);
  require(magic == "MTNSR1", "read_tensor_file: bad magic in " + path);
  std::getline(in, header);
  nlohmann::json h = nlohmann::json::parse(header);
  require(h.at("dtype") == "f64", "read_tensor_file: unsupported dtype");
  std::vector<std::size_t> shape = h.at("shape").get<std::vector<std::size_t>>();
  Vec data = read_payload(in, shape_count(shape));
  return {std::move(shape), std::move(data)};
}

void save_checkpoint(const std::string& path, const ConvNetParams& params) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_checkpoint: cannot open " + path);
  auto entries = checkpoint_entries(params);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : entries)
    tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"kind", e.kind}});
  nlohmann::json manifest{{"format", "MCKPT1"},
                          {"channels", params.channels()},
                          {"blocks", params.trunk.size()},
                          {"classes", params.classifier.rows},
                          {"tensors", tensors}};
  out << "MCKPT1\n" << manifest.dump() << "\n";
  for (const auto& e : entries) write_payload(out, *e.data);
  require(out.good(), "save_checkpoint: write failed on " + path);
}

ConvNetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_checkpoint: cannot open " + path);
  std::string magic, header;
  std::getline(in, magic);
  require(magic == "MCKPT1", "load_checkpoint: bad magic in " + path);
  std::getline(in, header);
  nlohmann::json manifest = nlohmann::json::parse(header);

  ConvNetParams p;
  for (const auto& t : manifest.at("tensors")) {
    std::string name = t.at("name");
    std::vector<std::size_t> shape = t.at("shape").get<std::vector<std::size_t>>();
    std::string kind = t.at("kind");
    Vec data = read_payload(in, shape_count(shape));

    if (name == "first_conv") {
      p.first_conv = {shape[0], shape[1], shape[2], 1, std::move(data)};
    } else if (name.rfind("trunk.", 0) == 0) {
      std::size_t j = static_cast<std::size_t>(std::stoul(name.substr(6)));
      if (p.trunk.size() <= j) p.trunk.resize(j + 1);
      if (name.find("conv1") != std::string::npos)
        p.trunk[j].conv1 = {shape[0], shape[1], shape[2], 1, std::move(data)};
      else if (name.find("conv2") != std::string::npos)
        p.trunk[j].conv2 = {shape[0], shape[1], shape[2], 1, std::move(data)};
      else {
        p.trunk[j].act.kind = ActKind::PRelu;
        p.trunk[j].act.b = std::move(data);
      }
    } else if (name.rfind("bind_key.", 0) == 0) {
      KeyVector key;
      key.dim = shape[0];
      key.kind = kind == "bipolar_key" ? KeyKind::Bipolar : KeyKind::Gaussian;
      key.entries = std::move(data);
      p.bind_keys.push_back(std::move(key));
    } else if (name.rfind("unbind.", 0) == 0) {
      UnbindMatrix m;
      m.dim = shape[0];
      m.entries = std::move(data);
      p.unbind.push_back(std::move(m));
    } else if (name == "classifier") {
      p.classifier = Matrix(shape[0], shape[1]);
      p.classifier.a = std::move(data);
    } else {
      fail("load_checkpoint: unknown tensor '" + name + "'");
    }
  }
  return p;
}

}  // namespace mimo
