#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mimo/common.hpp"
#include "mimo/convnet.hpp"

namespace mimo {

// Binary tensor container: the line "MTNSR1", one JSON header line
// {"dtype":"f64","shape":[...]}, then the row-major little-endian float64
// payload.
void write_tensor_file(const std::string& path, const std::vector<std::size_t>& shape,
                       ConstSpan data);
std::pair<std::vector<std::size_t>, Vec> read_tensor_file(const std::string& path);

// Checkpoint container: the line "MCKPT1", one JSON manifest line listing
// {name, shape, kind} per tensor in a fixed order (first_conv, per block
// conv1/act_b/conv2, bind_key[i], unbind[i], classifier), then the
// concatenated float64 payloads in manifest order.
void save_checkpoint(const std::string& path, const ConvNetParams& params);
ConvNetParams load_checkpoint(const std::string& path);

}  // namespace mimo
