#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scpt/tensor.hpp"

namespace scpt {

// Binary tensor container. Layout (all little-endian):
//   magic "SCPT" (4 bytes), format version u16, tensor count u32, then per
//   tensor: name length u16 + UTF-8 name, dtype tag u8 (1 = f32), ndim u8,
//   dims as u32 each, row-major f32 payload.
// Names must be unique within a file. Values are narrowed to f32 on write
// and widened on read, so write(read(f)) reproduces f byte for byte.
constexpr uint16_t kTensorFileVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_tensor_file(const std::string& path, const NamedTensors& tensors);
NamedTensors read_tensor_file(const std::string& path);

// nullptr when absent
const Tensor* find_tensor(const NamedTensors& ts, const std::string& name);

}  // namespace scpt
