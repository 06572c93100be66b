#include "scpt/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <set>

namespace scpt {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'P', 'T'};
constexpr uint8_t kDtypeF32 = 1;

void put_u16(std::ostream& o, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  o.write(b, 2);
}
void put_u32(std::ostream& o, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  o.write(b, 4);
}
void put_f32(std::ostream& o, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(o, bits);
}

uint16_t get_u16(std::istream& in, const std::string& path) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) throw CorruptFile("truncated file: " + path);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CorruptFile("truncated file: " + path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
float get_f32(std::istream& in, const std::string& path) {
  uint32_t bits = get_u32(in, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_tensor_file(const std::string& path, const NamedTensors& tensors) {
  std::set<std::string> seen;
  for (const auto& [name, t] : tensors) {
    (void)t;
    if (!seen.insert(name).second) throw CorruptFile("duplicate tensor name on write: " + name);
    if (name.size() > 0xffff) throw CorruptFile("tensor name too long: " + name);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tensor file: " + path);
  out.write(kMagic, 4);
  put_u16(out, kTensorFileVersion);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(static_cast<char>(kDtypeF32));
    out.put(static_cast<char>(t.rank()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  }
  if (!out) throw IoError("write failed: " + path);
}

NamedTensors read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptFile("bad magic in " + path);
  const uint16_t version = get_u16(in, path);
  if (version != kTensorFileVersion)
    throw VersionMismatch("tensor file version " + std::to_string(version) + " (expected " +
                          std::to_string(kTensorFileVersion) + "): " + path);
  const uint32_t count = get_u32(in, path);

  NamedTensors out;
  out.reserve(count);
  std::set<std::string> seen;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = get_u16(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CorruptFile("truncated file: " + path);
    if (!seen.insert(name).second) throw CorruptFile("duplicate tensor name '" + name + "' in " + path);
    int dtype = in.get();
    int ndim = in.get();
    if (dtype == EOF || ndim == EOF) throw CorruptFile("truncated file: " + path);
    if (dtype != kDtypeF32) throw CorruptFile("unknown dtype tag " + std::to_string(dtype) + " in " + path);
    std::vector<int> shape(static_cast<size_t>(ndim));
    for (int d = 0; d < ndim; ++d) shape[d] = static_cast<int>(get_u32(in, path));
    Tensor t(shape);
    for (auto& v : t.data) v = static_cast<double>(get_f32(in, path));
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

const Tensor* find_tensor(const NamedTensors& ts, const std::string& name) {
  for (const auto& [n, t] : ts)
    if (n == name) return &t;
  return nullptr;
}

}  // namespace scpt
