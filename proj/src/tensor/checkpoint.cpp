#include "tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace schedsyn::tensor {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'T', 'E', 'N', 'S', 'R', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in, const std::string& origin) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError(origin + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(static_cast<int>(i));
    write_u32(out, static_cast<uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(out, p.trainable ? 1 : 0);
    write_u32(out, static_cast<uint32_t>(p.value.shape.size()));
    for (const int d : p.value.shape) write_u32(out, static_cast<uint32_t>(d));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(static_cast<int>(i));
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.data.size() * sizeof(float)));
  }
  if (!out) throw DataError("checkpoint write failed");
}

ParamStore load_checkpoint(std::istream& in, const std::string& origin) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(origin + ": not a tensor checkpoint");
  }
  const uint32_t version = read_u32(in, origin);
  if (version != kVersion) {
    throw DataError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t count = read_u32(in, origin);

  ParamStore store;
  std::vector<int> indices;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_u32(in, origin);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const bool trainable = read_u32(in, origin) != 0;
    const uint32_t ndim = read_u32(in, origin);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_u32(in, origin));
    indices.push_back(store.add(name, Tensor::zeros(std::move(shape)), trainable));
  }
  for (const int idx : indices) {
    Parameter& p = store.at(idx);
    in.read(reinterpret_cast<char*>(p.value.data.data()),
            static_cast<std::streamsize>(p.value.data.size() * sizeof(float)));
    if (!in) throw DataError(origin + ": truncated tensor payload for '" + p.name + "'");
  }
  return store;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_checkpoint(params, out);
}

ParamStore load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in, path);
}

}  // namespace schedsyn::tensor
