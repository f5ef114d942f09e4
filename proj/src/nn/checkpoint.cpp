#include "pas/nn/checkpoint.hpp"

#include "pas/core/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace pas::nn {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void writeLe(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T readLe(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) {
    throwInput("checkpoint: unexpected end of file");
  }
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

} // namespace

void writeCheckpoint(std::ostream& out, const std::vector<CheckpointEntry>& entries) {
  out.write(kMagic, 4);
  writeLe<uint32_t>(out, kVersion);
  writeLe<uint32_t>(out, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > 0xFFFF) {
      throwInput("checkpoint: parameter name too long");
    }
    if (e.dims.size() > 0xFF) {
      throwInput("checkpoint: rank too large");
    }
    writeLe<uint16_t>(out, static_cast<uint16_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    writeLe<uint8_t>(out, static_cast<uint8_t>(e.dims.size()));
    size_t count = 1;
    for (int d : e.dims) {
      writeLe<uint32_t>(out, static_cast<uint32_t>(d));
      count *= static_cast<size_t>(d);
    }
    if (count != e.values.size()) {
      throwInput("checkpoint: entry " + e.name + " payload does not match dims");
    }
    for (float f : e.values) {
      writeLe<uint32_t>(out, std::bit_cast<uint32_t>(f));
    }
  }
}

std::vector<CheckpointEntry> readCheckpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throwInput("checkpoint: bad magic");
  }
  const auto version = readLe<uint32_t>(in);
  if (version != kVersion) {
    throwInput("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = readLe<uint32_t>(in);
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto nameLength = readLe<uint16_t>(in);
    e.name.resize(nameLength);
    in.read(e.name.data(), nameLength);
    const auto rank = readLe<uint8_t>(in);
    size_t n = 1;
    for (uint8_t r = 0; r < rank; ++r) {
      const auto d = readLe<uint32_t>(in);
      e.dims.push_back(static_cast<int>(d));
      n *= d;
    }
    e.values.resize(n);
    for (size_t k = 0; k < n; ++k) {
      e.values[k] = std::bit_cast<float>(readLe<uint32_t>(in));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<CheckpointEntry> toCheckpoint(const ParamStore& store) {
  std::vector<CheckpointEntry> entries;
  for (const auto& [name, p] : store) {
    CheckpointEntry e;
    e.name = name;
    e.dims = p.dims;
    const Tensor t = p.toTensor();
    e.values.assign(t.data().begin(), t.data().end());
    entries.push_back(std::move(e));
  }
  return entries;
}

void saveCheckpoint(const ParamStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throwInput("cannot open checkpoint for writing: " + path.string());
  }
  writeCheckpoint(out, toCheckpoint(store));
}

void loadCheckpoint(ParamStore& store, const std::filesystem::path& path, const std::string& prefix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open checkpoint: " + path.string());
  }
  loadCheckpoint(store, readCheckpoint(in), prefix);
}

void loadCheckpoint(ParamStore& store, const std::vector<CheckpointEntry>& entries, const std::string& prefix) {
  std::map<std::string, const CheckpointEntry*> byName;
  for (const auto& e : entries) {
    byName[e.name] = &e;
  }
  for (auto& [name, p] : store) {
    if (name.rfind(prefix, 0) != 0) {
      continue;
    }
    auto it = byName.find(name);
    if (it == byName.end()) {
      throw ModelStateError("checkpoint is missing parameter " + name);
    }
    if (it->second->dims != p.dims) {
      throw ModelStateError("checkpoint parameter " + name + " has mismatched dims");
    }
    const auto& values = it->second->values;
    RowMajorMatrix m(p.value.rows(), p.value.cols());
    for (size_t k = 0; k < values.size(); ++k) {
      m.data()[k] = static_cast<double>(values[k]);
    }
    p.value = m;
  }
}

} // namespace pas::nn
