#pragma once

#include "pas/nn/params.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pas::nn {

/// One array stored in a checkpoint file.
struct CheckpointEntry {
  std::string name;
  std::vector<int> dims;
  std::vector<float> values; // row-major
};

// File layout, all integers little-endian:
//   "PFCK" | u32 version (=1) | u32 entry count |
//   per entry: u16 name length | name bytes | u8 rank | u32 dims[rank] | f32 payload
void writeCheckpoint(std::ostream& out, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> readCheckpoint(std::istream& in);

/// Entries for every parameter in the store, in name order.
std::vector<CheckpointEntry> toCheckpoint(const ParamStore& store);

void saveCheckpoint(const ParamStore& store, const std::filesystem::path& path);

/// Copies values from a checkpoint into an existing store. Every store parameter
/// must be present with identical dims (ModelStateError otherwise); extra entries
/// whose names do not start with `prefix` are ignored.
void loadCheckpoint(ParamStore& store, const std::filesystem::path& path, const std::string& prefix = "");
void loadCheckpoint(ParamStore& store, const std::vector<CheckpointEntry>& entries, const std::string& prefix = "");

} // namespace pas::nn
