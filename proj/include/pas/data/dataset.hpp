#pragma once

#include "pas/kinematics/skeleton.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pas {

enum class RecordSource { Synthetic, Ingested };

/// One (caption, pose) training pair.
struct DatasetRecord {
  int64_t id = 0;
  std::string archetype;
  std::string caption;
  Pose pose;
  RecordSource source = RecordSource::Synthetic;
};

/// Deterministic synthetic corpus: archetypes drawn uniformly, per-joint
/// axis-angle jitter, one caption template expansion, root yaw in [-π/4, π/4].
std::vector<DatasetRecord> generateRecords(int n, uint64_t seed);

/// Header line of the corpus text format.
inline constexpr const char* kCorpusHeader = "#pasv1";

/// Tab-separated: id, archetype, caption, 63 pose floats, 3 root floats (9 significant digits).
void writeRecords(std::ostream& out, const std::vector<DatasetRecord>& records);
void writeRecords(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

struct IngestReport {
  std::vector<DatasetRecord> records;
  size_t kept = 0;
  /// Drop counts keyed by reason: "malformed", "non-finite", "non-canonical", "duplicate-id".
  std::map<std::string, size_t> dropped;
  /// One message per dropped line, prefixed with the 1-based line number.
  std::vector<std::string> diagnostics;

  [[nodiscard]] size_t droppedTotal() const;
};

/// Parses and validates a corpus. Bad records are dropped with a per-line diagnostic;
/// an unreadable file or a missing header raises InputError.
IngestReport ingestRecords(std::istream& in);
IngestReport ingestRecords(const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> validation;
  std::vector<DatasetRecord> test;
};

/// Shuffles with `seed` and partitions by fractions (positive, summing to 1).
DatasetSplit splitRecords(const std::vector<DatasetRecord>& records, const std::array<double, 3>& fractions, uint64_t seed);

} // namespace pas
