#include "pas/data/dataset.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace pas {

namespace {

// Rounds to the 9 significant digits of the corpus format so written records re-read exactly.
double quantize(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

AxisAngle quantize(const AxisAngle& aa) {
  return aa.unaryExpr([](double v) { return quantize(v); });
}

} // namespace

std::vector<DatasetRecord> generateRecords(int n, uint64_t seed) {
  if (n < 1) {
    throwInput("generate: n must be at least 1");
  }
  const auto& archetypes = defaultArchetypes();
  Rng rng(seed);
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& a = archetypes[static_cast<size_t>(rng.uniformInt(0, static_cast<int>(archetypes.size()) - 1))];
    DatasetRecord r;
    r.id = i;
    r.archetype = a.name;
    for (int j = 0; j < kBodyJointCount; ++j) {
      const auto idx = static_cast<size_t>(j);
      const double s = a.jitterStd[idx];
      const AxisAngle noise(s * rng.normal(), s * rng.normal(), s * rng.normal());
      r.pose.body[idx] = quantize(matrixToAxisAngle(axisAngleToMatrix(a.base.body[idx]) * axisAngleToMatrix(noise)));
    }
    const double yaw = rng.uniform(-std::numbers::pi / 4.0, std::numbers::pi / 4.0);
    r.pose.root = AxisAngle(0.0, quantize(yaw), 0.0);
    const auto& pattern = a.templates[static_cast<size_t>(rng.uniformInt(0, static_cast<int>(a.templates.size()) - 1))];
    r.caption = expandTemplate(pattern, rng);
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

void appendFloat(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += '\t';
  out += buf;
}

} // namespace

void writeRecords(std::ostream& out, const std::vector<DatasetRecord>& records) {
  out << kCorpusHeader << '\n';
  for (const auto& r : records) {
    if (r.caption.find('\t') != std::string::npos || r.caption.find('\n') != std::string::npos ||
        r.archetype.find('\t') != std::string::npos) {
      throwInput("record " + std::to_string(r.id) + ": captions may not contain tabs or newlines");
    }
    std::string line = std::to_string(r.id) + '\t' + r.archetype + '\t' + r.caption;
    for (const auto& aa : r.pose.body) {
      for (int k = 0; k < 3; ++k) {
        appendFloat(line, aa[k]);
      }
    }
    for (int k = 0; k < 3; ++k) {
      appendFloat(line, r.pose.root[k]);
    }
    out << line << '\n';
  }
}

void writeRecords(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throwInput("cannot write corpus: " + path.string());
  }
  writeRecords(out, records);
}

size_t IngestReport::droppedTotal() const {
  size_t n = 0;
  for (const auto& [reason, count] : dropped) {
    n += count;
  }
  return n;
}

namespace {

std::vector<std::string> splitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) {
      break;
    }
    start = tab + 1;
  }
  return fields;
}

bool parseDouble(const std::string& text, double& out) {
  if (text.empty()) {
    return false;
  }
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

} // namespace

IngestReport ingestRecords(std::istream& in) {
  IngestReport report;
  std::string line;
  int lineNumber = 0;
  std::set<int64_t> seen;
  bool headerSeen = false;
  auto drop = [&](const std::string& reason, const std::string& detail) {
    ++report.dropped[reason];
    report.diagnostics.push_back("line " + std::to_string(lineNumber) + ": " + reason + ": " + detail);
  };
  constexpr size_t kFieldCount = 3 + 3 * kBodyJointCount + 3;
  while (std::getline(in, line)) {
    ++lineNumber;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (!headerSeen) {
      if (line != kCorpusHeader) {
        throwInput("corpus line 1: expected header " + std::string(kCorpusHeader));
      }
      headerSeen = true;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = splitTabs(line);
    if (fields.size() != kFieldCount) {
      drop("malformed", "expected " + std::to_string(kFieldCount) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    DatasetRecord r;
    r.source = RecordSource::Ingested;
    try {
      size_t used = 0;
      r.id = std::stoll(fields[0], &used);
      if (used != fields[0].size()) {
        throw std::invalid_argument("id");
      }
    } catch (const std::exception&) {
      drop("malformed", "invalid id '" + fields[0] + "'");
      continue;
    }
    r.archetype = fields[1];
    r.caption = fields[2];
    std::vector<double> values(kFieldCount - 3);
    bool ok = true;
    for (size_t k = 0; k < values.size(); ++k) {
      if (!parseDouble(fields[3 + k], values[k])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      drop("malformed", "unparsable number");
      continue;
    }
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
      drop("non-finite", "record " + std::to_string(r.id));
      continue;
    }
    bool canonical = true;
    auto take = [&](size_t offset) {
      const AxisAngle aa = canonicalAxisAngle(AxisAngle(values[offset], values[offset + 1], values[offset + 2]));
      if (!(aa.norm() <= std::numbers::pi + 1e-9)) {
        canonical = false;
      }
      return aa;
    };
    for (int j = 0; j < kBodyJointCount; ++j) {
      r.pose.body[static_cast<size_t>(j)] = take(static_cast<size_t>(3 * j));
    }
    r.pose.root = take(static_cast<size_t>(3 * kBodyJointCount));
    if (!canonical) {
      drop("non-canonical", "record " + std::to_string(r.id));
      continue;
    }
    if (!seen.insert(r.id).second) {
      drop("duplicate-id", "record " + std::to_string(r.id));
      continue;
    }
    report.records.push_back(std::move(r));
  }
  if (in.bad()) {
    throwInput("corpus read failed");
  }
  report.kept = report.records.size();
  return report;
}

IngestReport ingestRecords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throwInput("cannot open corpus: " + path.string());
  }
  return ingestRecords(in);
}

DatasetSplit splitRecords(const std::vector<DatasetRecord>& records, const std::array<double, 3>& fractions, uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) {
      throwConfig("split fractions must be positive");
    }
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throwConfig("split fractions must sum to 1");
  }
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n = static_cast<double>(records.size());
  const auto nTrain = static_cast<size_t>(std::llround(n * fractions[0]));
  const auto nVal = std::min(records.size() - nTrain, static_cast<size_t>(std::llround(n * fractions[1])));
  DatasetSplit split;
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& r = records[order[i]];
    if (i < nTrain) {
      split.train.push_back(r);
    } else if (i < nTrain + nVal) {
      split.validation.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

} // namespace pas
