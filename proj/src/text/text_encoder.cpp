#include "pas/text/text_encoder.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace pas {

namespace {

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

std::vector<std::string> splitWords(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) != 0) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) {
    words.push_back(std::move(cur));
  }
  return words;
}

TextEncoder::TextEncoder(std::vector<std::string> words, uint64_t seed) : seed_(seed) {
  vocab_.reserve(words.size() + 2);
  vocab_.emplace_back(kPadToken);
  vocab_.emplace_back(kUnkToken);
  for (auto& w : words) {
    vocab_.push_back(std::move(w));
  }
  for (size_t i = 0; i < vocab_.size(); ++i) {
    if (!ids_.emplace(vocab_[i], static_cast<int>(i)).second) {
      throwInput("vocabulary: duplicate token '" + vocab_[i] + "'");
    }
  }
  // Each row depends only on the token string and the seed, so growing the vocabulary keeps old rows.
  table_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab_.size()), kTextWidth);
  for (size_t i = 1; i < vocab_.size(); ++i) {
    Rng rng(mixSeed(seed, fnv1a(vocab_[i])));
    table_.row(static_cast<Eigen::Index>(i)) = rng.normalMatrix(1, kTextWidth) / std::sqrt(double(kTextWidth));
  }
}

const TextEncoder& TextEncoder::standard() {
  static const TextEncoder encoder(captionWords());
  return encoder;
}

TokenSequence TextEncoder::tokenize(const std::string& caption) const {
  TokenSequence seq;
  seq.fill(kPadId);
  const auto words = splitWords(caption);
  for (size_t i = 0; i < words.size() && i < static_cast<size_t>(kMaxTokens); ++i) {
    const auto it = ids_.find(words[i]);
    seq[i] = it == ids_.end() || it->second == kPadId ? kUnkId : it->second;
  }
  return seq;
}

TextEmbedding TextEncoder::embed(const TokenSequence& tokens) const {
  TextEmbedding e;
  e.tokens = Eigen::MatrixXd::Zero(kMaxTokens, kTextWidth);
  e.pooled = Eigen::VectorXd::Zero(kTextWidth);
  int count = 0;
  for (int i = 0; i < kMaxTokens; ++i) {
    const int id = tokens[static_cast<size_t>(i)];
    if (id < 0 || id >= vocabularySize()) {
      throwInput("token id " + std::to_string(id) + " outside the vocabulary");
    }
    if (id == kPadId) {
      continue;
    }
    e.tokens.row(i) = table_.row(id);
    e.pooled += table_.row(id).transpose();
    ++count;
  }
  if (count > 0) {
    const double n = e.pooled.norm();
    if (n > 0.0) {
      e.pooled /= n;
    }
  }
  return e;
}

TextEmbedding TextEncoder::null() const {
  TokenSequence pad;
  pad.fill(kPadId);
  return embed(pad);
}

void TextEncoder::writeVocabulary(std::ostream& out) const {
  for (const auto& token : vocab_) {
    out << token << '\n';
  }
}

TextEncoder TextEncoder::readVocabulary(std::istream& in, uint64_t seed) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken) {
    throwInput("vocabulary must start with <pad> and <unk>");
  }
  return TextEncoder(std::vector<std::string>(lines.begin() + 2, lines.end()), seed);
}

TextEncoder TextEncoder::loadVocabulary(const std::filesystem::path& path, uint64_t seed) {
  std::ifstream in(path);
  if (!in) {
    throwInput("cannot open vocabulary: " + path.string());
  }
  return readVocabulary(in, seed);
}

} // namespace pas
