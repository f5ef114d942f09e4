#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace pas {

inline constexpr int kMaxTokens = 16;
inline constexpr int kTextWidth = 64;
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr uint64_t kDefaultVocabSeed = 0x7e47e11cULL;

using TokenSequence = std::array<int, kMaxTokens>;

struct TextEmbedding {
  /// kMaxTokens × kTextWidth; pad positions are zero rows.
  Eigen::MatrixXd tokens;
  /// Unit-norm mean of the non-pad rows, or the zero vector for an all-pad sequence.
  Eigen::VectorXd pooled;
};

/// Lowercased alphanumeric runs; everything else separates words.
std::vector<std::string> splitWords(const std::string& text);

/// Frozen toy text encoder: closed vocabulary, seeded random token table, mean pooling.
class TextEncoder {
 public:
  /// `words` must not contain duplicates; ids 0 and 1 are reserved for `<pad>` and `<unk>`.
  explicit TextEncoder(std::vector<std::string> words, uint64_t seed = kDefaultVocabSeed);

  /// Vocabulary of every word the built-in caption generators emit.
  static const TextEncoder& standard();

  [[nodiscard]] TokenSequence tokenize(const std::string& caption) const;
  [[nodiscard]] TextEmbedding embed(const TokenSequence& tokens) const;
  [[nodiscard]] TextEmbedding encode(const std::string& caption) const {
    return embed(tokenize(caption));
  }
  /// Embedding with every slot set to pad: the unconditional input.
  [[nodiscard]] TextEmbedding null() const;

  [[nodiscard]] int vocabularySize() const {
    return static_cast<int>(vocab_.size());
  }
  [[nodiscard]] const std::vector<std::string>& vocabulary() const {
    return vocab_;
  }
  [[nodiscard]] uint64_t seed() const {
    return seed_;
  }
  [[nodiscard]] const Eigen::MatrixXd& table() const {
    return table_;
  }

  /// One token per line; the line number is the id. The first two lines are `<pad>` and `<unk>`.
  void writeVocabulary(std::ostream& out) const;
  static TextEncoder readVocabulary(std::istream& in, uint64_t seed = kDefaultVocabSeed);
  static TextEncoder loadVocabulary(const std::filesystem::path& path, uint64_t seed = kDefaultVocabSeed);

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  Eigen::MatrixXd table_;
  uint64_t seed_;
};

} // namespace pas
