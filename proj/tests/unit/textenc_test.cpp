#include "pas/data/archetypes.hpp"
#include "pas/text/text_encoder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace pas;

TEST(Tokenize, EmptyIsAllPad) {
  const auto seq = TextEncoder::standard().tokenize("");
  for (int id : seq) {
    EXPECT_EQ(id, kPadId);
  }
}

TEST(Tokenize, Deterministic) {
  const auto& enc = TextEncoder::standard();
  EXPECT_EQ(enc.tokenize("a person waves hello"), enc.tokenize("a person waves hello"));
}

TEST(Tokenize, FoldsCaseAndPunctuation) {
  const auto& enc = TextEncoder::standard();
  EXPECT_EQ(enc.tokenize("A person waves."), enc.tokenize("a PERSON waves"));
}

TEST(Tokenize, UnknownWordsAndTruncation) {
  const auto& enc = TextEncoder::standard();
  const auto seq = enc.tokenize("zyzzyva person");
  EXPECT_EQ(seq[0], kUnkId);
  EXPECT_NE(seq[1], kUnkId);
  EXPECT_EQ(seq[2], kPadId);
  std::string longCaption;
  for (int i = 0; i < 40; ++i) {
    longCaption += "person ";
  }
  for (int id : enc.tokenize(longCaption)) {
    EXPECT_NE(id, kPadId);
  }
  // A literal "<pad>" in text is not the pad token.
  EXPECT_EQ(enc.tokenize("<pad>")[0], enc.tokenize("pad")[0]);
}

TEST(Embed, NullIsZero) {
  const auto& enc = TextEncoder::standard();
  const auto e = enc.encode("");
  EXPECT_EQ(e.pooled.norm(), 0.0);
  EXPECT_EQ(e.tokens.norm(), 0.0);
  EXPECT_EQ(enc.null().pooled, e.pooled);
}

TEST(Embed, PooledUnitNormAndDeterministic) {
  const auto& enc = TextEncoder::standard();
  for (const std::string c : {"a person waves", "zyzzyva", "sits on a chair in the snow"}) {
    const auto e = enc.encode(c);
    EXPECT_NEAR(e.pooled.norm(), 1.0, 1e-12);
    EXPECT_EQ(e.pooled, enc.encode(c).pooled);
    EXPECT_EQ(e.tokens.rows(), kMaxTokens);
    EXPECT_EQ(e.tokens.cols(), kTextWidth);
  }
}

TEST(Embed, EveryTemplateFormIsDistinct) {
  const auto& enc = TextEncoder::standard();
  std::vector<std::pair<std::string, Eigen::VectorXd>> forms;
  for (const auto& a : defaultArchetypes()) {
    for (const auto& t : a.templates) {
      for (const auto& s : allExpansions(t)) {
        forms.emplace_back(s, enc.encode(s).pooled);
      }
    }
  }
  for (size_t i = 0; i < forms.size(); ++i) {
    for (size_t j = i + 1; j < forms.size(); ++j) {
      // Mean pooling ignores order, so only distinct word multisets must differ.
      auto wi = splitWords(forms[i].first);
      auto wj = splitWords(forms[j].first);
      std::sort(wi.begin(), wi.end());
      std::sort(wj.begin(), wj.end());
      if (wi != wj) {
        EXPECT_GT((forms[i].second - forms[j].second).norm(), 1e-6) << forms[i].first << " / " << forms[j].first;
      }
    }
  }
  // Captions that differ in exactly one content word.
  EXPECT_GT((enc.encode("a person sits").pooled - enc.encode("a person kicks").pooled).norm(), 1e-6);
}

TEST(Vocabulary, CoversCaptionWordsAndRoundTrips) {
  const auto& enc = TextEncoder::standard();
  for (const auto& w : captionWords()) {
    EXPECT_NE(enc.tokenize(w)[0], kUnkId) << w;
  }
  std::stringstream buf;
  enc.writeVocabulary(buf);
  EXPECT_EQ(buf.str().substr(0, 12), "<pad>\n<unk>\n");
  const auto back = TextEncoder::readVocabulary(buf);
  EXPECT_EQ(back.vocabulary(), enc.vocabulary());
  EXPECT_EQ(back.table(), enc.table());
  std::istringstream bad("hello\n");
  EXPECT_THROW(TextEncoder::readVocabulary(bad), InputError);
}

TEST(Vocabulary, SeedChangesTable) {
  const TextEncoder a({"x", "y"}, 1);
  const TextEncoder b({"x", "y"}, 2);
  EXPECT_NE(a.table(), b.table());
  EXPECT_EQ(a.table().row(0).norm(), 0.0);
}
