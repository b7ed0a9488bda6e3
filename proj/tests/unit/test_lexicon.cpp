// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "phonmt/error.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/rng.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

using testing::lexicon_from_text;
using testing::shipped_lexicon;

TEST(StripTone, DiacriticsAndDigits) {
  EXPECT_EQ(strip_tone("yǒu"), "you");
  EXPECT_EQ(strip_tone("yòu"), "you");
  EXPECT_EQ(strip_tone("zhōng"), "zhong");
  EXPECT_EQ(strip_tone("lǜ"), "lv");
  EXPECT_EQ(strip_tone("nü3"), "nv");
  EXPECT_EQ(strip_tone("lu:4"), "lv");
  EXPECT_EQ(strip_tone("ZHONG1"), "zhong");
  EXPECT_EQ(strip_tone("ma5"), "ma");
  EXPECT_EQ(strip_tone("ê"), "e");
}

TEST(StripTone, Idempotent) {
  for (const char* s : {"yǒu", "lǜ", "zhong1", "a", "er2", "ńg"}) {
    const auto once = strip_tone(s);
    EXPECT_EQ(strip_tone(once), once) << s;
  }
}

TEST(Lexicon, ParseBuildsSortedInventoryWithUnkFirst) {
  const auto lex = lexicon_from_text("# comment\n有\tyǒu\n又\tyòu\n中国\tzhōng guó\n");
  EXPECT_EQ(lex.size(), 3u);
  EXPECT_EQ(lex.syllable_texts(), (std::vector<std::string>{"<unk>", "guo", "you", "zhong"}));
  EXPECT_EQ(lex.syllable_id("you"), SyllableId{2});
  EXPECT_FALSE(lex.syllable_id("xx").has_value());
  const auto* p = lex.find("中国");
  ASSERT_NE(p, nullptr);
  ASSERT_EQ(p->size(), 1u);
  EXPECT_EQ(lex.key_of(p->front()), "zhong|guo");
}

TEST(Lexicon, RepeatedLinesAddReadingsAndDropDuplicates) {
  const auto lex = lexicon_from_text("行\txíng\n行\tháng\n行\txìng\n");
  const auto* p = lex.find("行");
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->size(), 2u);
}

TEST(Lexicon, ParseErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      lexicon_from_text(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{9999};
  };
  EXPECT_EQ(line_of("有\tyǒu\n坏行\n"), 2u);
  EXPECT_EQ(line_of("有\tyǒu\n\tyǒu\n"), 2u);
  EXPECT_EQ(line_of("# c\n有\tyǒu\n又\t\n"), 3u);
  EXPECT_EQ(line_of("有\ty0u\n"), 1u);
  EXPECT_EQ(line_of(""), 0u);
}

TEST(Lexicon, MissingFileIsAnError) { EXPECT_THROW(Lexicon::load("/nonexistent/lexicon.tsv"), Error); }

TEST(Lexicon, WriteParseRoundTrip) {
  const auto lex = lexicon_from_text("有\tyǒu\n又\tyòu\n行\txíng\n行\tháng\n");
  std::ostringstream out;
  lex.write(out);
  const auto again = lexicon_from_text(out.str());
  EXPECT_EQ(again.syllable_texts(), lex.syllable_texts());
  EXPECT_EQ(again.entries(), lex.entries());
}

TEST(Pronounce, WholeEntryFirst) {
  const auto lex = lexicon_from_text("中\tzhōng\n国\tguó\n中国\tzhōng guó\n");
  Rng rng(1);
  EXPECT_EQ(lex.texts_of(pronounce("中国", lex, rng)), (std::vector<std::string>{"zhong", "guo"}));
}

TEST(Pronounce, FallsBackToCharacters) {
  const auto lex = lexicon_from_text("很\thěn\n好\thǎo\n");
  Rng rng(1);
  EXPECT_EQ(lex.texts_of(pronounce("很好", lex, rng)), (std::vector<std::string>{"hen", "hao"}));
}

TEST(Pronounce, UnknownWhenAnyCharacterIsMissing) {
  const auto lex = lexicon_from_text("很\thěn\n");
  Rng rng(1);
  EXPECT_TRUE(pronounce("很X", lex, rng).is_unknown());
  EXPECT_TRUE(pronounce("hello", lex, rng).is_unknown());
  EXPECT_EQ(pronounce("", lex, rng), PronunciationSeq::unknown());
}

TEST(Pronounce, AmbiguousWordsDrawEveryReading) {
  const auto lex = lexicon_from_text("行\txíng\n行\tháng\n");
  Rng rng(3);
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) seen.insert(lex.key_of(pronounce("行", lex, rng)));
  EXPECT_EQ(seen, (std::set<std::string>{"hang", "xing"}));
}

TEST(Pronounce, UnambiguousWordsDoNotConsumeRandomness) {
  const auto lex = lexicon_from_text("有\tyǒu\n行\txíng\n行\tháng\n");
  Rng a(5), b(5);
  pronounce("有", lex, a);
  EXPECT_EQ(a.next(), b.next());
}

TEST(ShippedLexicon, HasTheStandardToneslessInventory) {
  const auto& lex = shipped_lexicon();
  // 404 toneless syllables plus <unk>.
  EXPECT_EQ(lex.syllable_count(), 405u);
  EXPECT_EQ(lex.syllable_text(kUnkSyllable), kUnkSyllableText);
}

TEST(ShippedLexicon, KnownEntries) {
  const auto& lex = shipped_lexicon();
  Rng rng(1);
  EXPECT_EQ(lex.texts_of(pronounce("中国", lex, rng)), (std::vector<std::string>{"zhong", "guo"}));
  const auto* you = lex.find("有");
  ASSERT_NE(you, nullptr);
  EXPECT_EQ(lex.key_of(you->front()), "you");
  const auto* again = lex.find("又");
  ASSERT_NE(again, nullptr);
  EXPECT_EQ(lex.key_of(again->front()), "you");
  EXPECT_GT(lex.find("行")->size(), 1u);
  // Not a lexicon word; pronounced character by character.
  EXPECT_FALSE(lex.contains("很好"));
  EXPECT_EQ(lex.texts_of(pronounce("很好", lex, rng)), (std::vector<std::string>{"hen", "hao"}));
}

}  // namespace
}  // namespace phonmt
