// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "phonmt/rng.hpp"
#include "phonmt/text.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

TEST(Text, Utf8CharsSplitsMultibyteCodePoints) {
  const auto chars = utf8_chars("a中ü国");
  ASSERT_EQ(chars.size(), 4u);
  EXPECT_EQ(chars[0], "a");
  EXPECT_EQ(chars[1], "中");
  EXPECT_EQ(chars[2], "ü");
  EXPECT_EQ(chars[3], "国");
}

TEST(Text, SplitAndJoin) {
  EXPECT_EQ(split_whitespace("  a \t b\n c  "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_whitespace("   ").empty());
  EXPECT_EQ(join({"x", "y", "z"}), "x y z");
  EXPECT_EQ(join({}), "");
}

TEST(Text, AsciiLowerLeavesNonAsciiAlone) { EXPECT_EQ(ascii_lower("AbC中Ü"), "abc中Ü"); }

TEST(Text, ReadLinesStripsCarriageReturns) {
  const auto dir = testing::scratch_dir("text");
  {
    std::ofstream out(dir / "crlf.txt", std::ios::binary);
    out << "a b\r\nc\r\n";
  }
  EXPECT_EQ(read_lines(dir / "crlf.txt"), (std::vector<std::string>{"a b", "c"}));
  const auto corpus = read_corpus(dir / "crlf.txt");
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0], (Sentence{"a", "b"}));
}

TEST(Text, CorpusRoundTrip) {
  const auto dir = testing::scratch_dir("text_rt");
  const std::vector<Sentence> corpus{{"我", "有"}, {}, {"x"}};
  write_corpus(dir / "c.txt", corpus);
  EXPECT_EQ(read_corpus(dir / "c.txt"), corpus);
}

TEST(Rng, DerivedSeedsDifferAndRepeat) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(1);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++seen[v];
  }
  for (int c : seen) EXPECT_GT(c, 800);
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace phonmt
