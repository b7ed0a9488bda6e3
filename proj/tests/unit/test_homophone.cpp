// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "phonmt/error.hpp"
#include "phonmt/homophone.hpp"
#include "phonmt/rng.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

using testing::lexicon_from_text;

const char* kSmallLexicon =
    "有\tyǒu\n"
    "又\tyòu\n"
    "右\tyòu\n"
    "我\twǒ\n"
    "行\txíng\n"
    "行\tháng\n"
    "航\tháng\n"
    "星\txīng\n"
    "中国\tzhōng guó\n"
    "忠\tzhōng\n"
    "国\tguó\n";

TEST(HomophoneTable, GroupsBySyllableKey) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const auto* you = table.group("you");
  ASSERT_NE(you, nullptr);
  EXPECT_EQ(*you, (std::vector<std::string>{"又", "右", "有"}));
  EXPECT_EQ(table.group("wo")->size(), 1u);
  EXPECT_EQ(table.group("zhong|guo")->size(), 1u);
  EXPECT_EQ(table.homophone_group_count(), 3u);  // you, xing, hang
  EXPECT_EQ(table.word_count(), 10u);
}

TEST(HomophoneTable, MultiReadingWordsJoinEveryGroup) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  auto keys = table.keys_of("行");
  EXPECT_EQ(std::vector<std::string>(keys.begin(), keys.end()), (std::vector<std::string>{"xing", "hang"}));
  EXPECT_TRUE(table.has_homophones("行"));
  EXPECT_FALSE(table.has_homophones("我"));
  EXPECT_FALSE(table.has_homophones("不在"));
}

TEST(HomophoneTable, VocabRestrictsAndPronouncesCompounds) {
  const std::vector<std::string> vocab{"有", "又", "我", "忠国", "中国", "xyz"};
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon), &vocab);
  EXPECT_EQ(*table.group("you"), (std::vector<std::string>{"又", "有"}));
  // 忠国 is not an entry but its characters are.
  EXPECT_EQ(*table.group("zhong|guo"), (std::vector<std::string>{"中国", "忠国"}));
  EXPECT_TRUE(table.keys_of("xyz").empty());
  EXPECT_EQ(table.group("xing"), nullptr);
}

TEST(HomophoneTable, HomophoneRatio) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const std::vector<std::string> vocab{"有", "我", "行", "中国"};
  EXPECT_DOUBLE_EQ(homophone_ratio(table, vocab), 0.5);
  EXPECT_THROW(homophone_ratio(table, std::vector<std::string>{}), Error);
}

TEST(Noise, ReplacementsAreTableHomophones) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const Sentence s{"我", "有", "行", "星", "中国", "x"};
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = noisify_sentence(s, table, {0.5, 0, NoiseMode::kTestSet}, rng);
    ASSERT_EQ(r.tokens.size(), s.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (r.tokens[i] == s[i]) continue;
      ++changed;
      const auto orig_keys = table.keys_of(s[i]);
      const auto new_keys = table.keys_of(r.tokens[i]);
      const bool shares = std::any_of(orig_keys.begin(), orig_keys.end(), [&](const std::string& k) {
        return std::find(new_keys.begin(), new_keys.end(), k) != new_keys.end();
      });
      EXPECT_TRUE(shares) << s[i] << " -> " << r.tokens[i];
    }
    EXPECT_EQ(changed, r.replacements);
    EXPECT_EQ(r.tokens[0], "我");
    EXPECT_EQ(r.tokens[4], "中国");
    EXPECT_EQ(r.tokens[5], "x");
  }
}

TEST(Noise, ProbabilityZeroIsIdentity) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const std::vector<Sentence> corpus{{"有", "行"}, {"又", "星", "我"}};
  const auto noisy = make_noisy_testset(corpus, table, 0.0, 3);
  EXPECT_EQ(noisy.sentences, corpus);
  EXPECT_EQ(noisy.replacements, 0u);
  EXPECT_EQ(noisy.replaceable_tokens, 4u);
}

TEST(Noise, ProbabilityOneReplacesEveryReplaceableToken) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const std::vector<Sentence> corpus{{"有", "行", "我"}, {"又", "星"}};
  const auto noisy = make_noisy_testset(corpus, table, 1.0, 3);
  EXPECT_EQ(noisy.replacements, 4u);
  EXPECT_NE(noisy.sentences[0][0], "有");
  EXPECT_NE(noisy.sentences[0][1], "行");
  EXPECT_EQ(noisy.sentences[0][2], "我");
}

TEST(Noise, DeterministicGivenSeed) {
  const auto table = HomophoneTable::build(testing::shipped_lexicon());
  const std::vector<Sentence> corpus{{"我", "有", "一", "个", "中国", "朋友"}, {"他", "又", "来", "了"}};
  const auto a = make_noisy_testset(corpus, table, 0.5, 42);
  const auto b = make_noisy_testset(corpus, table, 0.5, 42);
  EXPECT_EQ(a.sentences, b.sentences);
  bool differs = false;
  for (std::uint64_t seed = 43; seed < 60 && !differs; ++seed) {
    differs = make_noisy_testset(corpus, table, 0.5, seed).sentences != a.sentences;
  }
  EXPECT_TRUE(differs);
}

TEST(Noise, InvalidProbabilityRejected) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  EXPECT_THROW(make_noisy_testset({{"有"}}, table, 1.5, 1), Error);
  EXPECT_THROW(make_noisy_testset({{"有"}}, table, -0.1, 1), Error);
}

ParallelCorpus ten_pairs() {
  ParallelCorpus c;
  for (int i = 0; i < 10; ++i) {
    c.source.push_back({"我", i % 2 ? "有" : "行", "星"});
    c.target.push_back({"t" + std::to_string(i)});
  }
  return c;
}

TEST(Augment, AddsRoundedFractionAfterVerbatimOriginals) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const auto corpus = ten_pairs();
  const auto out = augment_corpus(corpus, table, 0.4, 0.2, 9);
  ASSERT_EQ(out.size(), 14u);
  ASSERT_EQ(out.target.size(), 14u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(out.source[i], corpus.source[i]);
    EXPECT_EQ(out.target[i], corpus.target[i]);
  }
  for (std::size_t i = 10; i < 14; ++i) {
    // Each added pair is a noisy variant of some original with its target.
    auto it = std::find(corpus.target.begin(), corpus.target.end(), out.target[i]);
    ASSERT_NE(it, corpus.target.end());
    const auto& src = corpus.source[static_cast<std::size_t>(it - corpus.target.begin())];
    EXPECT_NE(out.source[i], src);
    EXPECT_EQ(out.source[i].size(), src.size());
  }
}

TEST(Augment, SamplesWithoutReplacementWithinAPass) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const auto out = augment_corpus(ten_pairs(), table, 1.0, 0.5, 5);
  ASSERT_EQ(out.size(), 20u);
  std::set<Sentence> targets(out.target.begin() + 10, out.target.end());
  EXPECT_EQ(targets.size(), 10u);
}

TEST(Augment, RatioZeroKeepsCorpus) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  const auto corpus = ten_pairs();
  const auto out = augment_corpus(corpus, table, 0.0, 0.2, 5);
  EXPECT_EQ(out.source, corpus.source);
}

TEST(Augment, Errors) {
  const auto table = HomophoneTable::build(lexicon_from_text(kSmallLexicon));
  EXPECT_THROW(augment_corpus(ten_pairs(), table, -0.1, 0.2, 1), Error);
  EXPECT_THROW(augment_corpus(ParallelCorpus{}, table, 0.4, 0.2, 1), Error);
  ParallelCorpus unnoisable{{{"我"}, {"x"}}, {{"a"}, {"b"}}};
  EXPECT_THROW(augment_corpus(unnoisable, table, 0.4, 0.2, 1), Error);
  ParallelCorpus misaligned{{{"有"}}, {}};
  EXPECT_THROW(augment_corpus(misaligned, table, 0.4, 0.2, 1), Error);
  const auto no_groups = HomophoneTable::build(lexicon_from_text("我\twǒ\n"));
  EXPECT_THROW(augment_corpus(ten_pairs(), no_groups, 0.4, 0.2, 1), Error);
}

}  // namespace
}  // namespace phonmt
