// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "phonmt/error.hpp"
#include "phonmt/evaluation.hpp"
#include "phonmt/rng.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

using Lines = std::vector<std::string>;
using RefSets = std::vector<Lines>;

TEST(Bleu, IdenticalCorpusScoresHundred) {
  const Lines hyp{"the cat sat on the mat", "a b c d e f"};
  EXPECT_DOUBLE_EQ(bleu_multi_ref(hyp, RefSets{hyp}).bleu, 100.0);
}

TEST(Bleu, HandCountedFixture) {
  // p = 4/5, 3/4, 2/3, 1/2; BP = 1; geometric mean = (1/5)^(1/4).
  const auto s = bleu_multi_ref(Lines{"a b c d e"}, RefSets{{"a b c d f"}});
  EXPECT_NEAR(s.bleu, 66.87, 0.01);
  EXPECT_NEAR(s.bleu, 66.8740304976422, 1e-9);
  EXPECT_EQ(s.matches, (std::array<std::size_t, 4>{4, 3, 2, 1}));
  EXPECT_EQ(s.totals, (std::array<std::size_t, 4>{5, 4, 3, 2}));
  EXPECT_DOUBLE_EQ(s.brevity_penalty, 1.0);
}

TEST(Bleu, ClippingUsesMaxOverReferences) {
  const auto s = bleu_multi_ref(Lines{"a b c d"}, RefSets{{"a b c d"}, {"x y z w"}});
  EXPECT_DOUBLE_EQ(s.bleu, 100.0);
  // Repeated unigram clipped by the reference count: "the the the the" vs "the cat".
  const auto clipped = bleu_multi_ref(Lines{"the the the the"}, RefSets{{"the cat the mat"}});
  EXPECT_EQ(clipped.matches[0], 2u);
}

TEST(Bleu, ZeroFourGramMatchesGiveZero) {
  const auto s = bleu_multi_ref(Lines{"a b c x e f"}, RefSets{{"a b c d e f"}});
  EXPECT_EQ(s.matches[3], 0u);
  EXPECT_EQ(s.bleu, 0.0);
  EXPECT_EQ(bleu_multi_ref(Lines{"a b c"}, RefSets{{"a b c"}}).bleu, 0.0);  // no 4-grams at all
}

TEST(Bleu, BrevityPenaltyUsesClosestReferenceShorterOnTies) {
  // hyp length 6; refs 4 and 8 are equally close, the shorter one (4) is used.
  const auto s = bleu_multi_ref(Lines{"a b c d e f"}, RefSets{{"a b c d"}, {"a b c d e f g h"}});
  EXPECT_EQ(s.ref_length, 4u);
  EXPECT_DOUBLE_EQ(s.brevity_penalty, 1.0);
  const auto shortened = bleu_multi_ref(Lines{"a b c d e"}, RefSets{{"a b c d e f g h i j"}});
  EXPECT_NEAR(shortened.brevity_penalty, std::exp(1.0 - 10.0 / 5.0), 1e-12);
  EXPECT_NEAR(shortened.bleu, 100.0 * std::exp(-1.0), 1e-9);
}

TEST(Bleu, CaseHandling) {
  EXPECT_DOUBLE_EQ(bleu_multi_ref(Lines{"The Cat Sat Down"}, RefSets{{"the cat sat down"}}).bleu, 100.0);
  EXPECT_EQ(bleu_multi_ref(Lines{"The Cat Sat Down"}, RefSets{{"the cat sat down"}}, false).bleu, 0.0);
}

TEST(Bleu, PermutationInvariant) {
  Lines hyp{"a b c d e", "x y z w v u", "p q r s", "k l m n o"};
  Lines ref{"a b c d f", "x y z w u v", "p q r s", "k l m o n"};
  const double base = bleu_multi_ref(hyp, RefSets{ref}).bleu;
  std::reverse(hyp.begin(), hyp.end());
  std::reverse(ref.begin(), ref.end());
  EXPECT_DOUBLE_EQ(bleu_multi_ref(hyp, RefSets{ref}).bleu, base);
}

TEST(Bleu, DuplicateReferenceNeverLowersScore) {
  Rng rng(3);
  const Lines words{"a", "b", "c", "d", "e"};
  for (int t = 0; t < 50; ++t) {
    Lines hyp, r1, r2;
    for (int s = 0; s < 3; ++s) {
      std::string h, x, y;
      for (int k = 0; k < 6; ++k) {
        h += words[rng.below(5)] + " ";
        x += words[rng.below(5)] + " ";
        y += words[rng.below(5)] + " ";
      }
      hyp.push_back(h);
      r1.push_back(x);
      r2.push_back(y);
    }
    const double one = bleu_multi_ref(hyp, RefSets{r1}).bleu;
    EXPECT_GE(bleu_multi_ref(hyp, RefSets{r1, r1}).bleu, one);
    EXPECT_GE(bleu_multi_ref(hyp, RefSets{r1, r2}).bleu, one);
  }
}

TEST(Bleu, HundredOnlyWhenEverySentenceMatchesAReference) {
  const Lines hyp{"a b c d", "e f g h"};
  EXPECT_DOUBLE_EQ(bleu_multi_ref(hyp, RefSets{{"a b c d", "x"}, {"y", "e f g h"}}).bleu, 100.0);
  EXPECT_LT(bleu_multi_ref(hyp, RefSets{{"a b c d", "e f g i"}}).bleu, 100.0);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu_multi_ref(Lines{}, RefSets{Lines{}}), Error);
  EXPECT_THROW(bleu_multi_ref(Lines{"a"}, RefSets{}), Error);
  EXPECT_THROW(bleu_multi_ref(Lines{"a", "b"}, RefSets{{"a"}}), Error);
}

JointEmbeddingParams<float> table_of(std::vector<std::vector<float>> rows) {
  JointEmbeddingParams<float> p{Tensor<float>::matrix(1, rows[0].size()),
                                Tensor<float>::matrix(rows.size(), rows[0].size()), 0.5};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) p.pinyin_table(i, j) = rows[i][j];
  }
  return p;
}

TEST(Neighbors, DuplicateRowComesFirst) {
  const auto p = table_of({{0, 0, 0}, {1, 2, 3}, {3, 1, 0}, {1, 2, 3}, {-1, -2, -3}});
  const std::vector<std::string> inv{"<unk>", "zhen", "ji", "zheng", "qi"};
  const auto nn = nearest_syllables(p, inv, "zhen", 4);
  ASSERT_EQ(nn.size(), 4u);
  EXPECT_EQ(nn[0].text, "zheng");
  EXPECT_NEAR(nn[0].similarity, 1.0, 1e-12);
  EXPECT_EQ(nn.back().text, "qi");
  EXPECT_NEAR(nn.back().similarity, -1.0, 1e-12);
}

TEST(Neighbors, OrthogonalRowsTieByID) {
  const auto p = table_of({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  const std::vector<std::string> inv{"a", "b", "c", "d"};
  const auto nn = nearest_syllables(p, inv, "c", 3);
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_EQ(nn[0].text, "a");
  EXPECT_EQ(nn[1].text, "b");
  EXPECT_EQ(nn[2].text, "d");
  for (const auto& n : nn) EXPECT_EQ(n.similarity, 0.0);
}

TEST(Neighbors, Errors) {
  const auto p = table_of({{1, 0}, {0, 1}, {1, 1}});
  const std::vector<std::string> inv{"a", "b", "c"};
  EXPECT_THROW(nearest_syllables(p, inv, "zz", 1), Error);
  EXPECT_THROW(nearest_syllables(p, inv, "a", 3), Error);
  EXPECT_NO_THROW(nearest_syllables(p, inv, "a", 2));
}

TranslationModel tiny_model(const Lexicon& lex, double beta) {
  ParallelCorpus corpus{{{"我", "有", "书"}, {"我", "又"}}, {{"i", "have", "books"}, {"i", "again"}}};
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 8;
  c.ff_dim = 16;
  c.beta = beta;
  c.char_level = true;
  return build_translation_model(corpus, lex, c, {});
}

TEST(RobustnessReport, ZeroNoiseSetReproducesCleanScores) {
  const auto lex = testing::lexicon_from_text("我\twǒ\n有\tyǒu\n又\tyòu\n书\tshū\n");
  const auto m1 = tiny_model(lex, 0.0);
  const auto m2 = tiny_model(lex, 1.0);
  const std::vector<Sentence> src{{"我", "有", "书"}, {"我", "又"}};
  const auto table = HomophoneTable::build(lex);
  const auto zero = make_noisy_testset(src, table, 0.0, 4);
  const std::vector<EvalSet> sets{{"clean", src, 0.0, std::nullopt}, {"noisy0", zero.sentences, 0.0, 4}};
  const RefSets refs{{"i have books", "i again"}};
  const std::vector<ReportModel> models{{"text", &m1}, {"phonetic", &m2}};
  const auto report = robustness_report(models, sets, refs, lex, 7);
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.scores[0].bleu, row.scores[1].bleu);
    EXPECT_EQ(row.deltas[1], 0.0);
  }
  EXPECT_EQ(report.sets[1].noise_seed, std::optional<std::uint64_t>(4));
  EXPECT_EQ(report.to_tsv(), robustness_report(models, sets, refs, lex, 7).to_tsv());
  EXPECT_NE(report.to_table().find("noisy0"), std::string::npos);
}

TEST(RobustnessReport, MisalignedSetIsRejected) {
  const auto lex = testing::lexicon_from_text("我\twǒ\n有\tyǒu\n");
  const auto m = tiny_model(lex, 0.5);
  const std::vector<EvalSet> sets{{"clean", {{"我"}}, 0.0, std::nullopt}};
  const std::vector<ReportModel> models{{"m", &m}};
  EXPECT_THROW(robustness_report(models, sets, RefSets{{"a", "b"}}, lex, 1), Error);
}

}  // namespace
}  // namespace phonmt
