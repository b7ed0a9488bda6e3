// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "phonmt/error.hpp"
#include "phonmt/gradcheck.hpp"
#include "phonmt/joint_embedding.hpp"
#include "phonmt/rng.hpp"

namespace phonmt {
namespace {

template <typename T>
JointEmbeddingParams<T> random_params(std::size_t v, std::size_t p, std::size_t d, double beta, std::uint64_t seed) {
  Rng rng(seed);
  JointEmbeddingParams<T> params{Tensor<T>::matrix(v, d), Tensor<T>::matrix(p, d), beta};
  for (auto& x : params.word_table.values()) x = static_cast<T>(rng.uniform(-1, 1));
  for (auto& x : params.pinyin_table.values()) x = static_cast<T>(rng.uniform(-1, 1));
  return params;
}

#ifdef __SIZEOF_FLOAT128__
using Exact = __float128;
#else
using Exact = long double;
#endif

// Distance in units of the last place of `expected`.
template <typename T>
long double ulps(T actual, Exact expected) {
  const T e = static_cast<T>(expected);
  const long double ulp = std::nextafter(std::abs(e), std::numeric_limits<T>::infinity()) - std::abs(e);
  const Exact diff = static_cast<Exact>(actual) - expected;
  return static_cast<long double>(diff < 0 ? -diff : diff) / ulp;
}

template <typename T>
void check_formula(double beta) {
  const auto params = random_params<T>(20, 15, 32, beta, 100 + static_cast<std::uint64_t>(beta * 100));
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto token = static_cast<TokenId>(rng.below(20));
    PronunciationSeq seq;
    const std::size_t l = 1 + rng.below(4);
    for (std::size_t k = 0; k < l; ++k) seq.syllables.push_back(static_cast<SyllableId>(rng.below(15)));
    const auto out = joint_embed_token<T>(token, seq, params);
    for (std::size_t j = 0; j < 32; ++j) {
      Exact mean = 0;
      for (auto s : seq.syllables) mean += params.pinyin_table(s, j);
      mean /= static_cast<Exact>(l);
      const Exact expected = (Exact{1} - static_cast<Exact>(beta)) * params.word_table(token, j) +
                             static_cast<Exact>(beta) * mean;
      ASSERT_LE(ulps<T>(out[j], expected), 1.0L) << "beta " << beta << " coord " << j;
      if (beta == 0.0) {
        ASSERT_EQ(out[j], params.word_table(token, j));
      }
      if (beta == 1.0 && l == 1) {
        ASSERT_EQ(out[j], params.pinyin_table(seq.syllables[0], j));
      }
    }
  }
}

TEST(JointEmbedding, MatchesConvexCombinationWithinOneUlpFloat) {
  for (double beta : {0.0, 0.2, 0.95, 1.0}) check_formula<float>(beta);
}

TEST(JointEmbedding, MatchesConvexCombinationWithinOneUlpDouble) {
  for (double beta : {0.0, 0.2, 0.95, 1.0}) check_formula<double>(beta);
}

TEST(JointEmbedding, PronunciationEmbeddingIsRowMean) {
  const auto params = random_params<double>(3, 4, 6, 0.5, 1);
  const PronunciationSeq seq{{1, 3, 3}};
  const auto e = embed_pronunciation_seq(seq, params);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(e[j], (params.pinyin_table(1, j) + 2 * params.pinyin_table(3, j)) / 3.0, 1e-15);
  }
}

TEST(JointEmbedding, BetaOneIgnoresTheWord) {
  const auto params = random_params<float>(10, 5, 8, 1.0, 2);
  const PronunciationSeq seq{{2, 4}};
  EXPECT_EQ(joint_embed_token<float>(3, seq, params), joint_embed_token<float>(7, seq, params));
}

TEST(JointEmbedding, BackwardDistributesGradient) {
  const auto params = random_params<double>(4, 5, 3, 0.8, 3);
  EncodedSentence s{{2, 2}, {PronunciationSeq{{1, 4}}, PronunciationSeq{{4}}}};
  Tensor<double> up = Tensor<double>::matrix(2, 3);
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = static_cast<double>(i) + 1.0;
  Tensor<double> wg(params.word_table.dims(), 0.0), pg(params.pinyin_table.dims(), 0.0);
  joint_embed_backward(s, params, up, wg, pg);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(wg(2, j), 0.2 * (up(0, j) + up(1, j)), 1e-15);
    EXPECT_NEAR(pg(1, j), 0.4 * up(0, j), 1e-15);
    EXPECT_NEAR(pg(4, j), 0.4 * up(0, j) + 0.8 * up(1, j), 1e-15);
    EXPECT_EQ(wg(0, j), 0.0);
    EXPECT_EQ(pg(0, j), 0.0);
  }
}

TEST(JointEmbedding, FiniteDifferenceCheck) {
  for (double beta : {0.0, 0.2, 0.95, 1.0}) {
    const auto r = check_embedding_gradients(8, beta, GradCheckOptions{100, 1e-4, 7});
    EXPECT_LT(r.max_rel_error, 1e-6) << "beta " << beta << " worst " << r.worst_param;
  }
}

TEST(JointEmbedding, Errors) {
  auto params = random_params<float>(3, 4, 2, 0.5, 1);
  EXPECT_THROW(joint_embed_token<float>(3, PronunciationSeq{{1}}, params), Error);
  EXPECT_THROW(joint_embed_token<float>(0, PronunciationSeq{{4}}, params), Error);
  EXPECT_THROW(joint_embed_token<float>(0, PronunciationSeq{}, params), Error);
  params.beta = 1.5;
  EXPECT_THROW(params.validate(), Error);
  EncodedSentence bad{{0, 1}, {PronunciationSeq{{1}}}};
  params.beta = 0.5;
  EXPECT_THROW(embed_source_sequence(bad, params), Error);
}

}  // namespace
}  // namespace phonmt
