// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Joint textual/phonetic source embedding. A token a with pronunciation
// s_1..s_l is embedded as
//
//   (1 - beta) * word_table[a] + beta * mean(pinyin_table[s_1], ..., pinyin_table[s_l])
//
// beta = 0 is the plain word embedding, beta = 1 is purely phonetic. The mean and
// the mix are accumulated in a wider type (quad precision for double) and rounded once, so every coordinate
// is within one ulp of the exact value; beta = 0 and beta = 1 copy rows exactly.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "phonmt/corpus.hpp"
#include "phonmt/error.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/tensor.hpp"

namespace phonmt {

template <typename T>
struct JointEmbeddingParams {
  Tensor<T> word_table;    // V x d
  Tensor<T> pinyin_table;  // P x d, row 0 is <unk>
  double beta = 0.95;

  std::size_t width() const { return word_table.cols(); }
  std::size_t vocab_size() const { return word_table.rows(); }
  std::size_t syllable_count() const { return pinyin_table.rows(); }

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error("beta must lie in [0, 1]");
    if (word_table.rank() != 2 || pinyin_table.rank() != 2 || word_table.cols() != pinyin_table.cols()) {
      throw Error("word and pinyin tables must be matrices of equal width");
    }
  }
};

namespace detail {

// Accumulator for the mix. Doubles need more than the 64-bit long double
// mantissa when the two terms nearly cancel.
template <typename T>
struct mix_acc {
  using type = double;
};

template <>
struct mix_acc<double> {
#ifdef __SIZEOF_FLOAT128__
  using type = __float128;
#else
  using type = long double;
#endif
};

template <typename T>
using mix_t = typename mix_acc<T>::type;

template <typename T>
void check_seq(const PronunciationSeq& seq, const JointEmbeddingParams<T>& params) {
  if (seq.syllables.empty()) throw Error("empty pronunciation sequence");
  for (auto s : seq.syllables) {
    if (s >= params.syllable_count()) {
      throw Error("syllable id " + std::to_string(s) + " out of range (" + std::to_string(params.syllable_count()) +
                  " syllables)");
    }
  }
}

template <typename T>
void accumulate_mean(const PronunciationSeq& seq, const JointEmbeddingParams<T>& params,
                     std::vector<mix_t<T>>& acc) {
  using W = mix_t<T>;
  const std::size_t d = params.width();
  acc.assign(d, W{0});
  for (auto s : seq.syllables) {
    auto row = params.pinyin_table.row(s);
    for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
  }
  const W l = static_cast<W>(seq.size());
  for (auto& v : acc) v /= l;
}

}  // namespace detail

// Mean of the pronunciation units' rows.
template <typename T>
std::vector<T> embed_pronunciation_seq(const PronunciationSeq& seq, const JointEmbeddingParams<T>& params) {
  detail::check_seq(seq, params);
  if (seq.size() == 1) {
    auto row = params.pinyin_table.row(seq.syllables[0]);
    return {row.begin(), row.end()};
  }
  std::vector<detail::mix_t<T>> acc;
  detail::accumulate_mean(seq, params, acc);
  std::vector<T> out(acc.size());
  for (std::size_t j = 0; j < acc.size(); ++j) out[j] = static_cast<T>(acc[j]);
  return out;
}

// Writes the joint embedding of one token into `out` (size d).
template <typename T>
void joint_embed_token_into(TokenId token, const PronunciationSeq& seq, const JointEmbeddingParams<T>& params,
                            std::span<T> out) {
  using W = detail::mix_t<T>;
  if (token >= params.vocab_size()) throw Error("token id " + std::to_string(token) + " out of range");
  detail::check_seq(seq, params);
  const std::size_t d = params.width();
  auto word = params.word_table.row(token);
  if (params.beta == 0.0) {
    std::copy(word.begin(), word.end(), out.begin());
    return;
  }
  if (params.beta == 1.0 && seq.size() == 1) {
    auto row = params.pinyin_table.row(seq.syllables[0]);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  thread_local std::vector<W> acc;
  detail::accumulate_mean(seq, params, acc);
  if (params.beta == 1.0) {
    for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<T>(acc[j]);
    return;
  }
  const W beta = static_cast<W>(params.beta);
  const W alpha = W{1} - beta;
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<T>(alpha * word[j] + beta * acc[j]);
}

template <typename T>
std::vector<T> joint_embed_token(TokenId token, const PronunciationSeq& seq, const JointEmbeddingParams<T>& params) {
  std::vector<T> out(params.width());
  joint_embed_token_into<T>(token, seq, params, out);
  return out;
}

// n x d matrix, one joint embedding per position.
template <typename T>
Tensor<T> embed_source_sequence(const EncodedSentence& encoded, const JointEmbeddingParams<T>& params) {
  if (encoded.token_ids.size() != encoded.pron_seqs.size()) {
    throw Error("encoded sentence has " + std::to_string(encoded.token_ids.size()) + " tokens but " +
                std::to_string(encoded.pron_seqs.size()) + " pronunciations");
  }
  Tensor<T> out = Tensor<T>::matrix(encoded.size(), params.width());
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    joint_embed_token_into<T>(encoded.token_ids[i], encoded.pron_seqs[i], params, out.row(i));
  }
  return out;
}

// Accumulates d loss / d tables for an upstream gradient over the n x d output
// of embed_source_sequence: word row a gets (1 - beta) g_i for each position
// holding a, pinyin row s gets (beta / l_i) g_i for each occurrence of s in the
// i-th sequence.
template <typename T>
void joint_embed_backward(const EncodedSentence& encoded, const JointEmbeddingParams<T>& params,
                          const Tensor<T>& upstream, Tensor<T>& word_grad, Tensor<T>& pinyin_grad) {
  const std::size_t n = encoded.size(), d = params.width();
  if (encoded.pron_seqs.size() != n || upstream.rows() != n || (n && upstream.cols() != d) ||
      !word_grad.same_shape(params.word_table) || !pinyin_grad.same_shape(params.pinyin_table)) {
    throw Error("joint_embed_backward: shape mismatch");
  }
  const T alpha = static_cast<T>(1.0 - params.beta);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = upstream.row(i);
    if (params.beta != 1.0) {
      auto wg = word_grad.row(encoded.token_ids[i]);
      for (std::size_t j = 0; j < d; ++j) wg[j] += alpha * g[j];
    }
    if (params.beta != 0.0) {
      const auto& seq = encoded.pron_seqs[i];
      const T scale = static_cast<T>(params.beta / static_cast<double>(seq.size()));
      for (auto s : seq.syllables) {
        auto pg = pinyin_grad.row(s);
        for (std::size_t j = 0; j < d; ++j) pg[j] += scale * g[j];
      }
    }
  }
}

}  // namespace phonmt
