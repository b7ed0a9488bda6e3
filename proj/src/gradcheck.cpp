// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/gradcheck.hpp"

#include <cmath>
#include <vector>

#include "phonmt/joint_embedding.hpp"
#include "phonmt/rng.hpp"

namespace phonmt {

namespace {

constexpr std::size_t kSrcVocab = 12;
constexpr std::size_t kTgtVocab = 10;
constexpr std::size_t kSyllables = 9;

EncodedSentence random_source(Rng& rng, std::size_t length) {
  EncodedSentence s;
  for (std::size_t i = 0; i < length; ++i) {
    s.token_ids.push_back(static_cast<TokenId>(rng.below(kSrcVocab)));
    PronunciationSeq seq;
    const std::size_t l = 1 + rng.below(3);
    for (std::size_t k = 0; k < l; ++k) seq.syllables.push_back(static_cast<SyllableId>(rng.below(kSyllables)));
    s.pron_seqs.push_back(std::move(seq));
  }
  return s;
}

void fill_uniform(Tensor<double>& t, Rng& rng, double scale) {
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
}

}  // namespace

GradCheckResult check_embedding_gradients(std::size_t width, double beta, const GradCheckOptions& options) {
  Rng rng(derive_seed(options.seed, 0xE3B));
  JointEmbeddingParams<double> params{Tensor<double>::matrix(kSrcVocab, width),
                                      Tensor<double>::matrix(kSyllables, width), beta};
  fill_uniform(params.word_table, rng, 1.0);
  fill_uniform(params.pinyin_table, rng, 1.0);

  std::vector<EncodedSentence> sentences{random_source(rng, 5), random_source(rng, 3)};
  sentences[1].pron_seqs[0] = PronunciationSeq::unknown();
  std::vector<Tensor<double>> coeffs;
  for (const auto& s : sentences) {
    coeffs.push_back(Tensor<double>::matrix(s.size(), width));
    fill_uniform(coeffs.back(), rng, 1.0);
  }

  auto loss = [&] {
    double total = 0.0;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      const auto e = embed_source_sequence(sentences[k], params);
      for (std::size_t i = 0; i < e.size(); ++i) total += coeffs[k][i] * std::tanh(e[i]);
    }
    return total;
  };

  Tensor<double> word_grad(params.word_table.dims(), 0.0);
  Tensor<double> pinyin_grad(params.pinyin_table.dims(), 0.0);
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto e = embed_source_sequence(sentences[k], params);
    Tensor<double> up(e.dims(), 0.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double t = std::tanh(e[i]);
      up[i] = coeffs[k][i] * (1.0 - t * t);
    }
    joint_embed_backward(sentences[k], params, up, word_grad, pinyin_grad);
  }
  const std::vector<ParamRef<double>> refs{{"word_table", &params.word_table, &word_grad},
                                           {"pinyin_table", &params.pinyin_table, &pinyin_grad}};
  return finite_diff_check<double>(loss, refs, options.probes, options.h, options.seed);
}

ModelConfig tiny_gradcheck_config() {
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.model_dim = 16;
  c.ff_dim = 32;
  c.dropout = 0.0;
  c.label_smoothing = 0.1;
  c.max_len = 16;
  c.beta = 0.95;
  return c;
}

GradCheckResult check_model_gradients(const ModelConfig& config, const GradCheckOptions& options) {
  ModelConfig c = config;
  c.seed = derive_seed(options.seed, 0x90D);
  Transformer<double> model(c, kSrcVocab, kTgtVocab, kSyllables);
  Rng rng(derive_seed(options.seed, 0xDA7A));
  // Larger than the default init so attention and layer norm are far from their
  // near-uniform starting regime.
  model.weights().visit([&](const std::string&, Tensor<double>& t) {
    for (auto& v : t.values()) v += rng.uniform(-0.3, 0.3);
  });

  struct Pair {
    EncodedSentence source;
    std::vector<TokenId> in, out;
  };
  std::vector<Pair> pairs;
  for (std::size_t len : {4, 3}) {
    Pair p{random_source(rng, len + 1), {Vocab::kBos}, {}};
    for (std::size_t i = 0; i < len; ++i) {
      const auto tok = static_cast<TokenId>(Vocab::kReservedCount + rng.below(kTgtVocab - Vocab::kReservedCount));
      p.in.push_back(tok);
      p.out.push_back(tok);
    }
    p.out.push_back(Vocab::kEos);
    pairs.push_back(std::move(p));
  }

  auto grads = model.zero_grads();
  for (const auto& p : pairs) model.loss_and_grad(p.source, p.in, p.out, 1.0, &grads, nullptr);
  auto loss = [&] {
    double total = 0.0;
    for (const auto& p : pairs) total += model.loss_and_grad(p.source, p.in, p.out, 1.0, nullptr, nullptr);
    return total;
  };
  const auto refs = param_refs<double>(model.weights(), grads);
  return finite_diff_check<double>(loss, refs, options.probes, options.h, options.seed);
}

}  // namespace phonmt
