// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Small pre-norm transformer encoder-decoder with hand-written backward passes.
// The source side is embedded with the joint textual/phonetic embedding; the
// target side uses a plain embedding table.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phonmt/corpus.hpp"
#include "phonmt/joint_embedding.hpp"
#include "phonmt/numerics.hpp"
#include "phonmt/rng.hpp"
#include "phonmt/tensor.hpp"

namespace phonmt {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 64;
  std::size_t ff_dim = 256;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  std::size_t max_len = kDefaultMaxLen;
  double beta = 0.95;
  bool char_level = false;
  // Multiply (already mixed) embeddings by sqrt(model_dim).
  bool scale_embeddings = true;
  std::uint64_t seed = 1;

  void validate() const;

  // key=value lines, one per field, fixed order.
  std::string to_text() const;
  // Sets one field from its textual form. Returns false for an unknown key.
  bool set(const std::string& key, const std::string& value);
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // in x out
  Tensor<T> bias;    // out

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

// Bias-free linear map.
template <typename T>
struct Projection {
  Tensor<T> weight;  // in x out

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
  }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gain", gain);
    f(prefix + ".bias", bias);
  }
};

template <typename T>
struct Attention {
  // A key bias only shifts every score of a query row equally, which softmax
  // ignores; the key map is therefore bias-free.
  Linear<T> query;
  Projection<T> key;
  Linear<T> value, output;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    query.visit(prefix + ".query", f);
    key.visit(prefix + ".key", f);
    value.visit(prefix + ".value", f);
    output.visit(prefix + ".output", f);
  }
};

template <typename T>
struct FeedForward {
  Linear<T> inner, outer;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    inner.visit(prefix + ".inner", f);
    outer.visit(prefix + ".outer", f);
  }
};

template <typename T>
struct EncoderLayer {
  LayerNorm<T> self_norm;
  Attention<T> self_attn;
  LayerNorm<T> ff_norm;
  FeedForward<T> ff;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    self_norm.visit(prefix + ".self_norm", f);
    self_attn.visit(prefix + ".self_attn", f);
    ff_norm.visit(prefix + ".ff_norm", f);
    ff.visit(prefix + ".ff", f);
  }
};

template <typename T>
struct DecoderLayer {
  LayerNorm<T> self_norm;
  Attention<T> self_attn;
  LayerNorm<T> cross_norm;
  Attention<T> cross_attn;
  LayerNorm<T> ff_norm;
  FeedForward<T> ff;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    self_norm.visit(prefix + ".self_norm", f);
    self_attn.visit(prefix + ".self_attn", f);
    cross_norm.visit(prefix + ".cross_norm", f);
    cross_attn.visit(prefix + ".cross_attn", f);
    ff_norm.visit(prefix + ".ff_norm", f);
    ff.visit(prefix + ".ff", f);
  }
};

template <typename T>
struct Weights {
  JointEmbeddingParams<T> source;
  Tensor<T> target_embed;
  std::vector<EncoderLayer<T>> encoder;
  LayerNorm<T> encoder_norm;
  std::vector<DecoderLayer<T>> decoder;
  LayerNorm<T> decoder_norm;
  Linear<T> output;

  // Visits every trainable tensor in a fixed order with its checkpoint name.
  template <typename F>
  void visit(F&& f) {
    f(std::string("source.word_table"), source.word_table);
    f(std::string("source.pinyin_table"), source.pinyin_table);
    f(std::string("target.embed"), target_embed);
    for (std::size_t i = 0; i < encoder.size(); ++i) encoder[i].visit("encoder." + std::to_string(i), f);
    encoder_norm.visit("encoder.norm", f);
    for (std::size_t i = 0; i < decoder.size(); ++i) decoder[i].visit("decoder." + std::to_string(i), f);
    decoder_norm.visit("decoder.norm", f);
    output.visit("output", f);
  }

  std::vector<std::pair<std::string, Tensor<T>*>> named_tensors() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    visit([&out](const std::string& name, Tensor<T>& t) { out.emplace_back(name, &t); });
    return out;
  }

  void zero() {
    visit([](const std::string&, Tensor<T>& t) { t.zero(); });
  }
};

// Shapes of every tensor for a configuration (values zero).
template <typename T>
Weights<T> shaped_weights(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                          std::size_t syllables);

// Closed-form parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                            std::size_t syllables);

template <typename T>
class Transformer {
 public:
  // Deterministic initialization from config.seed: matrices and embedding tables
  // uniform in +-model_dim^-0.5, biases zero, layer-norm gains one.
  Transformer(const ModelConfig& config, std::size_t src_vocab, std::size_t tgt_vocab, std::size_t syllables);
  // Takes ownership of existing weights (e.g. from a checkpoint).
  Transformer(const ModelConfig& config, Weights<T> weights);

  const ModelConfig& config() const { return config_; }
  Weights<T>& weights() { return weights_; }
  const Weights<T>& weights() const { return weights_; }
  std::size_t src_vocab_size() const { return weights_.source.vocab_size(); }
  std::size_t tgt_vocab_size() const { return weights_.target_embed.rows(); }
  std::size_t syllable_count() const { return weights_.source.syllable_count(); }
  std::size_t parameter_count() const;

  void set_beta(double beta);

  Weights<T> zero_grads() const;

  // Encoder output (n x d).
  Tensor<T> encode(const EncodedSentence& source) const;

  // Next-token logits after each prefix position: m x V_tgt.
  Tensor<T> forward(const EncodedSentence& source, std::span<const TokenId> target_prefix) const;
  Tensor<T> decode_logits(const Tensor<T>& memory, std::span<const TokenId> target_prefix) const;

  // Label-smoothed cross-entropy summed over target positions, times loss_scale.
  // When `grads` is set the gradient of that quantity is accumulated into it.
  // Dropout is active only when `dropout_rng` is set.
  double loss_and_grad(const EncodedSentence& source, std::span<const TokenId> target_in,
                       std::span<const TokenId> target_out, double loss_scale, Weights<T>* grads,
                       Rng* dropout_rng) const;

  // Argmax decoding from <bos> until <eos> or max_len tokens. Returned ids exclude
  // <bos> and <eos>.
  std::vector<TokenId> greedy_decode(const EncodedSentence& source, std::size_t max_len) const;

 private:
  struct Pass;

  void check_source(const EncodedSentence& source) const;
  void check_target(std::span<const TokenId> ids) const;

  ModelConfig config_;
  Weights<T> weights_;
  Tensor<T> positions_;  // sinusoidal encodings, (max_len + 2) x d
};

// A training pair: encoded source and full target ids <bos> ... <eos>.
struct TrainingExample {
  EncodedSentence source;
  std::vector<TokenId> target;
};

struct TrainOptions {
  std::size_t steps = 1000;
  std::size_t batch_size = 32;
  LrSchedule schedule{2.0, 64, 4000};
  AdamOptions adam;
  std::uint64_t seed = 1;
  // Zero the pinyin-table gradient before every update.
  bool freeze_pinyin = false;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean per-token loss of each step
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

template <typename T>
TrainResult train(Transformer<T>& model, std::span<const TrainingExample> data, const TrainOptions& options,
                  const std::function<void(std::size_t, double)>& progress = {});

// Parameters and gradients of a model as gradient-check handles.
template <typename T>
std::vector<ParamRef<T>> param_refs(Weights<T>& values, Weights<T>& grads);

}  // namespace phonmt
