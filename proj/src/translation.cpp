// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/translation.hpp"

namespace phonmt {

Segmenter TranslationModel::source_segmenter() const {
  if (config().char_level) return Segmenter::chars();
  if (src_bpe.num_merges() > 0) return Segmenter::bpe_model(src_bpe);
  return Segmenter::word();
}

Segmenter TranslationModel::target_segmenter() const {
  return tgt_uses_bpe ? Segmenter::bpe_model(tgt_bpe) : Segmenter::word();
}

namespace {

std::vector<Sentence> segment_all(const std::vector<Sentence>& corpus, const Segmenter& seg) {
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(seg.segment(s));
  return out;
}

}  // namespace

TranslationModel build_translation_model(const ParallelCorpus& corpus, const Lexicon& lexicon,
                                         const ModelConfig& config, const VocabLimits& limits) {
  corpus.validate();
  config.validate();
  BpeModel src_bpe, tgt_bpe;
  const bool use_bpe = limits.bpe_merges > 0;
  if (use_bpe && !config.char_level) src_bpe = learn_bpe(corpus.source, limits.bpe_merges);
  if (use_bpe) tgt_bpe = learn_bpe(corpus.target, limits.bpe_merges);

  Segmenter src_seg = config.char_level ? Segmenter::chars()
                      : use_bpe         ? Segmenter::bpe_model(src_bpe)
                                        : Segmenter::word();
  Segmenter tgt_seg = use_bpe ? Segmenter::bpe_model(tgt_bpe) : Segmenter::word();
  Vocab src_vocab = Vocab::build(segment_all(corpus.source, src_seg), limits.src_max_size);
  Vocab tgt_vocab = Vocab::build(segment_all(corpus.target, tgt_seg), limits.tgt_max_size);

  Transformer<float> net(config, src_vocab.size(), tgt_vocab.size(), lexicon.syllable_count());
  return TranslationModel{std::move(src_bpe), std::move(tgt_bpe), use_bpe, std::move(src_vocab),
                          std::move(tgt_vocab), lexicon.syllable_texts(), std::move(net)};
}

void check_lexicon(const TranslationModel& model, const Lexicon& lexicon) {
  if (lexicon.syllable_texts() != model.syllables) {
    throw Error("lexicon syllable inventory (" + std::to_string(lexicon.syllable_count()) +
                " syllables) does not match the model's (" + std::to_string(model.syllables.size()) + ")");
  }
}

void check_compatible(const TranslationModel& model, const Vocab& src_vocab, const Vocab& tgt_vocab) {
  if (src_vocab.size() != model.net.src_vocab_size() || tgt_vocab.size() != model.net.tgt_vocab_size()) {
    throw Error("vocabulary sizes " + std::to_string(src_vocab.size()) + "/" + std::to_string(tgt_vocab.size()) +
                " do not match the model's " + std::to_string(model.net.src_vocab_size()) + "/" +
                std::to_string(model.net.tgt_vocab_size()));
  }
}

EncodedSentence encode_source(const TranslationModel& model, const Lexicon& lexicon, std::span<const std::string> words,
                              Rng& rng) {
  return encode_sentence(words, model.source_segmenter(), model.src_vocab, &lexicon, rng, Side::kSource,
                         model.config().max_len);
}

EncodedCorpus encode_parallel(const TranslationModel& model, const Lexicon& lexicon, const ParallelCorpus& corpus,
                              std::uint64_t seed) {
  corpus.validate();
  check_lexicon(model, lexicon);
  const auto src_seg = model.source_segmenter();
  const auto tgt_seg = model.target_segmenter();
  EncodedCorpus out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    try {
      auto src = encode_sentence(corpus.source[i], src_seg, model.src_vocab, &lexicon, rng, Side::kSource,
                                 model.config().max_len);
      auto tgt = encode_sentence(corpus.target[i], tgt_seg, model.tgt_vocab, nullptr, rng, Side::kTarget,
                                 model.config().max_len);
      if (src.token_ids.empty()) {
        ++out.skipped;
        continue;
      }
      out.examples.push_back(TrainingExample{std::move(src), std::move(tgt.token_ids)});
      out.kept_lines.push_back(i);
    } catch (const SentenceTooLong&) {
      ++out.skipped;
    }
  }
  return out;
}

Sentence translate(const TranslationModel& model, const Lexicon& lexicon, std::span<const std::string> words, Rng& rng) {
  if (words.empty()) return {};
  auto src = encode_source(model, lexicon, words, rng);
  auto ids = model.net.greedy_decode(src, model.config().max_len);
  return merge_subwords(decode_ids(ids, model.tgt_vocab));
}

std::vector<Sentence> translate_corpus(const TranslationModel& model, const Lexicon& lexicon,
                                       const std::vector<Sentence>& corpus, std::uint64_t seed) {
  check_lexicon(model, lexicon);
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(translate(model, lexicon, corpus[i], rng));
  }
  return out;
}

}  // namespace phonmt
