// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// A trained translator: network weights plus everything needed to turn raw
// sentences into model inputs and back (segmentation, vocabularies, syllable
// inventory).

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phonmt/corpus.hpp"
#include "phonmt/homophone.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/model.hpp"

namespace phonmt {

struct TranslationModel {
  BpeModel src_bpe;  // empty unless source segmentation is BPE
  BpeModel tgt_bpe;
  bool tgt_uses_bpe = false;
  Vocab src_vocab;
  Vocab tgt_vocab;
  std::vector<std::string> syllables;  // inventory the pinyin table is indexed by
  Transformer<float> net;

  const ModelConfig& config() const { return net.config(); }
  Segmenter source_segmenter() const;
  Segmenter target_segmenter() const;
};

struct VocabLimits {
  std::size_t bpe_merges = 0;  // per side; 0 keeps target words whole
  std::size_t src_max_size = 50000;
  std::size_t tgt_max_size = 50000;
};

// Learns segmentation and vocabularies from `corpus` and initializes a network
// from config.seed. Source segmentation is per-character when config.char_level
// is set, BPE when bpe_merges > 0, whole words otherwise.
TranslationModel build_translation_model(const ParallelCorpus& corpus, const Lexicon& lexicon,
                                         const ModelConfig& config, const VocabLimits& limits);

// Throws unless the lexicon's syllable inventory is the one the model was built with.
void check_lexicon(const TranslationModel& model, const Lexicon& lexicon);

// Throws when vocabularies differ in size from the model's tables.
void check_compatible(const TranslationModel& model, const Vocab& src_vocab, const Vocab& tgt_vocab);

EncodedSentence encode_source(const TranslationModel& model, const Lexicon& lexicon, std::span<const std::string> words,
                              Rng& rng);

struct EncodedCorpus {
  std::vector<TrainingExample> examples;
  std::vector<std::size_t> kept_lines;  // corpus line of each example
  std::size_t skipped = 0;              // over-length pairs
};

// Encodes every pair with the generator derive_seed(seed, line); pairs longer than
// the configured max length are skipped.
EncodedCorpus encode_parallel(const TranslationModel& model, const Lexicon& lexicon, const ParallelCorpus& corpus,
                              std::uint64_t seed);

Sentence translate(const TranslationModel& model, const Lexicon& lexicon, std::span<const std::string> words, Rng& rng);

// Translates line i with the generator derive_seed(seed, i).
std::vector<Sentence> translate_corpus(const TranslationModel& model, const Lexicon& lexicon,
                                       const std::vector<Sentence>& corpus, std::uint64_t seed);

}  // namespace phonmt
