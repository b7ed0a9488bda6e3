// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Homophone groups over toneless pinyin keys, and the two noise procedures built
// on them: noisy test-set construction and training-set augmentation.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phonmt/lexicon.hpp"
#include "phonmt/rng.hpp"
#include "phonmt/text.hpp"

namespace phonmt {

class HomophoneTable {
 public:
  // Key -> surface words sharing that pronunciation, sorted lexicographically.
  using Groups = std::map<std::string, std::vector<std::string>, std::less<>>;

  // Every lexicon entry contributes one group membership per distinct
  // pronunciation. With `vocab`, only vocab words are included; vocab words that
  // are not lexicon entries are pronounced by per-character concatenation (all
  // combinations, capped at kMaxCombinations). Words pronounced only as [<unk>]
  // join no group.
  static HomophoneTable build(const Lexicon& lexicon, const std::vector<std::string>* vocab = nullptr);

  static constexpr std::size_t kMaxCombinations = 16;

  const Groups& groups() const { return groups_; }
  const std::vector<std::string>* group(std::string_view key) const;

  // Pronunciation keys of a word in lexicon order (empty when the word is not in the table).
  std::span<const std::string> keys_of(std::string_view word) const;

  // Keys of `word` whose group holds at least one other word.
  std::vector<std::string> replaceable_keys(std::string_view word) const;
  bool has_homophones(std::string_view word) const { return !replaceable_keys(word).empty(); }

  std::size_t word_count() const { return word_to_keys_.size(); }
  // Number of groups with two or more members.
  std::size_t homophone_group_count() const;

 private:
  Groups groups_;
  std::map<std::string, std::vector<std::string>, std::less<>> word_to_keys_;
};

// Fraction of vocab words that belong to some group of size >= 2. Throws on an
// empty vocab.
double homophone_ratio(const HomophoneTable& table, std::span<const std::string> vocab);

enum class NoiseMode { kTestSet, kAugmentation };

struct NoiseConfig {
  double replace_prob = 0.0;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::kTestSet;

  void validate() const;
};

struct NoisyResult {
  Sentence tokens;
  std::size_t replacements = 0;
};

// Left-to-right scan; each word with homophones is replaced with probability
// cfg.replace_prob by a uniform draw from one of its groups, excluding itself.
// When a word has several replaceable pronunciations the group is drawn first.
// Other words are never touched and the length is preserved. cfg.seed is not
// used here; the caller supplies the rng.
NoisyResult noisify_sentence(std::span<const std::string> tokens, const HomophoneTable& table,
                             const NoiseConfig& cfg, Rng& rng);

struct NoisyCorpus {
  std::vector<Sentence> sentences;
  std::size_t replacements = 0;
  std::size_t replaceable_tokens = 0;
};

// Applies noisify_sentence to every line with the generator derive_seed(seed, line).
NoisyCorpus make_noisy_testset(const std::vector<Sentence>& corpus, const HomophoneTable& table,
                               double replace_prob, std::uint64_t seed);

struct ParallelCorpus {
  std::vector<Sentence> source;
  std::vector<Sentence> target;

  std::size_t size() const { return source.size(); }
  void validate() const;
};

inline constexpr double kDefaultAugmentProb = 0.2;

// Appends round(ratio * N) noisy copies of sampled pairs after the untouched
// originals. Pairs are sampled without replacement (a fresh permutation is
// started whenever one is exhausted, so ratio > 1 cycles). Each noisy source must
// differ from its origin: up to 10 attempts per pair, then the next pair is used.
ParallelCorpus augment_corpus(const ParallelCorpus& corpus, const HomophoneTable& table, double ratio,
                              double replace_prob, std::uint64_t seed);

inline constexpr std::size_t kAugmentAttempts = 10;

}  // namespace phonmt
