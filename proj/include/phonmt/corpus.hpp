// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Subword segmentation (byte-pair encoding), vocabularies and numericalization
// of sentences, including the per-subword pronunciation attached on the source
// side.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phonmt/error.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/rng.hpp"
#include "phonmt/text.hpp"

namespace phonmt {

// Suffix marking a non-final subword in text output.
inline constexpr std::string_view kContinuationMarker = "@@";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;  // priority order

  std::size_t num_merges() const { return merges.size(); }

  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);
  static BpeModel parse_lines(const std::vector<std::string>& lines, const std::string& source_name);
};

// Greedy BPE over the word frequency dictionary of `corpus`. Each round merges the
// most frequent adjacent symbol pair (ties go to the lexicographically smallest
// pair); learning stops after `num_merges` rounds or when no pair occurs twice.
BpeModel learn_bpe(const std::vector<Sentence>& corpus, std::size_t num_merges);

// Splits into characters and applies merges by priority until no merge applies.
// Output subwords carry no markers and concatenate back to `word`.
std::vector<std::string> apply_bpe(std::string_view word, const BpeModel& model);

// How words are cut into model tokens: kept whole, split into characters, or
// split by a BPE model.
struct Segmenter {
  enum class Mode { kWord, kChar, kBpe };

  Mode mode = Mode::kWord;
  const BpeModel* bpe = nullptr;

  static Segmenter word() { return {Mode::kWord, nullptr}; }
  static Segmenter chars() { return {Mode::kChar, nullptr}; }
  static Segmenter bpe_model(const BpeModel& model) { return {Mode::kBpe, &model}; }

  std::vector<std::string> subwords(std::string_view word) const;
  // Subwords of every word, "@@" appended to all but the last piece of each word.
  std::vector<std::string> segment(std::span<const std::string> words) const;
};

std::string strip_continuation_marker(std::string_view subword);

// Inverse of Segmenter::segment: joins marked pieces back into words.
std::vector<std::string> merge_subwords(std::span<const std::string> subwords);

// Pronunciation of a (possibly marked) subword; same rules as pronounce().
PronunciationSeq subword_pronunciation(std::string_view subword, const Lexicon& lexicon, Rng& rng);

using TokenId = std::uint32_t;

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReservedCount = 4;
  static constexpr std::size_t kMinSize = 5;

  // Reserved tokens, then tokens by descending frequency (ties lexicographic),
  // truncated to max_size.
  static Vocab build(const std::vector<Sentence>& corpus, std::size_t max_size);
  // Validates that the reserved tokens come first and tokens are unique.
  static Vocab from_tokens(std::vector<std::string> tokens);

  TokenId id_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

enum class Side { kSource, kTarget };

struct EncodedSentence {
  std::vector<TokenId> token_ids;
  std::vector<PronunciationSeq> pron_seqs;  // source side only, parallel to token_ids

  std::size_t size() const { return token_ids.size(); }
};

inline constexpr std::size_t kDefaultMaxLen = 256;

class SentenceTooLong : public Error {
 public:
  SentenceTooLong(std::size_t length, std::size_t max_len)
      : Error("sentence of " + std::to_string(length) + " subwords exceeds max length " + std::to_string(max_len)),
        length_(length) {}
  std::size_t length() const { return length_; }

 private:
  std::size_t length_;
};

// Segments, numericalizes and (source side) pronounces a sentence. The length
// limit applies to the subword count; target sentences are wrapped in <bos> ... <eos>.
EncodedSentence encode_sentence(std::span<const std::string> words, const Segmenter& segmenter,
                                const Vocab& vocab, const Lexicon* lexicon, Rng& rng, Side side,
                                std::size_t max_len = kDefaultMaxLen);

// Tokens for ids, stopping at <eos> and skipping <bos>/<pad>.
std::vector<std::string> decode_ids(std::span<const TokenId> ids, const Vocab& vocab);

}  // namespace phonmt
