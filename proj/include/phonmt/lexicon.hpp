// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Pronunciation lexicon and the pronunciation-assignment rules used for every
// source token: whole-token lookup, then per-character concatenation, then the
// reserved <unk> unit.

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phonmt/rng.hpp"

namespace phonmt {

using SyllableId = std::uint32_t;

inline constexpr SyllableId kUnkSyllable = 0;
inline constexpr std::string_view kUnkSyllableText = "<unk>";

struct Syllable {
  SyllableId id = kUnkSyllable;
  std::string text;

  bool operator==(const Syllable&) const = default;
};

// Ordered pronunciation units of one token. Never empty; [<unk>] when no
// pronunciation is known.
struct PronunciationSeq {
  std::vector<SyllableId> syllables;

  std::size_t size() const { return syllables.size(); }
  bool is_unknown() const { return syllables.size() == 1 && syllables[0] == kUnkSyllable; }

  static PronunciationSeq unknown() { return PronunciationSeq{{kUnkSyllable}}; }

  bool operator==(const PronunciationSeq&) const = default;
  auto operator<=>(const PronunciationSeq&) const = default;
};

// Removes tone information from one pinyin syllable: tone-marked vowels become
// their base vowel (u-umlaut becomes "v"), "u:" becomes "v", trailing tone
// digits 1-5 are dropped and ASCII letters are lowercased. Idempotent.
std::string strip_tone(std::string_view raw);

class Lexicon {
 public:
  using Entries = std::map<std::string, std::vector<PronunciationSeq>, std::less<>>;

  // Empty lexicon; the inventory holds only <unk>.
  Lexicon();

  // Builds a lexicon from (surface, raw syllables) pairs in file order. Tones are
  // stripped, duplicate pronunciations of a word are dropped (first occurrence
  // wins) and the syllable inventory is <unk> followed by all observed syllables
  // in lexicographic order. Throws Error on an invalid syllable.
  static Lexicon from_entries(const std::vector<std::pair<std::string, std::vector<std::string>>>& raw);

  // Parses `surface<TAB>syl1 syl2 ...` lines; `#` starts a comment line.
  static Lexicon parse(std::istream& in, const std::string& source_name = "<stream>");
  static Lexicon load(const std::filesystem::path& path);

  // Writes every (surface, pronunciation) pair as a toneless line, entries in
  // surface order; parsing the output reproduces the lexicon.
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  const std::vector<PronunciationSeq>* find(std::string_view surface) const;
  bool contains(std::string_view surface) const { return find(surface) != nullptr; }

  const Entries& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<Syllable> syllable_inventory() const;
  const std::vector<std::string>& syllable_texts() const { return syllables_; }
  std::size_t syllable_count() const { return syllables_.size(); }
  const std::string& syllable_text(SyllableId id) const { return syllables_.at(id); }
  std::optional<SyllableId> syllable_id(std::string_view text) const;

  // Canonical key of a pronunciation: syllable texts joined by "|".
  std::string key_of(const PronunciationSeq& seq) const;
  std::vector<std::string> texts_of(const PronunciationSeq& seq) const;

 private:
  Entries entries_;
  std::vector<std::string> syllables_;
  std::unordered_map<std::string, SyllableId> syllable_ids_;
};

// Pronunciation of an arbitrary token. Rule order:
//   1. token is a lexicon entry: one of its pronunciations, uniform via rng when ambiguous;
//   2. every character is an entry: concatenation of per-character pronunciations;
//   3. otherwise [<unk>].
// The rng is only consumed where a choice exists.
PronunciationSeq pronounce(std::string_view token, const Lexicon& lexicon, Rng& rng);

inline std::vector<Syllable> syllable_inventory(const Lexicon& lexicon) { return lexicon.syllable_inventory(); }

}  // namespace phonmt
