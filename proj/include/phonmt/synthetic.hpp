// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// A small generated translation task with controlled homophony, used for
// desk-scale training runs.
//
// Source words are single characters drawn from a base lexicon. They fall into
// three classes, and the word at position i of a sentence always comes from
// class i mod 3. Homophone groups hold one member per class, so a
// homophone-corrupted word can be recovered from its syllable and position.
// Each source word maps to a fixed target token.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phonmt/homophone.hpp"
#include "phonmt/lexicon.hpp"

namespace phonmt {

struct SyntheticOptions {
  std::size_t groups = 24;      // homophone groups of three characters
  std::size_t singletons = 12;  // characters with a syllable of their own
  std::size_t train_pairs = 600;
  std::size_t test_pairs = 100;
  std::size_t min_len = 3;
  std::size_t max_len = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticTask {
  Lexicon lexicon;  // entries for the chosen characters only
  ParallelCorpus train;
  ParallelCorpus test;
  std::map<std::string, std::string> mapping;       // source char -> target token
  std::vector<std::vector<std::string>> classes;    // three position classes
};

// Picks characters with a single one-syllable reading from `base`. Throws Error
// when the base lexicon has too few usable syllables.
SyntheticTask make_synthetic_task(const Lexicon& base, const SyntheticOptions& options);

}  // namespace phonmt
