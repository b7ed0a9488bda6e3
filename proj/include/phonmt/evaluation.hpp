// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Corpus BLEU with the conventions of the multi-bleu.perl script, the
// clean-versus-noisy robustness report, and cosine neighbourhoods of the
// pinyin embedding table.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phonmt/joint_embedding.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/text.hpp"
#include "phonmt/translation.hpp"

namespace phonmt {

struct BleuScore {
  double bleu = 0.0;  // percentage, 0..100
  std::array<double, 4> precisions{};
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

// Corpus-level 4-gram BLEU. `references` holds one or more reference sets, each
// line-aligned with `hypotheses`. N-gram counts are clipped by the maximum count
// over a sentence's references; the reference length is the closest one (ties go
// to the shorter); no smoothing, so any zero n-gram precision gives 0. Lines are
// whitespace-tokenized; case_insensitive lowercases ASCII.
BleuScore bleu_multi_ref(std::span<const std::string> hypotheses,
                         std::span<const std::vector<std::string>> references, bool case_insensitive = true);

std::string format_bleu(const BleuScore& score);

// One evaluation set: source sentences plus how they were made noisy.
struct EvalSet {
  std::string name;
  std::vector<Sentence> source;
  double noise_prob = 0.0;
  std::optional<std::uint64_t> noise_seed;
};

struct ReportModel {
  std::string name;
  const TranslationModel* model = nullptr;
};

struct RobustnessRow {
  std::string model;
  double beta = 0.0;
  std::vector<BleuScore> scores;  // per set
  std::vector<double> deltas;     // BLEU(first set) - BLEU(set)
};

struct RobustnessReport {
  std::vector<EvalSet> sets;  // provenance only; sources are dropped
  std::vector<RobustnessRow> rows;

  std::string to_tsv() const;
  std::string to_table() const;
};

// Decodes every set with every model (pronunciation draws seeded per line from
// decode_seed) and scores against the shared references. The first set is the
// clean one that deltas are taken against.
RobustnessReport robustness_report(std::span<const ReportModel> models, std::span<const EvalSet> sets,
                                   std::span<const std::vector<std::string>> references, const Lexicon& lexicon,
                                   std::uint64_t decode_seed, bool case_insensitive = true);

struct Neighbor {
  SyllableId id = 0;
  std::string text;
  double similarity = 0.0;
};

// Top-k syllables by cosine similarity to `query`, excluding the query itself;
// ties are broken by id. Zero rows have similarity 0.
template <typename T>
std::vector<Neighbor> nearest_syllables(const JointEmbeddingParams<T>& params, std::span<const std::string> inventory,
                                        std::string_view query, std::size_t k);

}  // namespace phonmt
