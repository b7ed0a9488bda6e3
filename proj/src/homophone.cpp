// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/homophone.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "phonmt/error.hpp"

namespace phonmt {

namespace {

// All per-character concatenations of a non-entry word, capped.
std::vector<PronunciationSeq> concatenated_pronunciations(std::string_view word, const Lexicon& lexicon,
                                                          std::size_t cap) {
  std::vector<PronunciationSeq> partial{PronunciationSeq{}};
  for (auto c : utf8_chars(word)) {
    const auto* prons = lexicon.find(c);
    if (!prons) return {};
    std::vector<PronunciationSeq> next;
    for (const auto& prefix : partial) {
      for (const auto& p : *prons) {
        if (next.size() == cap) break;
        PronunciationSeq s = prefix;
        s.syllables.insert(s.syllables.end(), p.syllables.begin(), p.syllables.end());
        next.push_back(std::move(s));
      }
    }
    partial = std::move(next);
  }
  if (partial.size() == 1 && partial.front().syllables.empty()) return {};
  return partial;
}

}  // namespace

HomophoneTable HomophoneTable::build(const Lexicon& lexicon, const std::vector<std::string>* vocab) {
  HomophoneTable table;
  auto add = [&table, &lexicon](const std::string& word, const std::vector<PronunciationSeq>& prons) {
    std::vector<std::string> keys;
    for (const auto& p : prons) {
      if (p.is_unknown()) continue;
      std::string key = lexicon.key_of(p);
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
      keys.push_back(key);
      table.groups_[key].push_back(word);
    }
    if (!keys.empty()) table.word_to_keys_[word] = std::move(keys);
  };

  if (vocab) {
    std::set<std::string> unique(vocab->begin(), vocab->end());
    for (const auto& word : unique) {
      if (const auto* prons = lexicon.find(word)) {
        add(word, *prons);
      } else {
        add(word, concatenated_pronunciations(word, lexicon, kMaxCombinations));
      }
    }
  } else {
    for (const auto& [word, prons] : lexicon.entries()) add(word, prons);
  }

  for (auto& [key, words] : table.groups_) std::sort(words.begin(), words.end());
  return table;
}

const std::vector<std::string>* HomophoneTable::group(std::string_view key) const {
  auto it = groups_.find(key);
  return it == groups_.end() ? nullptr : &it->second;
}

std::span<const std::string> HomophoneTable::keys_of(std::string_view word) const {
  auto it = word_to_keys_.find(word);
  if (it == word_to_keys_.end()) return {};
  return it->second;
}

std::vector<std::string> HomophoneTable::replaceable_keys(std::string_view word) const {
  std::vector<std::string> out;
  for (const auto& key : keys_of(word)) {
    if (group(key)->size() >= 2) out.push_back(key);
  }
  return out;
}

std::size_t HomophoneTable::homophone_group_count() const {
  return static_cast<std::size_t>(
      std::count_if(groups_.begin(), groups_.end(), [](const auto& g) { return g.second.size() >= 2; }));
}

double homophone_ratio(const HomophoneTable& table, std::span<const std::string> vocab) {
  if (vocab.empty()) throw Error("homophone_ratio: empty vocabulary");
  std::size_t with = 0;
  for (const auto& w : vocab) {
    if (table.has_homophones(w)) ++with;
  }
  return static_cast<double>(with) / static_cast<double>(vocab.size());
}

void NoiseConfig::validate() const {
  if (!(replace_prob >= 0.0 && replace_prob <= 1.0)) {
    throw Error("replacement probability must lie in [0, 1]");
  }
}

NoisyResult noisify_sentence(std::span<const std::string> tokens, const HomophoneTable& table,
                             const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  NoisyResult result;
  result.tokens.assign(tokens.begin(), tokens.end());
  for (auto& token : result.tokens) {
    const auto keys = table.replaceable_keys(token);
    if (keys.empty()) continue;
    if (!rng.bernoulli(cfg.replace_prob)) continue;
    const std::string& key = keys.size() == 1 ? keys.front() : keys[rng.below(keys.size())];
    const auto& members = *table.group(key);
    std::vector<const std::string*> others;
    others.reserve(members.size());
    for (const auto& m : members) {
      if (m != token) others.push_back(&m);
    }
    token = *others[others.size() == 1 ? 0 : rng.below(others.size())];
    ++result.replacements;
  }
  return result;
}

NoisyCorpus make_noisy_testset(const std::vector<Sentence>& corpus, const HomophoneTable& table,
                               double replace_prob, std::uint64_t seed) {
  NoiseConfig cfg{replace_prob, seed, NoiseMode::kTestSet};
  cfg.validate();
  NoisyCorpus out;
  out.sentences.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    auto noisy = noisify_sentence(corpus[i], table, cfg, rng);
    for (const auto& t : corpus[i]) {
      if (table.has_homophones(t)) ++out.replaceable_tokens;
    }
    out.replacements += noisy.replacements;
    out.sentences.push_back(std::move(noisy.tokens));
  }
  return out;
}

void ParallelCorpus::validate() const {
  if (source.size() != target.size()) {
    throw Error("parallel corpus is not line-aligned: " + std::to_string(source.size()) + " source vs " +
                std::to_string(target.size()) + " target lines");
  }
}

ParallelCorpus augment_corpus(const ParallelCorpus& corpus, const HomophoneTable& table, double ratio,
                              double replace_prob, std::uint64_t seed) {
  corpus.validate();
  if (!(ratio >= 0.0)) throw Error("augmentation ratio must be non-negative");
  if (corpus.size() == 0) throw Error("cannot augment an empty corpus");
  NoiseConfig cfg{replace_prob, seed, NoiseMode::kAugmentation};
  cfg.validate();

  const std::size_t n = corpus.size();
  const auto wanted = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  ParallelCorpus out = corpus;
  if (wanted == 0) return out;

  if (table.homophone_group_count() == 0) throw Error("homophone table has no group with two or more words");
  if (replace_prob <= 0.0) throw Error("augmentation needs a positive replacement probability");

  std::vector<bool> noisable(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    noisable[i] = std::any_of(corpus.source[i].begin(), corpus.source[i].end(),
                              [&table](const std::string& t) { return table.has_homophones(t); });
    any = any || noisable[i];
  }
  if (!any) throw Error("no source sentence contains a word with homophones");

  Rng rng(derive_seed(seed, 0xA06D));
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;
  auto next_index = [&]() {
    if (cursor == n) {
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      rng.shuffle(order);
      cursor = 0;
    }
    return order[cursor++];
  };

  std::size_t added = 0;
  std::size_t failures_in_a_row = 0;
  while (added < wanted) {
    const std::size_t idx = next_index();
    bool done = false;
    if (noisable[idx]) {
      for (std::size_t attempt = 0; attempt < kAugmentAttempts && !done; ++attempt) {
        auto noisy = noisify_sentence(corpus.source[idx], table, cfg, rng);
        if (noisy.replacements > 0) {
          out.source.push_back(std::move(noisy.tokens));
          out.target.push_back(corpus.target[idx]);
          done = true;
        }
      }
    }
    if (done) {
      ++added;
      failures_in_a_row = 0;
    } else if (++failures_in_a_row > 4 * n) {
      throw Error("augmentation could not produce noisy pairs; replacement probability too small");
    }
  }
  return out;
}

}  // namespace phonmt
