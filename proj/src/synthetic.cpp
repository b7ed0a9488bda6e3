// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "phonmt/error.hpp"
#include "phonmt/rng.hpp"
#include "phonmt/text.hpp"

namespace phonmt {

namespace {

constexpr std::size_t kClasses = 3;
constexpr char kClassPrefix[kClasses] = {'n', 'v', 'a'};

ParallelCorpus sample_pairs(const SyntheticTask& task, const SyntheticOptions& o, std::size_t count, Rng& rng) {
  ParallelCorpus out;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t len = o.min_len + rng.below(o.max_len - o.min_len + 1);
    Sentence src;
    Sentence tgt;
    for (std::size_t i = 0; i < len; ++i) {
      const auto& cls = task.classes[i % kClasses];
      const std::string& w = cls[rng.below(cls.size())];
      src.push_back(w);
      tgt.push_back(task.mapping.at(w));
    }
    out.source.push_back(std::move(src));
    out.target.push_back(std::move(tgt));
  }
  return out;
}

}  // namespace

void SyntheticOptions::validate() const {
  if (groups == 0) throw Error("synthetic task needs at least one homophone group");
  if (min_len == 0 || min_len > max_len) throw Error("synthetic task: need 0 < min_len <= max_len");
  if (train_pairs == 0 || test_pairs == 0) throw Error("synthetic task: pair counts must be positive");
}

SyntheticTask make_synthetic_task(const Lexicon& base, const SyntheticOptions& o) {
  o.validate();
  Rng rng(derive_seed(o.seed, 0x5E7));

  std::map<std::string, std::vector<std::string>> by_syllable;
  for (const auto& [surface, prons] : base.entries()) {
    if (utf8_chars(surface).size() != 1 || prons.size() != 1 || prons[0].size() != 1) continue;
    if (prons[0].is_unknown()) continue;
    by_syllable[base.key_of(prons[0])].push_back(surface);
  }
  std::vector<std::string> rich;
  std::vector<std::string> rest;
  for (const auto& [syl, chars] : by_syllable) (chars.size() >= kClasses ? rich : rest).push_back(syl);
  rng.shuffle(rich);
  if (rich.size() < o.groups) {
    throw Error("base lexicon has only " + std::to_string(rich.size()) + " syllables with three single-reading characters");
  }
  rest.insert(rest.end(), rich.begin() + static_cast<std::ptrdiff_t>(o.groups), rich.end());
  std::sort(rest.begin(), rest.end());
  rng.shuffle(rest);
  if (rest.size() < o.singletons) throw Error("base lexicon has too few syllables for the singleton words");

  SyntheticTask task;
  task.classes.resize(kClasses);
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
  auto add = [&](const std::string& ch, const std::string& syl, std::size_t cls) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02zu", kClassPrefix[cls], task.classes[cls].size());
    task.classes[cls].push_back(ch);
    task.mapping[ch] = buf;
    entries.push_back({ch, {syl}});
  };
  for (std::size_t g = 0; g < o.groups; ++g) {
    auto chars = by_syllable.at(rich[g]);
    rng.shuffle(chars);
    for (std::size_t c = 0; c < kClasses; ++c) add(chars[c], rich[g], c);
  }
  for (std::size_t s = 0; s < o.singletons; ++s) {
    auto chars = by_syllable.at(rest[s]);
    add(chars[rng.below(chars.size())], rest[s], s % kClasses);
  }
  task.lexicon = Lexicon::from_entries(entries);

  Rng train_rng(derive_seed(o.seed, 0x7A1));
  Rng test_rng(derive_seed(o.seed, 0x7E5));
  task.train = sample_pairs(task, o, o.train_pairs, train_rng);
  task.test = sample_pairs(task, o, o.test_pairs, test_rng);
  return task;
}

}  // namespace phonmt
