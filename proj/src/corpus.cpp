// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>

namespace phonmt {

namespace {

using Symbols = std::vector<std::string>;
using Pair = std::pair<std::string, std::string>;

Symbols char_symbols(std::string_view word) {
  Symbols out;
  for (auto c : utf8_chars(word)) out.emplace_back(c);
  return out;
}

void merge_pair(Symbols& symbols, const Pair& pair) {
  Symbols out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(symbols[i] + symbols[i + 1]);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

}  // namespace

BpeModel learn_bpe(const std::vector<Sentence>& corpus, std::size_t num_merges) {
  if (corpus.empty()) throw Error("learn_bpe: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++freq[w];
  }
  if (freq.empty()) throw Error("learn_bpe: corpus has no words");

  std::vector<std::pair<Symbols, std::size_t>> words;
  words.reserve(freq.size());
  for (const auto& [w, f] : freq) words.emplace_back(char_symbols(w), f);

  BpeModel model;
  while (model.merges.size() < num_merges) {
    std::map<Pair, std::size_t> counts;
    for (const auto& [symbols, f] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) counts[{symbols[i], symbols[i + 1]}] += f;
    }
    // std::map iterates pairs in lexicographic order, so the first maximum wins ties.
    const Pair* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best || best_count < 2) break;
    const Pair chosen = *best;
    for (auto& [symbols, f] : words) merge_pair(symbols, chosen);
    model.merges.push_back(chosen);
  }
  return model;
}

std::vector<std::string> apply_bpe(std::string_view word, const BpeModel& model) {
  Symbols symbols = char_symbols(word);
  if (model.merges.empty() || symbols.size() < 2) return symbols;

  std::map<Pair, std::size_t, std::less<>> ranks;
  for (std::size_t r = 0; r < model.merges.size(); ++r) ranks.emplace(model.merges[r], r);

  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = ranks.find(Pair{symbols[i], symbols[i + 1]});
      if (it != ranks.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    merge_pair(symbols, model.merges[best_rank]);
  }
  return symbols;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines;
  lines.reserve(merges.size());
  for (const auto& [l, r] : merges) lines.push_back(l + " " + r);
  write_lines(path, lines);
}

BpeModel BpeModel::parse_lines(const std::vector<std::string>& lines, const std::string& source_name) {
  BpeModel model;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_whitespace(lines[i]);
    if (fields.size() != 2) throw ParseError(source_name, i + 1, "expected 'left right'");
    model.merges.emplace_back(std::move(fields[0]), std::move(fields[1]));
  }
  return model;
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  return parse_lines(read_lines(path), path.string());
}

std::vector<std::string> Segmenter::subwords(std::string_view word) const {
  switch (mode) {
    case Mode::kWord:
      return {std::string(word)};
    case Mode::kChar:
      return char_symbols(word);
    case Mode::kBpe:
      if (!bpe) throw Error("BPE segmentation without a BPE model");
      return apply_bpe(word, *bpe);
  }
  return {std::string(word)};
}

std::vector<std::string> Segmenter::segment(std::span<const std::string> words) const {
  std::vector<std::string> out;
  for (const auto& w : words) {
    auto pieces = subwords(w);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (i + 1 < pieces.size()) pieces[i] += kContinuationMarker;
      out.push_back(std::move(pieces[i]));
    }
  }
  return out;
}

std::string strip_continuation_marker(std::string_view subword) {
  if (subword.size() > kContinuationMarker.size() && subword.ends_with(kContinuationMarker)) {
    subword.remove_suffix(kContinuationMarker.size());
  }
  return std::string(subword);
}

std::vector<std::string> merge_subwords(std::span<const std::string> subwords) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  for (const auto& piece : subwords) {
    const bool continues = piece.size() > kContinuationMarker.size() && piece.ends_with(kContinuationMarker);
    current += continues ? strip_continuation_marker(piece) : piece;
    open = continues;
    if (!continues) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (open) words.push_back(std::move(current));
  return words;
}

PronunciationSeq subword_pronunciation(std::string_view subword, const Lexicon& lexicon, Rng& rng) {
  return pronounce(strip_continuation_marker(subword), lexicon, rng);
}

Vocab Vocab::build(const std::vector<Sentence>& corpus, std::size_t max_size) {
  if (max_size < kMinSize) throw Error("vocabulary max size must be at least " + std::to_string(kMinSize));
  std::map<std::string, std::size_t> freq;
  for (const auto& s : corpus) {
    for (const auto& t : s) ++freq[t];
  }
  if (freq.empty()) throw Error("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (const auto& [tok, f] : ranked) {
    if (tokens.size() >= max_size) break;
    if (tok == "<pad>" || tok == "<bos>" || tok == "<eos>" || tok == "<unk>") continue;
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  static const char* kReserved[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
  if (tokens.size() < kReservedCount) throw Error("vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (tokens[i] != kReserved[i]) throw Error("vocabulary reserved token " + std::to_string(i) + " must be " + kReserved[i]);
  }
  Vocab v;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw Error("vocabulary contains an empty token");
    if (!v.ids_.emplace(tokens[i], static_cast<TokenId>(i)).second) {
      throw Error("duplicate vocabulary token '" + tokens[i] + "'");
    }
  }
  v.tokens_ = std::move(tokens);
  return v;
}

TokenId Vocab::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

void Vocab::save(const std::filesystem::path& path) const { write_lines(path, tokens_); }

Vocab Vocab::load(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return from_tokens(std::move(lines));
}

EncodedSentence encode_sentence(std::span<const std::string> words, const Segmenter& segmenter,
                                const Vocab& vocab, const Lexicon* lexicon, Rng& rng, Side side,
                                std::size_t max_len) {
  const auto pieces = segmenter.segment(words);
  if (pieces.size() > max_len) throw SentenceTooLong(pieces.size(), max_len);
  if (side == Side::kSource && !lexicon) throw Error("source-side encoding needs a lexicon");

  EncodedSentence out;
  if (side == Side::kTarget) out.token_ids.push_back(Vocab::kBos);
  for (const auto& piece : pieces) {
    out.token_ids.push_back(vocab.id_of(piece));
    if (side == Side::kSource) out.pron_seqs.push_back(subword_pronunciation(piece, *lexicon, rng));
  }
  if (side == Side::kTarget) out.token_ids.push_back(Vocab::kEos);
  return out;
}

std::vector<std::string> decode_ids(std::span<const TokenId> ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (auto id : ids) {
    if (id == Vocab::kEos) break;
    if (id == Vocab::kBos || id == Vocab::kPad) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace phonmt
