// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "phonmt/error.hpp"
#include "phonmt/text.hpp"

namespace phonmt {

namespace {

// Decodes one UTF-8 code point starting at s[i]; advances i.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> char32_t {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) & 0x3F : 0;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 >> 5) == 0x6 && i + 1 < s.size()) {
    char32_t cp = ((b0 & 0x1F) << 6) | cont(1);
    i += 2;
    return cp;
  }
  if ((b0 >> 4) == 0xE && i + 2 < s.size()) {
    char32_t cp = ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
    i += 3;
    return cp;
  }
  if ((b0 >> 3) == 0x1E && i + 3 < s.size()) {
    char32_t cp = ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
    i += 4;
    return cp;
  }
  i += 1;
  return 0xFFFD;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Base letter of a tone-marked pinyin vowel, or 0.
char toneless_base(char32_t cp) {
  switch (cp) {
    case U'ā': case U'á': case U'ǎ': case U'à': case U'Ā': case U'Á': case U'Ǎ': case U'À':
      return 'a';
    case U'ē': case U'é': case U'ě': case U'è': case U'Ē': case U'É': case U'Ě': case U'È':
    case U'ê': case U'Ê':
      return 'e';
    case U'ī': case U'í': case U'ǐ': case U'ì': case U'Ī': case U'Í': case U'Ǐ': case U'Ì':
      return 'i';
    case U'ō': case U'ó': case U'ǒ': case U'ò': case U'Ō': case U'Ó': case U'Ǒ': case U'Ò':
      return 'o';
    case U'ū': case U'ú': case U'ǔ': case U'ù': case U'Ū': case U'Ú': case U'Ǔ': case U'Ù':
      return 'u';
    case U'ü': case U'ǖ': case U'ǘ': case U'ǚ': case U'ǜ':
    case U'Ü': case U'Ǖ': case U'Ǘ': case U'Ǚ': case U'Ǜ':
      return 'v';
    case U'ń': case U'ň': case U'ǹ': case U'Ń': case U'Ň': case U'Ǹ':
      return 'n';
    case U'ḿ': case U'Ḿ':
      return 'm';
    default:
      return 0;
  }
}

bool is_tone_combining_mark(char32_t cp) {
  return cp == 0x0300 || cp == 0x0301 || cp == 0x0304 || cp == 0x030C;
}

bool valid_syllable(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace

std::string strip_tone(std::string_view raw) {
  std::string mapped;
  mapped.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t cp = decode_utf8(raw, i);
    if (cp >= 'A' && cp <= 'Z') {
      mapped += static_cast<char>(cp - 'A' + 'a');
    } else if (char base = toneless_base(cp)) {
      mapped += base;
    } else if (is_tone_combining_mark(cp)) {
      // dropped
    } else if (cp == 0x0308 && !mapped.empty() && mapped.back() == 'u') {
      mapped.back() = 'v';
    } else {
      append_utf8(mapped, cp);
    }
  }

  std::string out;
  out.reserve(mapped.size());
  for (std::size_t k = 0; k < mapped.size(); ++k) {
    if (mapped[k] == 'u' && k + 1 < mapped.size() && mapped[k + 1] == ':') {
      out += 'v';
      ++k;
    } else {
      out += mapped[k];
    }
  }
  while (!out.empty() && out.back() >= '1' && out.back() <= '5') out.pop_back();
  return out;
}

Lexicon::Lexicon() {
  syllables_.emplace_back(kUnkSyllableText);
  syllable_ids_.emplace(std::string(kUnkSyllableText), kUnkSyllable);
}

Lexicon Lexicon::from_entries(const std::vector<std::pair<std::string, std::vector<std::string>>>& raw) {
  Lexicon lex;
  std::vector<std::pair<std::string, std::vector<std::string>>> stripped;
  stripped.reserve(raw.size());
  std::set<std::string> observed;
  for (const auto& [surface, syls] : raw) {
    if (surface.empty()) throw Error("lexicon entry with empty surface form");
    if (syls.empty()) throw Error("lexicon entry '" + surface + "' has no pronunciation");
    std::vector<std::string> toneless;
    for (const auto& s : syls) {
      std::string t = strip_tone(s);
      if (!valid_syllable(t)) throw Error("invalid syllable '" + s + "' for '" + surface + "'");
      observed.insert(t);
      toneless.push_back(std::move(t));
    }
    stripped.emplace_back(surface, std::move(toneless));
  }

  for (const auto& s : observed) {
    lex.syllable_ids_.emplace(s, static_cast<SyllableId>(lex.syllables_.size()));
    lex.syllables_.push_back(s);
  }

  for (const auto& [surface, syls] : stripped) {
    PronunciationSeq seq;
    seq.syllables.reserve(syls.size());
    for (const auto& s : syls) seq.syllables.push_back(lex.syllable_ids_.at(s));
    auto& prons = lex.entries_[surface];
    if (std::find(prons.begin(), prons.end(), seq) == prons.end()) prons.push_back(std::move(seq));
  }
  return lex;
}

Lexicon Lexicon::parse(std::istream& in, const std::string& source_name) {
  std::vector<std::pair<std::string, std::vector<std::string>>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source_name, line_no, "expected 'surface<TAB>syllables'");
    }
    std::string surface = line.substr(0, tab);
    auto syls = split_whitespace(std::string_view(line).substr(tab + 1));
    if (surface.empty()) throw ParseError(source_name, line_no, "empty surface form");
    if (syls.empty()) throw ParseError(source_name, line_no, "empty pronunciation");
    for (const auto& s : syls) {
      if (!valid_syllable(strip_tone(s))) {
        throw ParseError(source_name, line_no, "invalid syllable '" + s + "'");
      }
    }
    raw.emplace_back(std::move(surface), std::move(syls));
  }
  if (raw.empty()) throw ParseError(source_name, 0, "lexicon has no entries");
  return from_entries(raw);
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return parse(in, path.string());
}

void Lexicon::write(std::ostream& out) const {
  for (const auto& [surface, prons] : entries_) {
    for (const auto& p : prons) out << surface << '\t' << join(texts_of(p)) << '\n';
  }
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write lexicon " + path.string());
  write(out);
  if (!out) throw Error("error writing lexicon " + path.string());
}

const std::vector<PronunciationSeq>* Lexicon::find(std::string_view surface) const {
  auto it = entries_.find(surface);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<Syllable> Lexicon::syllable_inventory() const {
  std::vector<Syllable> out;
  out.reserve(syllables_.size());
  for (std::size_t i = 0; i < syllables_.size(); ++i) {
    out.push_back(Syllable{static_cast<SyllableId>(i), syllables_[i]});
  }
  return out;
}

std::optional<SyllableId> Lexicon::syllable_id(std::string_view text) const {
  auto it = syllable_ids_.find(std::string(text));
  if (it == syllable_ids_.end()) return std::nullopt;
  return it->second;
}

std::string Lexicon::key_of(const PronunciationSeq& seq) const {
  std::string key;
  for (std::size_t i = 0; i < seq.syllables.size(); ++i) {
    if (i) key += '|';
    key += syllables_.at(seq.syllables[i]);
  }
  return key;
}

std::vector<std::string> Lexicon::texts_of(const PronunciationSeq& seq) const {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (auto id : seq.syllables) out.push_back(syllables_.at(id));
  return out;
}

PronunciationSeq pronounce(std::string_view token, const Lexicon& lexicon, Rng& rng) {
  auto pick = [&rng](const std::vector<PronunciationSeq>& options) -> const PronunciationSeq& {
    return options.size() == 1 ? options.front() : options[rng.below(options.size())];
  };

  if (token.empty()) return PronunciationSeq::unknown();
  if (const auto* prons = lexicon.find(token)) return pick(*prons);

  const auto chars = utf8_chars(token);
  std::vector<const std::vector<PronunciationSeq>*> per_char;
  per_char.reserve(chars.size());
  for (auto c : chars) {
    const auto* prons = lexicon.find(c);
    if (!prons) return PronunciationSeq::unknown();
    per_char.push_back(prons);
  }
  PronunciationSeq out;
  for (const auto* prons : per_char) {
    const auto& chosen = pick(*prons);
    out.syllables.insert(out.syllables.end(), chosen.syllables.begin(), chosen.syllables.end());
  }
  return out;
}

}  // namespace phonmt
