// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace phonmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::vector<std::string> tokenize(const std::string& line, bool lower) {
  return split_whitespace(lower ? ascii_lower(line) : line);
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

BleuScore bleu_multi_ref(std::span<const std::string> hypotheses,
                         std::span<const std::vector<std::string>> references, bool case_insensitive) {
  if (hypotheses.empty()) throw Error("BLEU: empty hypothesis corpus");
  if (references.empty()) throw Error("BLEU: no reference sets");
  for (const auto& refs : references) {
    if (refs.size() != hypotheses.size()) {
      throw Error("BLEU: reference set has " + std::to_string(refs.size()) + " lines, hypotheses have " +
                  std::to_string(hypotheses.size()));
    }
  }

  BleuScore score;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto hyp = tokenize(hypotheses[s], case_insensitive);
    std::vector<std::vector<std::string>> refs;
    for (const auto& set : references) refs.push_back(tokenize(set[s], case_insensitive));

    score.hyp_length += hyp.size();
    std::size_t closest_len = 0;
    std::size_t closest_diff = std::numeric_limits<std::size_t>::max();
    for (const auto& r : refs) {
      const std::size_t diff = r.size() > hyp.size() ? r.size() - hyp.size() : hyp.size() - r.size();
      if (diff < closest_diff || (diff == closest_diff && r.size() < closest_len)) {
        closest_diff = diff;
        closest_len = r.size();
      }
    }
    score.ref_length += closest_len;

    for (std::size_t n = 1; n <= 4; ++n) {
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [gram, c] : count_ngrams(r, n)) max_ref[gram] = std::max(max_ref[gram], c);
      }
      for (const auto& [gram, c] : count_ngrams(hyp, n)) {
        score.totals[n - 1] += c;
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) score.matches[n - 1] += std::min(c, it->second);
      }
    }
  }

  bool any_zero = false;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    score.precisions[n] =
        score.totals[n] ? static_cast<double>(score.matches[n]) / static_cast<double>(score.totals[n]) : 0.0;
    if (score.matches[n] == 0) {
      any_zero = true;
    } else {
      log_sum += std::log(score.precisions[n]);
    }
  }
  if (score.hyp_length == 0) {
    score.brevity_penalty = 0.0;
  } else if (score.hyp_length < score.ref_length) {
    score.brevity_penalty =
        std::exp(1.0 - static_cast<double>(score.ref_length) / static_cast<double>(score.hyp_length));
  } else {
    score.brevity_penalty = 1.0;
  }
  score.bleu = any_zero ? 0.0 : 100.0 * score.brevity_penalty * std::exp(log_sum / 4.0);
  return score;
}

std::string format_bleu(const BleuScore& s) {
  std::ostringstream os;
  os << "BLEU = " << fmt(s.bleu) << ", " << fmt(100 * s.precisions[0], 1) << "/" << fmt(100 * s.precisions[1], 1)
     << "/" << fmt(100 * s.precisions[2], 1) << "/" << fmt(100 * s.precisions[3], 1)
     << " (BP=" << fmt(s.brevity_penalty, 3) << ", ratio="
     << fmt(s.ref_length ? static_cast<double>(s.hyp_length) / static_cast<double>(s.ref_length) : 0.0, 3)
     << ", hyp_len=" << s.hyp_length << ", ref_len=" << s.ref_length << ")";
  return os.str();
}

RobustnessReport robustness_report(std::span<const ReportModel> models, std::span<const EvalSet> sets,
                                   std::span<const std::vector<std::string>> references, const Lexicon& lexicon,
                                   std::uint64_t decode_seed, bool case_insensitive) {
  if (sets.empty()) throw Error("robustness report needs at least one evaluation set");
  RobustnessReport report;
  for (const auto& set : sets) {
    for (const auto& refs : references) {
      if (refs.size() != set.source.size()) throw Error("evaluation set '" + set.name + "' is not aligned with references");
    }
    report.sets.push_back(EvalSet{set.name, {}, set.noise_prob, set.noise_seed});
  }
  for (const auto& m : models) {
    if (!m.model) throw Error("robustness report: null model '" + m.name + "'");
    RobustnessRow row{m.name, m.model->config().beta, {}, {}};
    for (const auto& set : sets) {
      const auto hyps = translate_corpus(*m.model, lexicon, set.source, decode_seed);
      std::vector<std::string> lines;
      lines.reserve(hyps.size());
      for (const auto& h : hyps) lines.push_back(join(h));
      row.scores.push_back(bleu_multi_ref(lines, references, case_insensitive));
    }
    for (const auto& s : row.scores) row.deltas.push_back(row.scores.front().bleu - s.bleu);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string RobustnessReport::to_tsv() const {
  std::ostringstream os;
  os << "model\tbeta\tset\tnoise_prob\tnoise_seed\tbleu\tdelta_vs_clean\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      os << row.model << '\t' << fmt(row.beta, 2) << '\t' << sets[i].name << '\t' << fmt(sets[i].noise_prob, 2)
         << '\t' << (sets[i].noise_seed ? std::to_string(*sets[i].noise_seed) : "-") << '\t'
         << fmt(row.scores[i].bleu) << '\t' << fmt(row.deltas[i]) << '\n';
    }
  }
  return os.str();
}

std::string RobustnessReport::to_table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %6s", "model", "beta");
  os << buf;
  for (const auto& s : sets) {
    std::snprintf(buf, sizeof buf, " %14s", s.name.c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-20s %6.2f", row.model.c_str(), row.beta);
    os << buf;
    for (std::size_t i = 0; i < row.scores.size(); ++i) {
      if (i == 0) {
        std::snprintf(buf, sizeof buf, " %14.2f", row.scores[i].bleu);
      } else {
        std::snprintf(buf, sizeof buf, " %6.2f (%+6.2f)", row.scores[i].bleu, -row.deltas[i]);
      }
      os << buf;
    }
    os << '\n';
  }
  for (const auto& s : sets) {
    if (s.noise_seed) os << s.name << ": noise prob " << fmt(s.noise_prob, 2) << ", seed " << *s.noise_seed << '\n';
  }
  return os.str();
}

template <typename T>
std::vector<Neighbor> nearest_syllables(const JointEmbeddingParams<T>& params, std::span<const std::string> inventory,
                                        std::string_view query, std::size_t k) {
  const std::size_t p = params.syllable_count();
  if (inventory.size() != p) throw Error("syllable inventory does not match the pinyin table");
  auto it = std::find(inventory.begin(), inventory.end(), query);
  if (it == inventory.end()) throw Error("unknown syllable '" + std::string(query) + "'");
  if (k >= p) throw Error("k must be smaller than the inventory size " + std::to_string(p));
  const std::size_t q = static_cast<std::size_t>(it - inventory.begin());

  auto norm = [&](std::size_t r) {
    double s = 0.0;
    for (T v : params.pinyin_table.row(r)) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
  };
  const double qn = norm(q);
  auto qr = params.pinyin_table.row(q);
  std::vector<Neighbor> all;
  for (std::size_t r = 0; r < p; ++r) {
    if (r == q) continue;
    const double rn = norm(r);
    double dot = 0.0;
    auto rr = params.pinyin_table.row(r);
    for (std::size_t j = 0; j < rr.size(); ++j) dot += static_cast<double>(qr[j]) * static_cast<double>(rr[j]);
    const double sim = (qn > 0.0 && rn > 0.0) ? dot / (qn * rn) : 0.0;
    all.push_back(Neighbor{static_cast<SyllableId>(r), inventory[r], sim});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  all.resize(std::min(k, all.size()));
  return all;
}

template std::vector<Neighbor> nearest_syllables(const JointEmbeddingParams<float>&, std::span<const std::string>,
                                                 std::string_view, std::size_t);
template std::vector<Neighbor> nearest_syllables(const JointEmbeddingParams<double>&, std::span<const std::string>,
                                                 std::string_view, std::size_t);

}  // namespace phonmt
