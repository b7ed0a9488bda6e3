// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// phonmt command-line entry point. Every artifact-producing command writes
// `<artifact>.manifest.json` next to its output.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phonmt/checkpoint.hpp"
#include "phonmt/corpus.hpp"
#include "phonmt/error.hpp"
#include "phonmt/evaluation.hpp"
#include "phonmt/gradcheck.hpp"
#include "phonmt/homophone.hpp"
#include "phonmt/lexicon.hpp"
#include "phonmt/model.hpp"
#include "phonmt/synthetic.hpp"
#include "phonmt/text.hpp"
#include "phonmt/translation.hpp"
#include "phonmt/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace phonmt {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr const char* kDataDirEnv = "PHONMT_DATA_DIR";

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

// Relative inputs that do not exist are looked up under $PHONMT_DATA_DIR.
fs::path resolve_input(const std::string& given) {
  fs::path p(given);
  if (fs::exists(p) || p.is_absolute()) return p;
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) {
    fs::path alt = fs::path(dir) / p;
    if (fs::exists(alt)) return alt;
  }
  return p;
}

class Manifest {
 public:
  Manifest(std::string command, const CLI::App& sub) : command_(std::move(command)) {
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name.empty()) continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        flags_[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else {
        flags_[name] = opt->get_default_str();
      }
    }
  }

  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void stat(const std::string& name, json value) { stats_[name] = std::move(value); }

  fs::path input(const std::string& given) {
    const fs::path p = resolve_input(given);
    inputs_.push_back({{"path", given}, {"sha256", sha256_file(p)}});
    return p;
  }

  void output(const fs::path& p) { outputs_.push_back(p); }

  // Writes `<primary>.manifest.json` (or `manifest_path` when given).
  void write(const fs::path& primary, std::optional<fs::path> manifest_path = std::nullopt) const {
    json out_list = json::array();
    for (const auto& p : outputs_) out_list.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    json m;
    m["tool"] = "phonmt";
    m["version"] = kVersion;
    m["command"] = command_;
    m["flags"] = flags_;
    m["seeds"] = seeds_;
    m["inputs"] = inputs_;
    m["outputs"] = out_list;
    m["stats"] = stats_;
    const fs::path target = manifest_path ? *manifest_path : fs::path(primary.string() + ".manifest.json");
    std::ofstream f(target, std::ios::binary);
    if (!f) throw Error("cannot write manifest " + target.string());
    f << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  json flags_ = json::object();
  json seeds_ = json::object();
  json stats_ = json::object();
  json inputs_ = json::array();
  std::vector<fs::path> outputs_;
};

std::vector<std::string> read_word_list(const fs::path& path) {
  std::vector<std::string> words;
  for (const auto& line : read_lines(path)) {
    for (auto& w : split_whitespace(line)) {
      if (w == "<pad>" || w == "<bos>" || w == "<eos>" || w == "<unk>") continue;
      words.push_back(std::move(w));
    }
  }
  return words;
}

std::vector<Sentence> read_corpora(Manifest& m, const std::vector<std::string>& files) {
  std::vector<Sentence> all;
  for (const auto& f : files) {
    auto c = read_corpus(m.input(f));
    all.insert(all.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return all;
}

// ---- build-table -----------------------------------------------------------

struct BuildTableArgs {
  std::string lexicon, vocab, out;
};

void cmd_build_table(const CLI::App& sub, const BuildTableArgs& a) {
  Manifest m("build-table", sub);
  const auto lex = Lexicon::load(m.input(a.lexicon));
  std::vector<std::string> vocab;
  if (!a.vocab.empty()) vocab = read_word_list(m.input(a.vocab));
  const auto table = HomophoneTable::build(lex, a.vocab.empty() ? nullptr : &vocab);

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw Error("cannot write " + a.out);
  for (const auto& [key, members] : table.groups()) out << key << '\t' << join(members) << '\n';
  out.close();

  m.stat("groups", table.groups().size());
  m.stat("homophone_groups", table.homophone_group_count());
  m.stat("words", table.word_count());
  if (!vocab.empty()) m.stat("homophone_ratio", homophone_ratio(table, vocab));
  m.output(a.out);
  m.write(a.out);
  std::cerr << "groups " << table.groups().size() << ", with homophones " << table.homophone_group_count() << '\n';
}

// ---- noisify ---------------------------------------------------------------

struct NoisifyArgs {
  std::string lexicon, vocab, input, out;
  double prob = 0.0;
  std::uint64_t seed = 0;
};

void cmd_noisify(const CLI::App& sub, const NoisifyArgs& a) {
  Manifest m("noisify", sub);
  const auto lex = Lexicon::load(m.input(a.lexicon));
  const auto corpus = read_corpus(m.input(a.input));
  std::vector<std::string> vocab;
  if (!a.vocab.empty()) vocab = read_word_list(m.input(a.vocab));
  const auto table = HomophoneTable::build(lex, a.vocab.empty() ? nullptr : &vocab);
  const auto noisy = make_noisy_testset(corpus, table, a.prob, a.seed);
  write_corpus(a.out, noisy.sentences);

  m.seed("seed", a.seed);
  m.stat("sentences", noisy.sentences.size());
  m.stat("replaceable_tokens", noisy.replaceable_tokens);
  m.stat("replacements", noisy.replacements);
  m.output(a.out);
  m.write(a.out);
  std::cerr << "replaced " << noisy.replacements << " of " << noisy.replaceable_tokens << " replaceable tokens\n";
}

// ---- augment ---------------------------------------------------------------

struct AugmentArgs {
  std::string lexicon, src, tgt, out_src, out_tgt;
  double ratio = 0.4;
  double prob = kDefaultAugmentProb;
  std::uint64_t seed = 0;
};

void cmd_augment(const CLI::App& sub, const AugmentArgs& a) {
  Manifest m("augment", sub);
  const auto lex = Lexicon::load(m.input(a.lexicon));
  ParallelCorpus corpus{read_corpus(m.input(a.src)), read_corpus(m.input(a.tgt))};
  corpus.validate();
  const auto table = HomophoneTable::build(lex, nullptr);
  const auto augmented = augment_corpus(corpus, table, a.ratio, a.prob, a.seed);
  write_corpus(a.out_src, augmented.source);
  write_corpus(a.out_tgt, augmented.target);

  m.seed("seed", a.seed);
  m.stat("original_pairs", corpus.size());
  m.stat("added_pairs", augmented.size() - corpus.size());
  m.output(a.out_src);
  m.output(a.out_tgt);
  m.write(a.out_src);
  std::cerr << "wrote " << augmented.size() << " pairs (" << corpus.size() << " original)\n";
}

// ---- learn-bpe / apply-bpe -------------------------------------------------

struct LearnBpeArgs {
  std::vector<std::string> inputs;
  std::size_t merges = 0;
  std::string out;
};

void cmd_learn_bpe(const CLI::App& sub, const LearnBpeArgs& a) {
  Manifest m("learn-bpe", sub);
  const auto corpus = read_corpora(m, a.inputs);
  const auto model = learn_bpe(corpus, a.merges);
  model.save(a.out);
  m.stat("merges", model.num_merges());
  m.output(a.out);
  m.write(a.out);
}

struct ApplyBpeArgs {
  std::string bpe, input, out;
};

void cmd_apply_bpe(const CLI::App& sub, const ApplyBpeArgs& a) {
  Manifest m("apply-bpe", sub);
  const auto model = BpeModel::load(m.input(a.bpe));
  const auto corpus = read_corpus(m.input(a.input));
  const auto seg = Segmenter::bpe_model(model);
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(seg.segment(s));
  write_corpus(a.out, out);
  m.output(a.out);
  m.write(a.out);
}

// ---- build-vocab -----------------------------------------------------------

struct BuildVocabArgs {
  std::vector<std::string> inputs;
  std::string bpe, out;
  std::size_t max_size = 50000;
  bool char_level = false;
};

void cmd_build_vocab(const CLI::App& sub, const BuildVocabArgs& a) {
  if (a.char_level && !a.bpe.empty()) throw UsageError("--char-level and --bpe are mutually exclusive");
  Manifest m("build-vocab", sub);
  std::optional<BpeModel> bpe;
  if (!a.bpe.empty()) bpe = BpeModel::load(m.input(a.bpe));
  const auto corpus = read_corpora(m, a.inputs);
  const Segmenter seg = bpe ? Segmenter::bpe_model(*bpe) : a.char_level ? Segmenter::chars() : Segmenter::word();
  std::vector<Sentence> segmented;
  segmented.reserve(corpus.size());
  for (const auto& s : corpus) segmented.push_back(seg.segment(s));
  const auto vocab = Vocab::build(segmented, a.max_size);
  vocab.save(a.out);
  m.stat("size", vocab.size());
  m.output(a.out);
  m.write(a.out);
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config_file, src, tgt, lexicon, out, loss_log;
  std::uint64_t seed = 0;
  std::optional<std::size_t> steps, batch_size, warmup, bpe_merges, layers, heads, model_dim, ff_dim;
  std::optional<double> beta, lr_factor, dropout;
  bool char_level = false;
  bool freeze_pinyin = false;
};

struct TrainSettings {
  ModelConfig model;
  TrainOptions train;
  VocabLimits limits;
};

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::size_t n = 0;
  for (const auto& raw : read_lines(path)) {
    ++n;
    const auto hash = raw.find('#');
    std::string line = raw.substr(0, hash);
    const auto words = split_whitespace(line);
    if (words.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), n, "expected key=value");
    auto key = split_whitespace(line.substr(0, eq));
    auto value = split_whitespace(line.substr(eq + 1));
    if (key.size() != 1 || value.size() != 1) throw ParseError(path.string(), n, "expected key=value");
    kv[key[0]] = value[0];
  }
  return kv;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw Error("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: bad number for " + key + ": '" + v + "'");
  }
}

// Applies a config file: model keys go to ModelConfig, the rest are training keys.
void apply_config(TrainSettings& s, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (s.model.set(key, value)) continue;
    if (key == "steps") s.train.steps = to_size(key, value);
    else if (key == "batch_size") s.train.batch_size = to_size(key, value);
    else if (key == "lr_factor") s.train.schedule.factor = to_double(key, value);
    else if (key == "warmup_steps") s.train.schedule.warmup_steps = to_size(key, value);
    else if (key == "adam_beta1") s.train.adam.beta1 = to_double(key, value);
    else if (key == "adam_beta2") s.train.adam.beta2 = to_double(key, value);
    else if (key == "adam_epsilon") s.train.adam.epsilon = to_double(key, value);
    else if (key == "freeze_pinyin") s.train.freeze_pinyin = value == "true" || value == "1";
    else if (key == "bpe_merges") s.limits.bpe_merges = to_size(key, value);
    else if (key == "src_vocab_size") s.limits.src_max_size = to_size(key, value);
    else if (key == "tgt_vocab_size") s.limits.tgt_max_size = to_size(key, value);
    else throw Error("config: unknown key '" + key + "'");
  }
}

void cmd_train(const CLI::App& sub, const TrainArgs& a) {
  Manifest m("train", sub);
  TrainSettings s;
  if (!a.config_file.empty()) apply_config(s, read_key_values(m.input(a.config_file)));
  if (a.steps) s.train.steps = *a.steps;
  if (a.batch_size) s.train.batch_size = *a.batch_size;
  if (a.warmup) s.train.schedule.warmup_steps = *a.warmup;
  if (a.lr_factor) s.train.schedule.factor = *a.lr_factor;
  if (a.bpe_merges) s.limits.bpe_merges = *a.bpe_merges;
  if (a.layers) s.model.layers = *a.layers;
  if (a.heads) s.model.heads = *a.heads;
  if (a.model_dim) s.model.model_dim = *a.model_dim;
  if (a.ff_dim) s.model.ff_dim = *a.ff_dim;
  if (a.beta) s.model.beta = *a.beta;
  if (a.dropout) s.model.dropout = *a.dropout;
  if (a.char_level) s.model.char_level = true;
  if (a.freeze_pinyin) s.train.freeze_pinyin = true;
  s.model.seed = a.seed;
  s.train.seed = derive_seed(a.seed, 0x7A);
  s.train.schedule.model_dim = s.model.model_dim;
  s.model.validate();
  s.train.schedule.validate();

  const auto lex = Lexicon::load(m.input(a.lexicon));
  ParallelCorpus corpus{read_corpus(m.input(a.src)), read_corpus(m.input(a.tgt))};
  corpus.validate();

  auto model = build_translation_model(corpus, lex, s.model, s.limits);
  const auto encoded = encode_parallel(model, lex, corpus, derive_seed(a.seed, 0xE7C));
  if (encoded.examples.empty()) throw Error("no training pairs within max_len");
  std::cerr << "pairs " << encoded.examples.size() << " (skipped " << encoded.skipped << "), parameters "
            << model.net.parameter_count() << '\n';

  const std::size_t report_every = std::max<std::size_t>(1, s.train.steps / 20);
  const auto result = train(model.net, encoded.examples, s.train, [&](std::size_t step, double loss) {
    if (step % report_every == 0 || step == s.train.steps) std::cerr << "step " << step << " loss " << loss << '\n';
  });
  save_checkpoint(model, fs::path(a.out));

  m.seed("seed", a.seed);
  m.stat("pairs", encoded.examples.size());
  m.stat("skipped", encoded.skipped);
  m.stat("parameters", model.net.parameter_count());
  m.stat("final_loss", result.loss_curve.empty() ? 0.0 : result.loss_curve.back());
  m.output(a.out);
  if (!a.loss_log.empty()) {
    std::vector<std::string> lines;
    char buf[64];
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu\t%.6f", i + 1, result.loss_curve[i]);
      lines.push_back(buf);
    }
    write_lines(a.loss_log, lines);
    m.output(a.loss_log);
  }
  m.write(a.out);
}

// ---- translate -------------------------------------------------------------

struct TranslateArgs {
  std::string model, lexicon, input, out;
  std::uint64_t seed = 0;
};

void cmd_translate(const CLI::App& sub, const TranslateArgs& a) {
  Manifest m("translate", sub);
  const auto model = load_checkpoint(m.input(a.model));
  const auto lex = Lexicon::load(m.input(a.lexicon));
  check_lexicon(model, lex);
  const auto corpus = read_corpus(m.input(a.input));
  const auto hyps = translate_corpus(model, lex, corpus, a.seed);
  write_corpus(a.out, hyps);
  m.seed("seed", a.seed);
  m.stat("sentences", hyps.size());
  m.output(a.out);
  m.write(a.out);
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string hyp, out;
  std::vector<std::string> refs;
  bool case_sensitive = false;
};

void cmd_evaluate(const CLI::App& sub, const EvaluateArgs& a) {
  Manifest m("evaluate", sub);
  const auto hyps = read_lines(m.input(a.hyp));
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : a.refs) refs.push_back(read_lines(m.input(r)));
  const auto score = bleu_multi_ref(hyps, refs, !a.case_sensitive);
  const std::string line = format_bleu(score);
  std::cout << line << '\n';
  if (!a.out.empty()) {
    write_lines(a.out, {line});
    m.stat("bleu", score.bleu);
    m.output(a.out);
    m.write(a.out);
  }
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> models, refs;
  std::vector<double> probs{0.1, 0.2};
  std::string lexicon, clean, out;
  std::uint64_t seed = 0;
  bool case_sensitive = false;
};

void cmd_report(const CLI::App& sub, const ReportArgs& a) {
  Manifest m("report", sub);
  const auto lex = Lexicon::load(m.input(a.lexicon));
  const auto clean = read_corpus(m.input(a.clean));
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : a.refs) refs.push_back(read_lines(m.input(r)));
  std::vector<TranslationModel> loaded;
  loaded.reserve(a.models.size());
  for (const auto& p : a.models) {
    loaded.push_back(load_checkpoint(m.input(p)));
    check_lexicon(loaded.back(), lex);
  }
  std::vector<ReportModel> models;
  for (std::size_t i = 0; i < loaded.size(); ++i) models.push_back({a.models[i], &loaded[i]});

  // Noise uses the lexicon's table; the per-set seed is recorded in the report.
  const auto table = HomophoneTable::build(lex, nullptr);
  std::vector<EvalSet> sets{{"clean", clean, 0.0, std::nullopt}};
  for (std::size_t k = 0; k < a.probs.size(); ++k) {
    const std::uint64_t seed = derive_seed(a.seed, k + 1);
    auto noisy = make_noisy_testset(clean, table, a.probs[k], seed);
    sets.push_back({"noisy" + std::to_string(k + 1), std::move(noisy.sentences), a.probs[k], seed});
  }
  const auto report = robustness_report(models, sets, refs, lex, derive_seed(a.seed, 0), !a.case_sensitive);
  std::cout << report.to_table();
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw Error("cannot write " + a.out);
  out << report.to_tsv();
  out.close();
  m.seed("seed", a.seed);
  m.output(a.out);
  m.write(a.out);
}

// ---- neighbors -------------------------------------------------------------

struct NeighborsArgs {
  std::string model, query, out;
  std::size_t k = 10;
};

void cmd_neighbors(const CLI::App& sub, const NeighborsArgs& a) {
  Manifest m("neighbors", sub);
  const auto model = load_checkpoint(m.input(a.model));
  const auto nn = nearest_syllables(model.net.weights().source, model.syllables, a.query, a.k);
  std::vector<std::string> lines;
  char buf[128];
  for (const auto& n : nn) {
    std::snprintf(buf, sizeof buf, "%s\t%.6f", n.text.c_str(), n.similarity);
    lines.push_back(buf);
  }
  for (const auto& l : lines) std::cout << l << '\n';
  if (!a.out.empty()) {
    write_lines(a.out, lines);
    m.output(a.out);
    m.write(a.out);
  }
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::size_t probes = 100;
  double h = 1e-4;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  std::size_t layers = 2, model_dim = 16;
  std::string out;
};

int cmd_gradcheck(const CLI::App& sub, const GradcheckArgs& a) {
  Manifest m("gradcheck", sub);
  GradCheckOptions opt{a.probes, a.h, a.seed};
  ModelConfig c = tiny_gradcheck_config();
  c.layers = a.layers;
  c.model_dim = a.model_dim;
  c.validate();
  const auto emb = check_embedding_gradients(a.model_dim, c.beta, opt);
  const auto full = check_model_gradients(c, opt);
  std::vector<std::string> lines;
  char buf[256];
  for (const auto& [name, r] : {std::pair{"embedding", emb}, std::pair{"model", full}}) {
    std::snprintf(buf, sizeof buf, "%s\tmax_rel_error %.3e\tworst %s[%zu] analytic %.9e numeric %.9e", name,
                  r.max_rel_error, r.worst_param.c_str(), r.worst_index, r.worst_analytic, r.worst_numeric);
    lines.push_back(buf);
  }
  for (const auto& l : lines) std::cout << l << '\n';
  if (!a.out.empty()) {
    write_lines(a.out, lines);
    m.seed("seed", a.seed);
    m.stat("embedding_max_rel_error", emb.max_rel_error);
    m.stat("model_max_rel_error", full.max_rel_error);
    m.output(a.out);
    m.write(a.out);
  }
  const bool ok = emb.max_rel_error < a.tolerance && full.max_rel_error < a.tolerance;
  if (!ok) std::cerr << "gradient check exceeded tolerance " << a.tolerance << '\n';
  return ok ? kExitOk : kExitError;
}

// ---- inspect ---------------------------------------------------------------

struct InspectArgs {
  std::string model, lexicon;
};

void cmd_inspect(const InspectArgs& a) {
  if (a.model.empty() == a.lexicon.empty()) throw UsageError("inspect needs exactly one of --model or --lexicon");
  if (!a.model.empty()) {
    auto model = load_checkpoint(resolve_input(a.model));
    std::cout << model.config().to_text();
    std::cout << "src_vocab " << model.src_vocab.size() << "\ntgt_vocab " << model.tgt_vocab.size() << "\nsyllables "
              << model.syllables.size() << "\nsrc_bpe_merges " << model.src_bpe.num_merges() << "\ntgt_bpe_merges "
              << model.tgt_bpe.num_merges() << "\nparameters " << model.net.parameter_count() << '\n';
    model.net.weights().visit([](const std::string& name, Tensor<float>& t) {
      std::cout << name;
      for (std::size_t d : t.dims()) std::cout << ' ' << d;
      std::cout << '\n';
    });
    return;
  }
  const auto lex = Lexicon::load(resolve_input(a.lexicon));
  const auto table = HomophoneTable::build(lex, nullptr);
  std::size_t words = 0;
  for (const auto& [surface, prons] : lex.entries()) words += prons.size();
  std::vector<std::string> surfaces;
  for (const auto& [surface, prons] : lex.entries()) surfaces.push_back(surface);
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.4f", homophone_ratio(table, surfaces));
  std::cout << "entries " << lex.size() << "\npronunciations " << words << "\nsyllables "
            << lex.syllable_count() - 1 << " (+<unk>)\nhomophone_groups " << table.homophone_group_count()
            << "\nhomophone_ratio " << ratio << '\n';
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string lexicon, out_dir;
  SyntheticOptions options;
};

void cmd_synth(const CLI::App& sub, const SynthArgs& a) {
  Manifest m("synth", sub);
  const auto base = Lexicon::load(m.input(a.lexicon));
  const auto task = make_synthetic_task(base, a.options);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_corpus(dir / "train.src", task.train.source);
  write_corpus(dir / "train.tgt", task.train.target);
  write_corpus(dir / "test.src", task.test.source);
  write_corpus(dir / "test.tgt", task.test.target);
  task.lexicon.save(dir / "lexicon.tsv");
  for (const char* f : {"train.src", "train.tgt", "test.src", "test.tgt", "lexicon.tsv"}) m.output(dir / f);
  m.seed("seed", a.options.seed);
  m.stat("source_words", task.mapping.size());
  m.write(dir, dir / "synth.manifest.json");
}

int run(int argc, char** argv) {
  CLI::App app{"phonmt: homophone-robust translation toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  BuildTableArgs bt;
  auto* s_bt = app.add_subcommand("build-table", "Group lexicon words by pronunciation");
  s_bt->add_option("--lexicon", bt.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_bt->add_option("--vocab", bt.vocab, "Optional vocabulary / word list to include");
  s_bt->add_option("--out", bt.out, "Output table (key<TAB>members)")->required();

  NoisifyArgs nz;
  auto* s_nz = app.add_subcommand("noisify", "Replace words with homophones at a given rate");
  s_nz->add_option("--lexicon", nz.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_nz->add_option("--vocab", nz.vocab, "Optional vocabulary / word list for the homophone table");
  s_nz->add_option("--input", nz.input, "Tokenized source corpus")->required();
  s_nz->add_option("--out", nz.out, "Noisy corpus")->required();
  s_nz->add_option("--prob", nz.prob, "Replacement probability per replaceable token")->required();
  s_nz->add_option("--seed", nz.seed, "Random seed")->required();

  AugmentArgs ag;
  auto* s_ag = app.add_subcommand("augment", "Append homophone-noised copies of training pairs");
  s_ag->add_option("--lexicon", ag.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_ag->add_option("--src", ag.src, "Source corpus")->required();
  s_ag->add_option("--tgt", ag.tgt, "Target corpus")->required();
  s_ag->add_option("--out-src", ag.out_src, "Augmented source corpus")->required();
  s_ag->add_option("--out-tgt", ag.out_tgt, "Augmented target corpus")->required();
  s_ag->add_option("--ratio", ag.ratio, "Added pairs as a fraction of the corpus");
  s_ag->add_option("--prob", ag.prob, "Replacement probability inside an added sentence");
  s_ag->add_option("--seed", ag.seed, "Random seed")->required();

  LearnBpeArgs lb;
  auto* s_lb = app.add_subcommand("learn-bpe", "Learn BPE merges");
  s_lb->add_option("--input", lb.inputs, "Tokenized corpora")->required()->expected(1, -1);
  s_lb->add_option("--merges", lb.merges, "Number of merges")->required();
  s_lb->add_option("--out", lb.out, "Merge list")->required();

  ApplyBpeArgs ab;
  auto* s_ab = app.add_subcommand("apply-bpe", "Segment a corpus with learned merges");
  s_ab->add_option("--bpe", ab.bpe, "Merge list")->required();
  s_ab->add_option("--input", ab.input, "Tokenized corpus")->required();
  s_ab->add_option("--out", ab.out, "Segmented corpus")->required();

  BuildVocabArgs bv;
  auto* s_bv = app.add_subcommand("build-vocab", "Build a frequency-ordered vocabulary");
  s_bv->add_option("--input", bv.inputs, "Tokenized corpora")->required()->expected(1, -1);
  s_bv->add_option("--bpe", bv.bpe, "Segment with this merge list first");
  s_bv->add_flag("--char-level", bv.char_level, "Split words into characters");
  s_bv->add_option("--max-size", bv.max_size, "Maximum size including reserved tokens");
  s_bv->add_option("--out", bv.out, "Vocabulary file")->required();

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train a translation model");
  s_tr->add_option("--config", tr.config_file, "key=value configuration file");
  s_tr->add_option("--src", tr.src, "Source training corpus")->required();
  s_tr->add_option("--tgt", tr.tgt, "Target training corpus")->required();
  s_tr->add_option("--lexicon", tr.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_tr->add_option("--out", tr.out, "Checkpoint path")->required();
  s_tr->add_option("--seed", tr.seed, "Random seed (initialization, batching, dropout)")->required();
  s_tr->add_option("--loss-log", tr.loss_log, "Write per-step loss here");
  s_tr->add_option("--steps", tr.steps, "Optimizer steps");
  s_tr->add_option("--batch-size", tr.batch_size, "Sentences per batch");
  s_tr->add_option("--warmup", tr.warmup, "Learning-rate warmup steps");
  s_tr->add_option("--lr-factor", tr.lr_factor, "Learning-rate factor");
  s_tr->add_option("--bpe-merges", tr.bpe_merges, "BPE merges per side (0 = whole words)");
  s_tr->add_option("--layers", tr.layers, "Encoder and decoder layers");
  s_tr->add_option("--heads", tr.heads, "Attention heads");
  s_tr->add_option("--model-dim", tr.model_dim, "Model width");
  s_tr->add_option("--ff-dim", tr.ff_dim, "Feed-forward width");
  s_tr->add_option("--beta", tr.beta, "Weight of the pronunciation embedding");
  s_tr->add_option("--dropout", tr.dropout, "Dropout rate");
  s_tr->add_flag("--char-level", tr.char_level, "Character-level source");
  s_tr->add_flag("--freeze-pinyin", tr.freeze_pinyin, "Do not update the pronunciation table");

  TranslateArgs tl;
  auto* s_tl = app.add_subcommand("translate", "Greedy-decode a corpus");
  s_tl->add_option("--model", tl.model, "Checkpoint")->required();
  s_tl->add_option("--lexicon", tl.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_tl->add_option("--input", tl.input, "Source corpus")->required();
  s_tl->add_option("--out", tl.out, "Hypotheses")->required();
  s_tl->add_option("--seed", tl.seed, "Seed for pronunciation choices of ambiguous words")->required();

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Corpus BLEU against one or more references");
  s_ev->add_option("--hyp", ev.hyp, "Hypotheses")->required();
  s_ev->add_option("--refs", ev.refs, "Reference files")->required()->expected(1, -1);
  s_ev->add_flag("--case-sensitive", ev.case_sensitive, "Compare case-sensitively");
  s_ev->add_option("--out", ev.out, "Also write the score line here");

  ReportArgs rp;
  auto* s_rp = app.add_subcommand("report", "Clean vs. homophone-noised BLEU for several models");
  s_rp->add_option("--models", rp.models, "Checkpoints")->required()->expected(1, -1);
  s_rp->add_option("--lexicon", rp.lexicon, "Pronunciation lexicon (TSV)")->required();
  s_rp->add_option("--clean", rp.clean, "Clean source test set")->required();
  s_rp->add_option("--refs", rp.refs, "Reference files")->required()->expected(1, -1);
  s_rp->add_option("--noise-probs", rp.probs, "Replacement probability of each noisy set")->expected(1, -1);
  s_rp->add_option("--seed", rp.seed, "Seed for noise and decoding")->required();
  s_rp->add_flag("--case-sensitive", rp.case_sensitive, "Compare case-sensitively");
  s_rp->add_option("--out", rp.out, "TSV report")->required();

  NeighborsArgs nb;
  auto* s_nb = app.add_subcommand("neighbors", "Nearest syllables in the pronunciation embedding");
  s_nb->add_option("--model", nb.model, "Checkpoint")->required();
  s_nb->add_option("--query", nb.query, "Toneless syllable")->required();
  s_nb->add_option("-k", nb.k, "Number of neighbours");
  s_nb->add_option("--out", nb.out, "Also write the list here");

  GradcheckArgs gc;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  s_gc->set_help_flag("--help", "Print this help message and exit");
  s_gc->add_option("--probes", gc.probes, "Random coordinates to probe");
  s_gc->add_option("--h", gc.h, "Central-difference step");
  s_gc->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  s_gc->add_option("--layers", gc.layers, "Layers of the test model");
  s_gc->add_option("--model-dim", gc.model_dim, "Width of the test model");
  s_gc->add_option("--seed", gc.seed, "Random seed")->required();
  s_gc->add_option("--out", gc.out, "Also write the results here");

  InspectArgs in;
  auto* s_in = app.add_subcommand("inspect", "Describe a checkpoint or a lexicon");
  s_in->add_option("--model", in.model, "Checkpoint");
  s_in->add_option("--lexicon", in.lexicon, "Pronunciation lexicon (TSV)");

  SynthArgs sy;
  auto* s_sy = app.add_subcommand("synth", "Generate the synthetic homophone translation task");
  s_sy->add_option("--lexicon", sy.lexicon, "Base lexicon to draw characters from")->required();
  s_sy->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  s_sy->add_option("--seed", sy.options.seed, "Random seed")->required();
  s_sy->add_option("--groups", sy.options.groups, "Homophone groups (three characters each)");
  s_sy->add_option("--singletons", sy.options.singletons, "Characters without homophones");
  s_sy->add_option("--train-pairs", sy.options.train_pairs, "Training pairs");
  s_sy->add_option("--test-pairs", sy.options.test_pairs, "Test pairs");
  s_sy->add_option("--min-len", sy.options.min_len, "Minimum sentence length");
  s_sy->add_option("--max-len", sy.options.max_len, "Maximum sentence length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n";
    const auto active = app.get_subcommands();
    std::cerr << (active.empty() ? app.help() : active.front()->help());
    return kExitUsage;
  }

  try {
    if (s_bt->parsed()) cmd_build_table(*s_bt, bt);
    else if (s_nz->parsed()) cmd_noisify(*s_nz, nz);
    else if (s_ag->parsed()) cmd_augment(*s_ag, ag);
    else if (s_lb->parsed()) cmd_learn_bpe(*s_lb, lb);
    else if (s_ab->parsed()) cmd_apply_bpe(*s_ab, ab);
    else if (s_bv->parsed()) cmd_build_vocab(*s_bv, bv);
    else if (s_tr->parsed()) cmd_train(*s_tr, tr);
    else if (s_tl->parsed()) cmd_translate(*s_tl, tl);
    else if (s_ev->parsed()) cmd_evaluate(*s_ev, ev);
    else if (s_rp->parsed()) cmd_report(*s_rp, rp);
    else if (s_nb->parsed()) cmd_neighbors(*s_nb, nb);
    else if (s_gc->parsed()) return cmd_gradcheck(*s_gc, gc);
    else if (s_in->parsed()) cmd_inspect(in);
    else if (s_sy->parsed()) cmd_synth(*s_sy, sy);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace
}  // namespace phonmt

int main(int argc, char** argv) { return phonmt::run(argc, argv); }
