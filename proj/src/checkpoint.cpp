// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace phonmt {

namespace {

static_assert(sizeof(float) == 4);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<U>(bytes);
  }
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void write_bytes(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    read(&v, 4, what);
    return to_little(v);
  }

  std::string bytes(const char* what, std::size_t limit) {
    const std::uint32_t n = u32(what);
    if (n > limit) throw CheckpointError(std::string("checkpoint field too large: ") + what);
    std::string s(n, '\0');
    read(s.data(), n, what);
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

std::string join_tokens(const std::vector<std::string>& tokens) { return join(tokens, " "); }

std::string join_merges(const BpeModel& bpe) {
  std::vector<std::string> flat;
  for (const auto& [l, r] : bpe.merges) {
    flat.push_back(l);
    flat.push_back(r);
  }
  return join(flat, " ");
}

BpeModel split_merges(const std::string& v) {
  auto flat = split_whitespace(v);
  if (flat.size() % 2) throw CheckpointError("checkpoint BPE merge list has odd length");
  BpeModel bpe;
  for (std::size_t i = 0; i < flat.size(); i += 2) bpe.merges.emplace_back(flat[i], flat[i + 1]);
  return bpe;
}

std::string config_block(const TranslationModel& model) {
  std::ostringstream os;
  os << model.config().to_text();
  os << "tgt_uses_bpe=" << (model.tgt_uses_bpe ? 1 : 0) << '\n';
  os << "src_bpe=" << join_merges(model.src_bpe) << '\n';
  os << "tgt_bpe=" << join_merges(model.tgt_bpe) << '\n';
  os << "src_vocab=" << join_tokens(model.src_vocab.tokens()) << '\n';
  os << "tgt_vocab=" << join_tokens(model.tgt_vocab.tokens()) << '\n';
  os << "syllables=" << join_tokens(model.syllables) << '\n';
  return os.str();
}

}  // namespace

void save_checkpoint(const TranslationModel& model, std::ostream& out) {
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_bytes(out, config_block(model));
  auto& weights = const_cast<Weights<float>&>(model.net.weights());
  weights.visit([&out](const std::string& name, Tensor<float>& t) {
    write_bytes(out, name);
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.dims()) write_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      write_u32(out, bits);
    }
  });
  if (!out) throw CheckpointError("checkpoint write failed");
}

void save_checkpoint(const TranslationModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  save_checkpoint(model, out);
}

TranslationModel load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CheckpointError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string block = r.bytes("config block", 1u << 30);

  std::map<std::string, std::string> kv;
  std::istringstream lines(block);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError("checkpoint config is missing '" + key + "'");
    std::string v = std::move(it->second);
    kv.erase(it);
    return v;
  };

  try {
    const bool tgt_uses_bpe = take("tgt_uses_bpe") == "1";
    BpeModel src_bpe = split_merges(take("src_bpe"));
    BpeModel tgt_bpe = split_merges(take("tgt_bpe"));
    Vocab src_vocab = Vocab::from_tokens(split_whitespace(take("src_vocab")));
    Vocab tgt_vocab = Vocab::from_tokens(split_whitespace(take("tgt_vocab")));
    std::vector<std::string> syllables = split_whitespace(take("syllables"));
    ModelConfig config;
    for (const auto& [k, v] : kv) {
      if (!config.set(k, v)) throw CheckpointError("unknown checkpoint config key '" + k + "'");
    }
    config.validate();

    auto weights = shaped_weights<float>(config, src_vocab.size(), tgt_vocab.size(), syllables.size());
    weights.visit([&r](const std::string& name, Tensor<float>& t) {
      const std::string got = r.bytes("tensor name", 4096);
      if (got != name) throw CheckpointError("expected tensor '" + name + "', found '" + got + "'");
      const std::uint32_t rank = r.u32("tensor rank");
      if (rank != t.rank()) throw CheckpointError("tensor '" + name + "' has wrong rank");
      for (std::size_t i = 0; i < rank; ++i) {
        if (r.u32("tensor dims") != t.dims()[i]) throw CheckpointError("tensor '" + name + "' has wrong shape");
      }
      for (auto& v : t.values()) v = std::bit_cast<float>(r.u32("tensor values"));
    });
    if (!r.at_end()) throw CheckpointError("trailing bytes after last tensor");
    return TranslationModel{std::move(src_bpe), std::move(tgt_bpe), tgt_uses_bpe, std::move(src_vocab),
                            std::move(tgt_vocab), std::move(syllables),
                            Transformer<float>(config, std::move(weights))};
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

TranslationModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace phonmt
