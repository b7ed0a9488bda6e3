// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "phonmt/checkpoint.hpp"
#include "phonmt/rng.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

const char* kLexicon = "我\twǒ\n有\tyǒu\n又\tyòu\n书\tshū\n行\txíng\n行\tháng\n";

TranslationModel small_model(bool bpe) {
  ParallelCorpus corpus{{{"我", "有", "书"}, {"我", "又", "有"}, {"书", "行"}},
                        {{"i", "have", "books"}, {"i", "again", "have"}, {"books", "ok"}}};
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 8;
  c.ff_dim = 16;
  c.beta = 0.7;
  c.seed = 12;
  VocabLimits limits;
  limits.bpe_merges = bpe ? 3 : 0;
  return build_translation_model(corpus, testing::lexicon_from_text(kLexicon), c, limits);
}

std::string serialize(const TranslationModel& m) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(m, out);
  return out.str();
}

TranslationModel deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_checkpoint(in);
}

TEST(Checkpoint, RoundTripReproducesLogitsBitExactly) {
  for (bool bpe : {false, true}) {
    const auto model = small_model(bpe);
    const auto loaded = deserialize(serialize(model));
    EXPECT_EQ(loaded.config().to_text(), model.config().to_text());
    EXPECT_EQ(loaded.src_vocab, model.src_vocab);
    EXPECT_EQ(loaded.tgt_vocab, model.tgt_vocab);
    EXPECT_EQ(loaded.syllables, model.syllables);
    EXPECT_EQ(loaded.src_bpe.merges, model.src_bpe.merges);
    EXPECT_EQ(loaded.tgt_bpe.merges, model.tgt_bpe.merges);
    const auto lex = testing::lexicon_from_text(kLexicon);
    Rng r1(1), r2(1);
    const Sentence words{"我", "有", "书"};
    const auto src = encode_source(model, lex, words, r1);
    const std::vector<TokenId> prefix{Vocab::kBos, 4, 5};
    EXPECT_EQ(model.net.forward(src, prefix), loaded.net.forward(encode_source(loaded, lex, words, r2), prefix));
    EXPECT_EQ(serialize(loaded), serialize(model));
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = testing::scratch_dir("ckpt");
  const auto model = small_model(false);
  save_checkpoint(model, dir / "m.pnmt");
  EXPECT_EQ(serialize(load_checkpoint(dir / "m.pnmt")), serialize(model));
  EXPECT_THROW(load_checkpoint(dir / "missing.pnmt"), Error);
}

TEST(Checkpoint, StartsWithMagicAndVersion) {
  const auto bytes = serialize(small_model(false));
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(0, 4), "PNMT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(bytes[5], 0);
}

TEST(Checkpoint, CorruptionIsRejected) {
  const auto good = serialize(small_model(false));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), CheckpointError);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(deserialize(bad_version), CheckpointError);

  EXPECT_THROW(deserialize(good.substr(0, good.size() - 3)), CheckpointError);
  EXPECT_THROW(deserialize(good.substr(0, 6)), CheckpointError);
  EXPECT_THROW(deserialize(""), CheckpointError);
  EXPECT_THROW(deserialize(good + "x"), CheckpointError);

  // Oversized config-block length.
  auto bad_len = good;
  bad_len[8] = '\xff';
  bad_len[9] = '\xff';
  bad_len[10] = '\xff';
  EXPECT_THROW(deserialize(bad_len), CheckpointError);
}

TEST(Checkpoint, TamperedTensorNameIsRejected) {
  auto bytes = serialize(small_model(false));
  const auto pos = bytes.find("source.word_table");
  ASSERT_NE(pos, std::string::npos);
  bytes[pos] = 'x';
  EXPECT_THROW(deserialize(bytes), CheckpointError);
}

}  // namespace
}  // namespace phonmt
