// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "phonmt/text.hpp"
#include "test_support.hpp"

namespace phonmt {
namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args, const fs::path& cwd, const std::string& env = "") {
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + " '" + PHONMT_CLI_PATH + "' " + args + " >cli.out 2>cli.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_ten_line_corpus(const fs::path& dir) {
  std::vector<std::string> src, tgt;
  for (int i = 0; i < 10; ++i) {
    src.push_back(i % 2 ? "我 有 书" : "他 又 来 了");
    tgt.push_back("line " + std::to_string(i));
  }
  write_lines(dir / "train.src", src);
  write_lines(dir / "train.tgt", tgt);
  return dir;
}

TEST(Cli, NoisifyIsDeterministic) {
  const auto dir = write_ten_line_corpus(testing::scratch_dir("cli_noisify"));
  const std::string lex = testing::shipped_lexicon_path().string();
  for (const char* out : {"a.txt", "b.txt"}) {
    ASSERT_EQ(run_cli("noisify --lexicon " + lex + " --input train.src --prob 0.2 --seed 7 --out n.txt", dir), 0);
    fs::rename(dir / "n.txt", dir / out);
    fs::rename(dir / "n.txt.manifest.json", dir / (std::string(out) + ".manifest.json"));
  }
  EXPECT_EQ(testing::slurp(dir / "a.txt"), testing::slurp(dir / "b.txt"));
  EXPECT_EQ(testing::slurp(dir / "a.txt.manifest.json"), testing::slurp(dir / "b.txt.manifest.json"));
  const auto manifest = testing::slurp(dir / "a.txt.manifest.json");
  EXPECT_NE(manifest.find("\"sha256\""), std::string::npos);
  EXPECT_NE(manifest.find("\"--seed\": \"7\""), std::string::npos);
}

TEST(Cli, AugmentAddsFortyPercent) {
  const auto dir = write_ten_line_corpus(testing::scratch_dir("cli_augment"));
  const std::string lex = testing::shipped_lexicon_path().string();
  ASSERT_EQ(run_cli("augment --lexicon " + lex +
                        " --src train.src --tgt train.tgt --out-src aug.src --out-tgt aug.tgt --ratio 0.4 --seed 3",
                    dir),
            0);
  const auto src = read_lines(dir / "aug.src");
  const auto tgt = read_lines(dir / "aug.tgt");
  EXPECT_EQ(src.size(), 14u);
  EXPECT_EQ(tgt.size(), 14u);
  const auto orig = read_lines(dir / "train.src");
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(src[i], orig[i]);
  EXPECT_TRUE(fs::exists(dir / "aug.src.manifest.json"));
}

TEST(Cli, MissingRequiredFlagIsUsageError) {
  const auto dir = write_ten_line_corpus(testing::scratch_dir("cli_usage"));
  EXPECT_EQ(run_cli("noisify --input train.src --prob 0.2 --seed 7 --out n.txt", dir), 2);
  const auto err = testing::slurp(dir / "cli.err");
  EXPECT_NE(err.find("--lexicon"), std::string::npos);
  EXPECT_NE(err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli("", dir), 2);
  EXPECT_EQ(run_cli("no-such-command", dir), 2);
  EXPECT_EQ(run_cli("noisify --bogus 1", dir), 2);
}

TEST(Cli, HelpExitsZero) {
  const auto dir = testing::scratch_dir("cli_help");
  EXPECT_EQ(run_cli("--help", dir), 0);
  EXPECT_EQ(run_cli("gradcheck --help", dir), 0);
  EXPECT_NE(testing::slurp(dir / "cli.out").find("--probes"), std::string::npos);
}

TEST(Cli, OperationalErrorExitsOne) {
  const auto dir = testing::scratch_dir("cli_operr");
  EXPECT_EQ(run_cli("noisify --lexicon nope.tsv --input nope.txt --prob 0.2 --seed 1 --out n.txt", dir), 1);
  write_lines(dir / "bad.tsv", {"有 you"});
  write_lines(dir / "in.txt", {"有"});
  EXPECT_EQ(run_cli("noisify --lexicon bad.tsv --input in.txt --prob 0.2 --seed 1 --out n.txt", dir), 1);
  EXPECT_NE(testing::slurp(dir / "cli.err").find("bad.tsv:1"), std::string::npos);
}

TEST(Cli, DataDirectoryOverride) {
  const auto dir = write_ten_line_corpus(testing::scratch_dir("cli_datadir"));
  const std::string env = "PHONMT_DATA_DIR='" + testing::data_dir().string() + "'";
  EXPECT_EQ(run_cli("noisify --lexicon mandarin_lexicon.tsv --input train.src --prob 0.1 --seed 2 --out n.txt", dir, env),
            0);
  EXPECT_EQ(run_cli("noisify --lexicon mandarin_lexicon.tsv --input train.src --prob 0.1 --seed 2 --out n.txt", dir), 1);
}

TEST(Cli, GradcheckPasses) {
  const auto dir = testing::scratch_dir("cli_gradcheck");
  EXPECT_EQ(run_cli("gradcheck --probes 50 --h 1e-4 --seed 4", dir), 0);
  EXPECT_NE(testing::slurp(dir / "cli.out").find("model\tmax_rel_error"), std::string::npos);
}

TEST(Cli, InspectLexicon) {
  const auto dir = testing::scratch_dir("cli_inspect");
  EXPECT_EQ(run_cli("inspect --lexicon " + testing::shipped_lexicon_path().string(), dir), 0);
  EXPECT_NE(testing::slurp(dir / "cli.out").find("syllables 404"), std::string::npos);
  EXPECT_EQ(run_cli("inspect", dir), 2);
}

}  // namespace
}  // namespace phonmt
