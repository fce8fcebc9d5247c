#include "phrasekit/config.h"

#include <string>

#include <gtest/gtest.h>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "support/synthetic.h"

namespace phrasekit {
namespace {

std::vector<std::string> Problems(std::string_view text) {
  try {
    ParseConfig(text);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool Mentions(const std::vector<std::string>& problems, std::string_view needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(ConfigTest, DefaultsWhenEmpty) {
  const PipelineConfig c = ParseConfig("");
  EXPECT_EQ(c.vocab_size, 10000u);
  EXPECT_EQ(c.lm_order, 3);
  EXPECT_EQ(c.decoder.stack_size, 100);
  EXPECT_EQ(c.decoder.distortion_limit, 6);
  EXPECT_DOUBLE_EQ(c.train_fraction, 0.8);
  EXPECT_EQ(c.icl_k, 20u);
  EXPECT_EQ(c.icl_limit, 1000u);
}

TEST(ConfigTest, SectionsAndValues) {
  const PipelineConfig c = ParseConfig(
      "# comment\n"
      "seed = 9\n"
      "[tokenizer]\n"
      "vocab_size = 10000\n"
      "char_mode = true\n"
      "[decoder]\n"
      "; another comment\n"
      "stack_size = 50\n"
      "distortion_limit = -1\n"
      "weight_lm = 0.75\n"
      "[icl]\n"
      "template = \"Q: {src}\\nA: {tgt}\"\n"
      "separator = \"\\n\\n\"\n",
      "/base");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.vocab_size, 10000u);
  EXPECT_TRUE(c.char_mode);
  EXPECT_EQ(c.decoder.stack_size, 50);
  EXPECT_EQ(c.decoder.distortion_limit, -1);
  EXPECT_DOUBLE_EQ(c.weights.lm, 0.75);
  EXPECT_EQ(c.prompt.pattern, "Q: {src}\nA: {tgt}");
  EXPECT_EQ(c.prompt.separator, "\n\n");
}

TEST(ConfigTest, RelativePathsResolveAgainstTheConfigDirectory) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "data");
  WriteFile(dir / "data" / "c.tsv", "a\tb\n");
  const PipelineConfig c =
      ParseConfig("[paths]\ncorpus = data/c.tsv\nworkdir = /abs/w\n", dir.path());
  EXPECT_EQ(c.corpus, dir.path() / "data" / "c.tsv");
  EXPECT_EQ(c.workdir, std::filesystem::path("/abs/w"));
  EXPECT_EQ(ParseConfig("", "/cfg").workdir, std::filesystem::path("/cfg/work"));
}

TEST(ConfigTest, MissingCorpusIsReported) {
  EXPECT_TRUE(Mentions(Problems("[paths]\ncorpus = /no/such/file.tsv\n"), "file not found"));
}

TEST(ConfigTest, DuplicateKey) {
  EXPECT_TRUE(Mentions(Problems("seed = 1\nseed = 2\n"), "duplicate key 'seed'"));
}

TEST(ConfigTest, RangeViolation) {
  const auto p = Problems("[lm]\nlm_order = 0\n");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_TRUE(Mentions(p, "lm_order"));
  EXPECT_TRUE(Mentions(p, "out of range"));
}

TEST(ConfigTest, UnknownKeyGetsASuggestion) {
  const auto p = Problems("foo = 1\nvocab_sise = 10\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_TRUE(Mentions(p, "unknown key 'foo'"));
  EXPECT_TRUE(Mentions(p, "did you mean 'vocab_size'"));
}

TEST(ConfigTest, AllProblemsAreCollected) {
  const auto p = Problems(
      "lm_order = 0\n"
      "stack_size = many\n"
      "train_fraction = 1.5\n"
      "[nowhere]\n"
      "not a setting\n"
      "[icl]\n"
      "template = \"{tgt} {src}\"\n");
  EXPECT_EQ(p.size(), 6u);
  EXPECT_TRUE(Mentions(p, "line 1"));
  EXPECT_TRUE(Mentions(p, "line 7"));
  EXPECT_TRUE(Mentions(p, "expected an integer"));
  EXPECT_TRUE(Mentions(p, "unknown section"));
}

TEST(ConfigTest, KeyInTheWrongSection) {
  EXPECT_TRUE(Mentions(Problems("[lm]\nstack_size = 10\n"), "belongs in [decoder]"));
}

TEST(ConfigTest, CanonicalFormIsStableAndSensitive) {
  const PipelineConfig a = ParseConfig("seed = 1\n");
  const PipelineConfig b = ParseConfig("[run]\nseed = 1\n");
  const PipelineConfig c = ParseConfig("seed = 2\n");
  EXPECT_EQ(a.Canonical(), b.Canonical());
  EXPECT_NE(a.Canonical(), c.Canonical());
  const PipelineConfig w = ParseConfig("seed = 1\n[paths]\nworkdir = /elsewhere\n");
  EXPECT_EQ(Sha256Hex(a.Canonical()), Sha256Hex(w.Canonical()));
  for (const auto& key : ConfigKeys()) {
    if (key == "workdir") continue;
    EXPECT_NE(a.Canonical().find(key + " = "), std::string::npos) << key;
  }
}

TEST(ConfigTest, LoadFromFile) {
  testing::TempDir dir;
  WriteFile(dir / "x.tsv", "a\tb\n");
  WriteFile(dir / "c.ini", "[paths]\ncorpus = x.tsv\n");
  EXPECT_EQ(LoadConfig(dir / "c.ini").corpus, dir.path() / "x.tsv");
  EXPECT_THROW(LoadConfig(dir / "missing.ini"), IoError);
}

TEST(EditDistanceTest, Basics) {
  EXPECT_EQ(EditDistance("", ""), 0u);
  EXPECT_EQ(EditDistance("abc", ""), 3u);
  EXPECT_EQ(EditDistance("kitten", "sitting"), 3u);
}

}  // namespace
}  // namespace phrasekit
