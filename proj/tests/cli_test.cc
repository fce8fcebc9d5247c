#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "phrasekit/corpus.h"
#include "phrasekit/hashing.h"
#include "support/synthetic.h"

namespace phrasekit {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome Cli(const std::string& args) {
  const std::string cmd = std::string(PHRASEKIT_CLI) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), pipe)) > 0;) o.out.append(buf, n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::CipherSpec spec;
    spec.pairs = 200;
    spec.vocab = 25;
    spec.max_len = 6;
    SaveParallel(testing::CipherCorpus(spec), dir_ / "corpus.tsv");
    WriteFile(dir_ / "run.ini",
              "[paths]\ncorpus = corpus.tsv\nworkdir = work\n"
              "[tokenizer]\nvocab_size = 80\n"
              "[alignment]\nalignment_iterations = 4\n");
  }

  std::string Cfg() const { return "--config " + (dir_ / "run.ini").string(); }

  testing::TempDir dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli("").code, 1);
  EXPECT_EQ(Cli("no-such-command").code, 1);
  EXPECT_EQ(Cli("--help").code, 0);
}

TEST_F(CliTest, ConfigErrorsExitWithOne) {
  WriteFile(dir_ / "bad.ini", "lm_order = 0\nfoo = 1\n");
  EXPECT_EQ(Cli("--config " + (dir_ / "bad.ini").string() + " prepare").code, 1);
}

TEST_F(CliTest, MissingDependencyExitsWithThree) {
  EXPECT_EQ(Cli(Cfg() + " score").code, 3);
}

TEST_F(CliTest, StagesRunInSequence) {
  EXPECT_EQ(Cli(Cfg() + " prepare").code, 0);
  EXPECT_EQ(Cli(Cfg() + " train-tokenizer").code, 0);
  EXPECT_EQ(Cli(Cfg() + " train-lm --order 3").code, 0);
  EXPECT_EQ(Cli(Cfg() + " align --dir fwd").code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "work" / "model" / "aligned.fwd"));
  EXPECT_EQ(Cli(Cfg() + " align").code, 0);
  EXPECT_EQ(Cli(Cfg() + " extract-phrases").code, 0);
  EXPECT_EQ(Cli(Cfg() + " decode --nbest 3").code, 0);
  const Outcome score = Cli(Cfg() + " score");
  EXPECT_EQ(score.code, 0);
  EXPECT_NE(score.out.find("corpus_bleu"), std::string::npos);
  EXPECT_EQ(Cli(Cfg() + " analyze").code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "work" / "output" / "test.nbest"));
  EXPECT_EQ(Cli(Cfg() + " run").code, 0);
  EXPECT_EQ(Cli(Cfg() + " run --stages decode,bogus").code, 1);
}

TEST_F(CliTest, DirectScoring) {
  WriteFile(dir_ / "h.txt", "a b c d\n");
  WriteFile(dir_ / "r.txt", "a b c e\n");
  const std::string files =
      " --hyp " + (dir_ / "h.txt").string() + " --ref " + (dir_ / "r.txt").string();
  const Outcome addk = Cli("score --smoothing addk" + files);
  EXPECT_EQ(addk.code, 0);
  EXPECT_NE(addk.out.find("corpus_bleu 65.8037"), std::string::npos) << addk.out;
  EXPECT_EQ(Cli("score --smoothing sideways" + files).code, 1);
  WriteFile(dir_ / "r2.txt", "a\nb\n");
  EXPECT_EQ(Cli("score --hyp " + (dir_ / "h.txt").string() + " --ref " +
                (dir_ / "r2.txt").string())
                .code,
            2);
}

TEST_F(CliTest, CorruptCorpusIsADataError) {
  WriteFile(dir_ / "corpus.tsv", "no tab here\n");
  EXPECT_EQ(Cli(Cfg() + " prepare").code, 2);
}

TEST_F(CliTest, UnreachableOrUnconfiguredEndpoint) {
  EXPECT_EQ(Cli(Cfg() + " prepare").code, 0);
  EXPECT_EQ(Cli(Cfg() + " icl").code, 1);
}

}  // namespace
}  // namespace phrasekit
