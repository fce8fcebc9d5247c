#include "phrasekit/alignment.h"

#include <cmath>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "oracles/alignment_oracle.h"
#include "phrasekit/error.h"
#include "support/synthetic.h"

namespace phrasekit {
namespace {

std::vector<TokenizedPair> Classic() {
  return {{{"the", "house"}, {"das", "haus"}}, {{"the"}, {"das"}}};
}

oracle::Links LinkSet(const Alignment& a) { return {a.links.begin(), a.links.end()}; }

Alignment Make(int ns, int nt, std::vector<std::pair<int, int>> links) {
  Alignment a;
  a.source_len = ns;
  a.target_len = nt;
  a.links = std::move(links);
  std::sort(a.links.begin(), a.links.end());
  return a;
}

// With a NULL source word, "das" in the one-word pair is shared between
// NULL and "the", which slows the climb of p(das|the): exact EM gives
// 0.97959 after 20 iterations and passes 0.99 only near iteration 40.
TEST(Model1Test, ClassicCorpusConverges) {
  Model1Trace trace;
  const TranslationTable t = TrainModel1(Classic(), 20, Direction::kForward, &trace);
  EXPECT_NEAR(t.Prob("the", "das"), 0.9795928365251416, 1e-9);
  EXPECT_GT(t.Prob("house", "haus"), 0.99);
  EXPECT_GT(TrainModel1(Classic(), 40).Prob("the", "das"), 0.99);
  ASSERT_EQ(trace.log_likelihood.size(), 21u);
  for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
    EXPECT_GE(trace.log_likelihood[i], trace.log_likelihood[i - 1] - 1e-9);
  }
}

TEST(Model1Test, SinglePairOneIteration) {
  const TranslationTable t = TrainModel1({{{"a"}, {"x"}}}, 1);
  EXPECT_DOUBLE_EQ(t.Prob("a", "x"), 1.0);
}

TEST(Model1Test, ZeroIterationsIsUniformOverCooccurrences) {
  const TranslationTable t = TrainModel1(Classic(), 0);
  EXPECT_DOUBLE_EQ(t.Prob("the", "das"), 0.5);
  EXPECT_DOUBLE_EQ(t.Prob("house", "haus"), 0.5);
  EXPECT_DOUBLE_EQ(t.Prob("NULL", "haus"), 0.5);
  EXPECT_FALSE(t.Contains("house", "nothing"));
  EXPECT_DOUBLE_EQ(t.Prob("house", "nothing"), kProbabilityFloor);
}

TEST(Model1Test, MatchesNaiveEm) {
  SeededRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TokenizedPair> corpus;
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> plain;
    for (int i = 0; i < 25; ++i) {
      TokenizedPair p{testing::RandomTokens(rng, 1, 6, 8, "s"),
                      testing::RandomTokens(rng, 1, 6, 8, "t")};
      plain.emplace_back(p.source, p.target);
      corpus.push_back(std::move(p));
    }
    const int iters = 1 + trial;
    Model1Trace trace;
    const TranslationTable t = TrainModel1(corpus, iters, Direction::kForward, &trace);
    const oracle::Model1Result o = oracle::Model1(plain, iters);
    for (const auto& [key, p] : o.prob) {
      EXPECT_NEAR(t.Prob(key.first, key.second), p, 1e-12);
    }
    EXPECT_EQ(t.size(), o.prob.size());
    ASSERT_EQ(trace.log_likelihood.size(), o.log_likelihood.size());
    for (std::size_t i = 0; i < o.log_likelihood.size(); ++i) {
      EXPECT_NEAR(trace.log_likelihood[i], o.log_likelihood[i], 1e-9);
    }
  }
}

TEST(Model1Test, RowsNormalizeAndReverseSwapsSides) {
  SeededRng rng(9);
  std::vector<TokenizedPair> corpus;
  for (int i = 0; i < 60; ++i) {
    corpus.push_back({testing::RandomTokens(rng, 1, 7, 12, "s"),
                      testing::RandomTokens(rng, 1, 7, 12, "t")});
  }
  for (Direction d : {Direction::kForward, Direction::kReverse}) {
    const TranslationTable t = TrainModel1(corpus, 5, d);
    EXPECT_EQ(t.direction(), d);
    for (const auto& row : t.Rows()) {
      double sum = 0.0;
      for (const auto& [e, p] : row.emitted) {
        EXPECT_GT(p, 0.0);
        EXPECT_LE(p, 1.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6) << row.given;
      if (row.given == "NULL") continue;
      const bool source_side = row.given[0] == 's';
      EXPECT_EQ(source_side, d == Direction::kForward) << row.given;
    }
  }
}

TEST(Model1Test, DeterministicAndSerializable) {
  const auto a = TrainModel1(Classic(), 7);
  const auto b = TrainModel1(Classic(), 7);
  EXPECT_EQ(a.Serialize(), b.Serialize());
  const TranslationTable back = TranslationTable::Parse(a.Serialize());
  EXPECT_EQ(back.Serialize(), a.Serialize());
  EXPECT_EQ(back.direction(), Direction::kForward);
}

TEST(Model1Test, RejectsBadCorpus) {
  EXPECT_THROW(TrainModel1({}, 5), std::invalid_argument);
  EXPECT_THROW(TrainModel1({{{"a"}, {}}}, 5), std::invalid_argument);
}

TEST(ViterbiTest, PicksArgmaxAndBreaksTiesLow) {
  TranslationTable t(Direction::kForward);
  t.Set("a", "x", 0.9);
  t.Set("b", "x", 0.1);
  t.Set("NULL", "x", 0.01);
  EXPECT_EQ(ViterbiAlign(t, {{"a", "b"}, {"x"}}).links, (std::vector<std::pair<int, int>>{{0, 0}}));

  TranslationTable tie(Direction::kForward);
  tie.Set("a", "x", 0.4);
  tie.Set("b", "x", 0.4);
  EXPECT_EQ(ViterbiAlign(tie, {{"a", "b"}, {"x"}}).links,
            (std::vector<std::pair<int, int>>{{0, 0}}));
}

TEST(ViterbiTest, NullWinnerLeavesTokenUnlinked) {
  TranslationTable t(Direction::kForward);
  t.Set("NULL", "x", 0.9);
  t.Set("a", "x", 0.1);
  EXPECT_TRUE(ViterbiAlign(t, {{"a"}, {"x"}}).links.empty());
}

TEST(ViterbiTest, ReverseTableIsTransposed) {
  TranslationTable t(Direction::kReverse);
  t.Set("y", "a", 0.9);  // p(source a | target y)
  t.Set("x", "a", 0.1);
  t.Set("x", "b", 0.9);
  const Alignment a = ViterbiAlign(t, {{"a", "b"}, {"x", "y"}});
  EXPECT_EQ(a.links, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
}

TEST(SymmetrizeTest, AgreementIsIdentity) {
  const Alignment a = Make(3, 3, {{0, 0}, {1, 2}, {2, 1}});
  EXPECT_EQ(Symmetrize(a, a), a);
}

TEST(SymmetrizeTest, FinalAndRescuesDisjointLink) {
  const Alignment f = Make(1, 1, {{0, 0}});
  const Alignment b = Make(1, 1, {});
  EXPECT_EQ(Symmetrize(f, b).links, (std::vector<std::pair<int, int>>{{0, 0}}));
}

TEST(SymmetrizeTest, GrowsDiagonalNeighbor) {
  const Alignment f = Make(3, 3, {{0, 0}, {1, 1}, {2, 2}});
  const Alignment b = Make(3, 3, {{0, 0}, {2, 2}});
  const Alignment s = Symmetrize(f, b);
  EXPECT_TRUE(s.Contains(1, 1));
  EXPECT_EQ(LinkSet(s), oracle::GrowDiagFinalAnd(3, 3, LinkSet(f), LinkSet(b)));
}

TEST(SymmetrizeTest, MatchesFixpointOracleAndStaysBetweenIntersectionAndUnion) {
  SeededRng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int ns = 1 + static_cast<int>(rng.Below(7));
    const int nt = 1 + static_cast<int>(rng.Below(7));
    const Alignment f = testing::RandomAlignment(rng, ns, nt, 0.25);
    const Alignment b = testing::RandomAlignment(rng, ns, nt, 0.25);
    const Alignment s = Symmetrize(f, b);
    const auto got = LinkSet(s);
    EXPECT_EQ(got, oracle::GrowDiagFinalAnd(ns, nt, LinkSet(f), LinkSet(b))) << "trial " << trial;
    for (const auto& l : f.links) {
      if (b.Contains(l.first, l.second)) EXPECT_TRUE(got.count(l));
    }
    for (const auto& l : got) EXPECT_TRUE(f.Contains(l.first, l.second) || b.Contains(l.first, l.second));
  }
}

TEST(SymmetrizeTest, LengthMismatchThrows) {
  EXPECT_THROW(Symmetrize(Make(2, 2, {}), Make(2, 3, {})), std::invalid_argument);
}

TEST(PharaohTest, FormatAndParse) {
  const Alignment a = Make(3, 2, {{0, 1}, {2, 0}});
  EXPECT_EQ(FormatPharaoh(a), "0-1 2-0");
  EXPECT_EQ(ParsePharaoh("2-0 0-1", 3, 2), a);
  EXPECT_THROW(ParsePharaoh("5-0", 3, 2), DataError);
  EXPECT_THROW(ParsePharaoh("0:1", 3, 2), DataError);
}

}  // namespace
}  // namespace phrasekit
