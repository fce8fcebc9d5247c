// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/alignment_oracle.h"
#include "oracles/bleu_oracle.h"
#include "oracles/decoder_oracle.h"
#include "oracles/lm_oracle.h"
#include "oracles/prompt_oracle.h"
#include "phrasekit/alignment.h"
#include "phrasekit/bpe.h"
#include "phrasekit/corpus.h"
#include "phrasekit/decoder.h"
#include "phrasekit/evaluation.h"
#include "phrasekit/hashing.h"
#include "phrasekit/icl.h"
#include "phrasekit/ngram_lm.h"
#include "phrasekit/phrase_table.h"
#include "phrasekit/pipeline.h"
#include "phrasekit/unicode.h"
#include "support/mock_endpoint.h"
#include "support/synthetic.h"

namespace phrasekit {
namespace {

namespace fs = std::filesystem;
using Tokens = std::vector<std::string>;

// Collects failed checks for one criterion.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void Note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }

  bool failed() const { return failed_; }
  std::string Summary() const {
    std::string out = notes_;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("failed: ") + f;
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. Split sizes.
void SplitFidelity(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  constexpr std::size_t kLines = 252773;
  constexpr std::size_t kTrain = 202218;
  testing::TempDir dir;
  {
    std::string tsv;
    tsv.reserve(kLines * 24);
    for (std::size_t i = 0; i < kLines; ++i) {
      tsv += "src " + std::to_string(i) + "\ttgt " + std::to_string(i) + "\n";
    }
    WriteFile(dir / "corpus.tsv", tsv);
  }
  const ParallelCorpus corpus = LoadParallel(dir / "corpus.tsv");
  c.Expect(corpus.size() == kLines, "corpus size");
  const CorpusSplit split = Split(corpus, static_cast<double>(kTrain) / kLines, 42);
  c.Expect(split.train.size() == kTrain, "train size " + std::to_string(split.train.size()));
  c.Expect(split.test.size() == kLines - kTrain, "test size " + std::to_string(split.test.size()));
  std::vector<char> seen(kLines, 0);
  for (const auto* half : {&split.train, &split.test}) {
    for (const auto& p : half->pairs) ++seen[p.id];
  }
  bool partition = true;
  for (char s : seen) partition = partition && s == 1;
  c.Expect(partition, "halves partition the corpus");
  c.Note("train " + std::to_string(split.train.size()) + ", test " +
         std::to_string(split.test.size()));
  const double t = Seconds(start);
  c.Expect(t < 5.0, "runtime " + Fmt("%.2fs", t) + " >= 5s");
}

// 2. BLEU reference values.
void BleuOracles(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  // Reference values from sacreBLEU 2.x sentence_bleu, tokenize "none".
  constexpr double kAddK = 65.80370064762461;
  constexpr double kFloor = 39.76353643835254;
  const Tokens hyp = {"a", "b", "c", "d"};
  const Tokens ref = {"a", "b", "c", "e"};
  c.Expect(BleuSentence(hyp, hyp).score == 100.0, "bleu(x, x) == 100");
  const double none = BleuSentence(hyp, ref).score;
  const double addk = BleuSentence(hyp, ref, Smoothing::AddK(1.0)).score;
  const double floor = BleuSentence(hyp, ref, Smoothing::Floor(0.1)).score;
  c.Expect(std::fabs(none) <= 0.05, "none " + Fmt("%.4f", none));
  c.Expect(std::fabs(addk - kAddK) <= 0.05, "add-k " + Fmt("%.4f", addk));
  c.Expect(std::fabs(floor - kFloor) <= 0.05, "floor " + Fmt("%.4f", floor));
  c.Note("none " + Fmt("%.4f", none) + ", add-k " + Fmt("%.4f", addk) + ", floor " +
         Fmt("%.4f", floor));
  const double t = Seconds(start);
  c.Expect(t < 1.0, "runtime " + Fmt("%.2fs", t) + " >= 1s");
}

// 3. Model 1 on the two-pair corpus.
void Model1Em(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<TokenizedPair> corpus = {{{"the", "house"}, {"das", "haus"}},
                                             {{"the"}, {"das"}}};
  Model1Trace trace;
  const TranslationTable t = TrainModel1(corpus, 20, Direction::kForward, &trace);
  const double das = t.Prob("the", "das");
  const double haus = t.Prob("house", "haus");
  c.Expect(das > 0.99, "p(das|the) = " + Fmt("%.6f", das) + " <= 0.99");
  c.Expect(haus > 0.99, "p(haus|house) = " + Fmt("%.6f", haus) + " <= 0.99");
  bool monotone = true;
  for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
    monotone = monotone && trace.log_likelihood[i] >= trace.log_likelihood[i - 1] - 1e-9;
  }
  c.Expect(monotone, "log-likelihood decreased");
  const oracle::Model1Result o =
      oracle::Model1({{{"the", "house"}, {"das", "haus"}}, {{"the"}, {"das"}}}, 20);
  double worst = 0.0;
  for (const auto& [key, p] : o.prob) {
    worst = std::max(worst, std::fabs(t.Prob(key.first, key.second) - p));
  }
  c.Expect(worst < 1e-12, "differs from naive EM by " + Fmt("%.3g", worst));
  c.Note("p(das|the) " + Fmt("%.6f", das) + ", p(haus|house) " + Fmt("%.6f", haus) +
         ", naive EM agrees to " + Fmt("%.1e", worst));
  const double secs = Seconds(start);
  c.Expect(secs < 1.0, "runtime " + Fmt("%.2fs", secs) + " >= 1s");
}

// 4. Decoder against exhaustive search.
void DecoderOptimality(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(4);
  DecoderParams params;
  params.stack_size = 10000;
  params.distortion_limit = -1;
  const DecoderWeights weights;
  int matched = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = testing::RandomDecoderInstance(rng, 6, 20, 10);
    const Translation got = Decoder(inst.table, inst.lm, weights, params).Decode(inst.source);
    const auto want = oracle::ExhaustiveDecode(inst.source, inst.table, inst.lm, weights,
                                               params.copy_penalty);
    const double diff = std::fabs(got.score - want.score);
    worst = std::max(worst, diff);
    if (diff <= 1e-9) ++matched;
  }
  c.Expect(matched == 100, std::to_string(100 - matched) + " instance(s) differ");
  c.Note(std::to_string(matched) + "/100 match, max |diff| " + Fmt("%.1e", worst));
  const double t = Seconds(start);
  c.Expect(t < 60.0, "runtime " + Fmt("%.2fs", t) + " >= 60s");
}

// 5. Phrase extraction against brute-force enumeration.
void PhraseExtraction(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(5);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    const int ns = 1 + static_cast<int>(rng.Below(8));
    const int nt = 1 + static_cast<int>(rng.Below(8));
    const Alignment a = testing::RandomAlignment(rng, ns, nt, 0.05 + 0.4 * rng.Unit());
    std::set<std::vector<int>> got;
    for (const auto& s : ExtractPhrases(a, 8)) {
      got.insert({s.src_begin, s.src_end, s.tgt_begin, s.tgt_end});
    }
    const oracle::Links links(a.links.begin(), a.links.end());
    if (got == oracle::ConsistentBoxes(ns, nt, links, 8)) ++equal;
  }
  c.Expect(equal == 1000, std::to_string(1000 - equal) + " instance(s) differ");
  c.Note(std::to_string(equal) + "/1000 equal");
  const double t = Seconds(start);
  c.Expect(t < 10.0, "runtime " + Fmt("%.2fs", t) + " >= 10s");
}

// 6. LM normalization and ARPA round trip.
void LmContracts(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(6);
  std::vector<Tokens> corpus;
  for (int i = 0; i < 500; ++i) corpus.push_back(testing::RandomTokens(rng, 1, 12, 50));
  const LanguageModel lm = TrainLm(corpus, 3);
  double worst_norm = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tokens ctx = testing::RandomTokens(rng, 0, 2, 70);
    double total = 0.0;
    for (const auto& w : lm.vocab()) total += std::pow(10.0, lm.ConditionalLogprob(ctx, w));
    worst_norm = std::max(worst_norm, std::fabs(total - 1.0));
  }
  c.Expect(worst_norm <= 1e-6, "normalization off by " + Fmt("%.3g", worst_norm));

  const LanguageModel back = LanguageModel::FromArpa(lm.ToArpa());
  const oracle::WittenBell wb(corpus, 3);
  double worst_trip = 0.0;
  double worst_oracle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Tokens s = testing::RandomTokens(rng, 0, 15, 60);
    const double a = lm.SentenceLogprob(s);
    worst_trip = std::max(worst_trip, std::fabs(a - back.SentenceLogprob(s)));
    worst_oracle = std::max(worst_oracle, std::fabs(a - wb.SentenceLog10(s)));
  }
  c.Expect(worst_trip < 1e-9, "ARPA round trip changed a score by " + Fmt("%.3g", worst_trip));
  c.Expect(worst_oracle < 1e-9, "differs from recursive estimate by " + Fmt("%.3g", worst_oracle));
  c.Note("max |sum - 1| " + Fmt("%.1e", worst_norm) + ", round trip " + Fmt("%.1e", worst_trip) +
         ", vs recursive " + Fmt("%.1e", worst_oracle));
  const double t = Seconds(start);
  c.Expect(t < 30.0, "runtime " + Fmt("%.2fs", t) + " >= 30s");
}

// 7. BPE round trip, determinism and character mode.
void BpeContracts(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(7);
  std::vector<std::string> lines;
  for (int i = 0; i < 2000; ++i) {
    std::string line;
    const int words = 1 + static_cast<int>(rng.Below(10));
    for (int w = 0; w < words; ++w) {
      if (w) line += ' ';
      line += testing::RandomWord(rng, 1, 8, 12);
    }
    lines.push_back(line);
  }
  const BpeModel m = TrainBpe(lines, 300);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    const int words = 1 + static_cast<int>(rng.Below(12));
    for (int w = 0; w < words; ++w) {
      if (w) text += ' ';
      text += testing::RandomWord(rng, 1, 10, 12);
    }
    if (m.Decode(m.Encode(text)) == text) ++round_trips;
  }
  c.Expect(round_trips == 1000, std::to_string(1000 - round_trips) + " text(s) changed");

  testing::TempDir dir;
  TrainBpe(lines, 300).Save(dir / "a.model");
  TrainBpe(lines, 300).Save(dir / "b.model");
  const bool identical = ReadFile(dir / "a.model") == ReadFile(dir / "b.model");
  c.Expect(identical, "model files differ between runs");

  // Character mode: one token per non-space character, plus one word
  // boundary marker before each word.
  const std::vector<std::string> hanja = {"太祖 康獻大王", "大王 即位", "乙丑 朔"};
  const BpeModel chars = TrainCharacterModel(hanja);
  bool per_char = chars.merges().empty();
  for (const auto& line : hanja) {
    std::size_t non_space = 0;
    for (const auto& ch : SplitScalars(line)) non_space += ch != " ";
    std::size_t content = 0;
    for (const auto& piece : chars.Encode(line).surface) {
      if (piece == kMetaSymbol) continue;
      ++content;
      per_char = per_char && SplitScalars(piece).size() == 1;
    }
    per_char = per_char && content == non_space;
  }
  c.Expect(per_char, "character mode is not one token per character");
  c.Note(std::to_string(round_trips) + "/1000 round trips, model files " +
         (identical ? "identical" : "differ") + ", character mode " + (per_char ? "ok" : "wrong"));
  const double t = Seconds(start);
  c.Expect(t < 30.0, "runtime " + Fmt("%.2fs", t) + " >= 30s");
}

double HeldOutBleu(const PipelineConfig& config) {
  RunPipeline(config, DefaultStages(config));
  const WorkLayout w(config.workdir);
  const ParallelCorpus test = LoadParallel(w.test_tsv);
  std::istringstream in(ReadFile(w.hyp));
  std::vector<Tokens> hyps, refs;
  for (const auto& p : test.pairs) {
    std::string line;
    std::getline(in, line);
    hyps.push_back(SplitWhitespace(line));
    refs.push_back(SplitWhitespace(p.target));
  }
  return BleuCorpus(hyps, refs).score;
}

// 8. End-to-end cipher benchmark.
void EndToEnd(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir dir;
  const testing::CipherSpec spec;
  const ParallelCorpus corpus = testing::CipherCorpus(spec);
  SaveParallel(corpus, dir / "cipher.tsv");

  PipelineConfig config;
  config.corpus = dir / "cipher.tsv";
  config.train_fraction = 0.9;
  config.vocab_size = 500;
  config.seed = 1;
  config.workdir = dir / "bpe";
  const double bpe = HeldOutBleu(config);
  const std::size_t held_out = LoadParallel(WorkLayout(config.workdir).test_tsv).size();

  config.char_mode = true;
  config.workdir = dir / "char";
  const double chars = HeldOutBleu(config);

  c.Expect(held_out == 500, "held-out size " + std::to_string(held_out));
  c.Expect(bpe >= 90.0, "BPE BLEU " + Fmt("%.2f", bpe) + " < 90");
  c.Expect(chars < bpe, "character BLEU not below BPE");
  c.Note("BPE-500 BLEU " + Fmt("%.2f", bpe) + ", character BLEU " + Fmt("%.2f", chars) + " on " +
         std::to_string(held_out) + " held-out pairs");
  const double t = Seconds(start);
  c.Expect(t < 300.0, "runtime " + Fmt("%.1fs", t) + " >= 300s");
}

// 9. Prompt assembly and endpoint protocol.
void IclFidelity(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(9);
  int equal = 0;
  bool counts = true;
  for (int i = 0; i < 100; ++i) {
    PromptTemplate t;
    t.pattern = testing::RandomWord(rng, 0, 4) + "{src}" + testing::RandomWord(rng, 0, 4) +
                "{tgt}" + testing::RandomWord(rng, 0, 4);
    t.separator = "\n";
    std::vector<Exemplar> ex;
    std::vector<std::pair<std::string, std::string>> plain;
    for (int k = 0; k < 20; ++k) {
      ex.push_back({testing::RandomWord(rng, 1, 12), testing::RandomWord(rng, 1, 12)});
      plain.emplace_back(ex.back().x, ex.back().y);
    }
    const std::string test = testing::RandomWord(rng, 1, 12);
    const std::string prompt = BuildPrompt(t, ex, test);
    if (prompt == oracle::AssemblePrompt(t.pattern, t.separator, plain, test)) ++equal;
    // 20 exemplar clauses and the cut test clause.
    std::vector<std::string> clauses;
    std::istringstream in(prompt);
    for (std::string line; std::getline(in, line);) clauses.push_back(line);
    counts = counts && clauses.size() == 21;
    for (int k = 0; k < 20 && counts; ++k) {
      counts = clauses[k] == RenderClause(t, ex[k].x, ex[k].y);
    }
    const std::size_t src_at = t.pattern.find("{src}");
    const std::size_t tgt_at = t.pattern.find("{tgt}");
    counts = counts && clauses[20] == t.pattern.substr(0, src_at) + test +
                                          t.pattern.substr(src_at + 5, tgt_at - src_at - 5);
  }
  const double prompt_secs = Seconds(start);
  c.Expect(equal == 100, std::to_string(100 - equal) + " prompt(s) differ from naive assembly");
  c.Expect(counts, "clause layout wrong");
  c.Expect(prompt_secs < 1.0, "prompt runtime " + Fmt("%.2fs", prompt_secs) + " >= 1s");

  testing::MockEndpoint server;
  EndpointConfig endpoint;
  endpoint.base_url = server.base_url();
  endpoint.model = "mock";
  endpoint.token_env = "PHRASEKIT_ACCEPTANCE_TOKEN_UNSET";
  endpoint.max_concurrency = 4;
  std::vector<std::string> prompts;
  for (int i = 0; i < 1200; ++i) prompts.push_back("x = y\nq" + std::to_string(i) + " =");
  const IclResult result = RunIcl(endpoint, prompts, 1000);
  bool ordered = result.hypotheses.size() == 1000;
  for (std::size_t i = 0; ordered && i < result.hypotheses.size(); ++i) {
    ordered = result.hypotheses[i] == "re:q" + std::to_string(i) + " =";
  }
  c.Expect(ordered, "responses out of order or wrong count");
  c.Expect(server.requests() == 1000, "endpoint saw " + std::to_string(server.requests()) +
                                          " requests");
  c.Note(std::to_string(equal) + "/100 prompts equal (" + Fmt("%.3fs", prompt_secs) + "), " +
         std::to_string(result.hypotheses.size()) + " of 1200 prompts sent in order");
}

// 10. Smoothing dominance.
void SmoothingDominance(Checker& c) {
  const auto start = std::chrono::steady_clock::now();
  SeededRng rng(10);
  int dominated = 0;
  int positive = 0;
  int coincide = 0;
  for (int i = 0; i < 1000; ++i) {
    const Tokens r = testing::RandomTokens(rng, 1, 12, 5);
    Tokens h = testing::RandomTokens(rng, 1, 12, 5);
    // Every other hypothesis is a one-token edit of its reference, so many
    // pairs have all four precisions positive.
    if (i % 2) {
      h = r;
      h[rng.Below(h.size())] = "w" + std::to_string(rng.Below(5));
    }
    const BleuResult s = BleuSentence(h, r);
    const double f = BleuSentence(h, r, Smoothing::Floor()).score;
    const double k = BleuSentence(h, r, Smoothing::AddK()).score;
    if (f >= s.score && k >= s.score) ++dominated;
    bool all_positive = true;
    for (double p : s.precisions) all_positive = all_positive && p > 0.0;
    if (all_positive) {
      ++positive;
      if (f == s.score && k == s.score) ++coincide;
    }
  }
  c.Expect(dominated == 1000, std::to_string(1000 - dominated) + " pair(s) not dominated");
  c.Expect(coincide == positive, std::to_string(positive - coincide) + " pair(s) diverge");
  c.Expect(positive > 0, "no pair with all precisions positive");
  c.Note(std::to_string(dominated) + "/1000 dominated, " + std::to_string(coincide) + "/" +
         std::to_string(positive) + " coincide");
  const double t = Seconds(start);
  c.Expect(t < 5.0, "runtime " + Fmt("%.2fs", t) + " >= 5s");
}

}  // namespace
}  // namespace phrasekit

int main() {
  using phrasekit::Checker;
  const std::vector<std::pair<std::string, std::function<void(Checker&)>>> criteria = {
      {"split fidelity", phrasekit::SplitFidelity},
      {"BLEU oracles", phrasekit::BleuOracles},
      {"Model 1 EM", phrasekit::Model1Em},
      {"decoder optimality", phrasekit::DecoderOptimality},
      {"phrase extraction", phrasekit::PhraseExtraction},
      {"LM contracts", phrasekit::LmContracts},
      {"BPE contracts", phrasekit::BpeContracts},
      {"end-to-end benchmark", phrasekit::EndToEnd},
      {"ICL prompt fidelity", phrasekit::IclFidelity},
      {"smoothing dominance", phrasekit::SmoothingDominance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.Expect(false, std::string("exception: ") + e.what());
    }
    const double t = phrasekit::Seconds(start);
    std::printf("%s %2zu %s [%.2fs] %s\n", c.failed() ? "FAIL" : "PASS", i + 1,
                criteria[i].first.c_str(), t, c.Summary().c_str());
    std::fflush(stdout);
    failed += c.failed();
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
