#ifndef PHRASEKIT_EVALUATION_H_
#define PHRASEKIT_EVALUATION_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phrasekit {

inline constexpr int kMaxBleuOrder = 4;

struct Smoothing {
  enum class Mode { kNone, kFloor, kAddK };

  Mode mode = Mode::kNone;
  double value = 0.0;

  static Smoothing None() { return {}; }
  static Smoothing Floor(double f = 0.1) { return {Mode::kFloor, f}; }
  static Smoothing AddK(double k = 1.0) { return {Mode::kAddK, k}; }

  // "none", "floor", "floor=0.1", "addk", "addk=1". Throws
  // std::invalid_argument.
  static Smoothing Parse(std::string_view spec);
  std::string ToString() const;
};

// Clipped n-gram statistics, additive over sentences.
struct NgramStats {
  std::array<long long, kMaxBleuOrder> matches{};
  std::array<long long, kMaxBleuOrder> totals{};
  long long hyp_len = 0;
  long long ref_len = 0;

  NgramStats& operator+=(const NgramStats& o);
};

NgramStats CountNgrams(const std::vector<std::string>& hypothesis,
                       const std::vector<std::string>& reference);

struct BleuResult {
  double score = 0.0;  // 0..100
  std::array<double, kMaxBleuOrder> precisions{};
  double brevity_penalty = 1.0;
  long long hyp_len = 0;
  long long ref_len = 0;
  Smoothing smoothing;
};

// Floor replaces a zero match count by f; add-k adds k to matches and totals
// of orders 2..4 when at least one order has no match. Any remaining zero
// precision gives a score of 0, as does a hypothesis with no matching n-gram
// at all.
BleuResult ScoreStats(const NgramStats& stats, Smoothing smoothing = {});

// Throws std::invalid_argument for an empty reference.
BleuResult BleuSentence(const std::vector<std::string>& hypothesis,
                        const std::vector<std::string>& reference,
                        Smoothing smoothing = {});

// Micro-averaged over the corpus. Throws std::invalid_argument on a size
// mismatch, an empty corpus or an empty reference.
BleuResult BleuCorpus(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references,
                      Smoothing smoothing = {});

struct BucketSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double near_zero_fraction = 0.0;
};

struct LengthBucketReport {
  // k-1 non-decreasing cut points; bucket i holds lengths in
  // (boundaries[i-1], boundaries[i]], the last bucket everything above.
  std::vector<double> boundaries;
  std::vector<std::vector<std::size_t>> members;  // indices into the input
  std::vector<std::vector<double>> scores;
  std::vector<BucketSummary> summaries;
  std::vector<std::string> warnings;
};

// Scores at or below this count as "near zero" in bucket summaries.
inline constexpr double kNearZeroBleu = 1.0;

// Equal-frequency buckets with boundaries at the i/k sample quantiles of
// the source lengths (linear interpolation between order statistics).
// Throws std::invalid_argument if k < 2, sizes differ or there are fewer
// items than buckets.
LengthBucketReport BucketByLength(const std::vector<std::size_t>& source_lengths,
                                  const std::vector<double>& scores, int k = 5);

// Sample quantile with linear interpolation, p in [0, 1]. `sorted` must be
// non-empty and ascending.
double Quantile(const std::vector<double>& sorted, double p);

struct SentenceScore {
  std::uint64_t id = 0;
  std::size_t src_len = 0;
  double bleu_std = 0.0;
  double bleu_floor = 0.0;
  double bleu_addk = 0.0;
};

struct EvaluationReport {
  std::vector<SentenceScore> sentences;
  BleuResult corpus;             // micro-averaged, no smoothing
  double mean_sentence_bleu = 0.0;  // mean of bleu_std
  LengthBucketReport buckets;    // over bleu_std; empty if too few sentences
};

// Scores every sentence in all three modes and buckets by source length.
EvaluationReport Evaluate(const std::vector<std::uint64_t>& ids,
                          const std::vector<std::size_t>& source_lengths,
                          const std::vector<std::vector<std::string>>& hypotheses,
                          const std::vector<std::vector<std::string>>& references,
                          int buckets = 5, Smoothing floor = Smoothing::Floor(),
                          Smoothing addk = Smoothing::AddK());

inline constexpr int kDensityBins = 20;

// Writes sentences.csv, buckets.csv (score histogram per bucket) and
// summary.txt into `dir`. Output is byte-for-byte deterministic. Throws
// IoError.
void EmitReport(const EvaluationReport& report, const std::filesystem::path& dir);

std::string SentenceCsv(const EvaluationReport& report);
std::string DensityCsv(const EvaluationReport& report);
std::string SummaryText(const EvaluationReport& report);

}  // namespace phrasekit

#endif  // PHRASEKIT_EVALUATION_H_
