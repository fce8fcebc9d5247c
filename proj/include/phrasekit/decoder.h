#ifndef PHRASEKIT_DECODER_H_
#define PHRASEKIT_DECODER_H_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "phrasekit/ngram_lm.h"
#include "phrasekit/phrase_table.h"

namespace phrasekit {

inline constexpr std::size_t kNumFeatures = 7;

// Feature layout shared by scores, n-best files and weight files:
//   [0] LM log-probability (natural log)
//   [1..4] phrase features, see PhraseFeatures
//   [5] distortion, minus the total jump distance
//   [6] word penalty, minus the number of target tokens
using FeatureVector = std::array<double, kNumFeatures>;

struct DecoderWeights {
  double lm = 0.5;
  std::array<double, kNumPhraseFeatures> phrase = {0.2, 0.2, 0.2, 0.2};
  double distortion = 0.3;
  double word_penalty = -1.0;

  FeatureVector AsVector() const;
  double Dot(const FeatureVector& f) const;
};

struct DecoderParams {
  int stack_size = 100;
  // Maximum jump between consecutive phrases; negative means unlimited.
  // A phrase is also rejected when, after placing it, the leftmost
  // uncovered token lies more than this far behind its end, so every
  // partial hypothesis can still be completed.
  int distortion_limit = 6;
  bool recombine = true;
  // Candidate targets kept per source span, best future-cost estimate
  // first; 0 keeps all.
  int table_limit = 20;
  // Value of each phrase feature for a source token copied through because
  // the table has no single-token entry for it.
  double copy_penalty = -10.0;
};

struct Translation {
  std::vector<std::string> tokens;
  FeatureVector features{};
  double score = 0.0;
};

using NBestList = std::vector<Translation>;

// costs[i][j] (0 <= i < j <= n): optimistic score for covering source tokens
// [i, j). Entries with i >= j are unused.
using FutureCostTable = std::vector<std::vector<double>>;

// Best single option per span (weighted phrase features, word penalty and
// the unigram LM score of its target), combined over splits by
// cost(i,k) = max(direct(i,k), max_j cost(i,j) + cost(j,k)).
FutureCostTable EstimateFutureCost(const std::vector<std::string>& source,
                                   const PhraseTable& table,
                                   const LanguageModel& lm,
                                   const DecoderWeights& weights,
                                   const DecoderParams& params = {});

// Log-linear stack decoder. Holds references; the table and LM must outlive
// it. Const methods are safe to call concurrently.
class Decoder {
 public:
  Decoder(const PhraseTable& table, const LanguageModel& lm,
          DecoderWeights weights = {}, DecoderParams params = {});

  // Best complete translation. Throws std::invalid_argument on an empty
  // source.
  Translation Decode(const std::vector<std::string>& source) const;

  // Up to n distinct translations by descending score; the first equals
  // Decode(). Throws std::invalid_argument if n < 1.
  NBestList NBest(const std::vector<std::string>& source, int n) const;

  const DecoderWeights& weights() const { return weights_; }
  const DecoderParams& params() const { return params_; }

 private:
  const PhraseTable& table_;
  const LanguageModel& lm_;
  DecoderWeights weights_;
  DecoderParams params_;
};

// "id ||| translation ||| f1 .. f7 ||| total".
std::string FormatNBestLine(std::size_t sentence_id, const std::string& text,
                            const Translation& t);

}  // namespace phrasekit

#endif  // PHRASEKIT_DECODER_H_
