#ifndef PHRASEKIT_PHRASE_TABLE_H_
#define PHRASEKIT_PHRASE_TABLE_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phrasekit/alignment.h"

namespace phrasekit {

inline constexpr int kDefaultMaxPhraseLen = 7;
inline constexpr double kLogFeatureFloor = -20.0;
inline constexpr std::size_t kNumPhraseFeatures = 4;

// Half-open token spans of one phrase pair inside its sentence pair.
struct PhraseSpan {
  int src_begin = 0;
  int src_end = 0;
  int tgt_begin = 0;
  int tgt_end = 0;

  auto operator<=>(const PhraseSpan&) const = default;
};

// All span pairs consistent with `alignment` (no link leaves the box, at
// least one link inside) whose sides are at most `max_len` tokens. Unaligned
// words at the borders are absorbed in every combination. Sorted.
std::vector<PhraseSpan> ExtractPhrases(const Alignment& alignment,
                                       int max_len = kDefaultMaxPhraseLen);

// One extracted phrase pair with its links rebased to the phrase.
struct PhraseOccurrence {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::vector<std::pair<int, int>> links;
};

PhraseOccurrence MakeOccurrence(const TokenizedPair& pair,
                                const Alignment& alignment,
                                const PhraseSpan& span);

// Log-features, natural log, clamped to [kLogFeatureFloor, 0]:
//   [0] phi(t|s)  [1] phi(s|t)  [2] lex(t|s)  [3] lex(s|t)
using PhraseFeatures = std::array<double, kNumPhraseFeatures>;

struct PhraseEntry {
  std::vector<std::string> target;
  PhraseFeatures features{};

  bool operator==(const PhraseEntry&) const = default;
};

class PhraseTable {
 public:
  using Map = std::map<std::vector<std::string>, std::vector<PhraseEntry>>;

  // nullptr if the source phrase has no entries.
  const std::vector<PhraseEntry>* Find(const std::vector<std::string>& source) const;

  void Add(std::vector<std::string> source, PhraseEntry entry);

  const Map& entries() const { return entries_; }
  std::size_t num_sources() const { return entries_.size(); }
  std::size_t num_entries() const;
  int max_source_len() const { return max_source_len_; }

  bool operator==(const PhraseTable& o) const { return entries_ == o.entries_; }

  // Binary layout: "PBT1", u32 version, u64 payload size, payload, u32
  // CRC-32 of the payload. Integers little-endian, features as IEEE-754
  // doubles.
  std::string SerializeBinary() const;
  static PhraseTable ParseBinary(std::string_view bytes);
  void SaveBinary(const std::filesystem::path& path) const;
  static PhraseTable LoadBinary(const std::filesystem::path& path);

  // Debug text: "src ||| tgt ||| f1 f2 f3 f4".
  std::string ToText() const;

 private:
  Map entries_;
  int max_source_len_ = 0;
};

// Accumulates occurrences; lexical weights are computed from the Model 1
// tables as each occurrence arrives, keeping the best over occurrences.
class PhraseTableBuilder {
 public:
  PhraseTableBuilder(const TranslationTable& forward,
                     const TranslationTable& reverse);

  void Add(const PhraseOccurrence& occurrence);
  std::size_t occurrences() const { return occurrences_; }

  // Throws std::invalid_argument if nothing was added.
  PhraseTable Build() const;

 private:
  struct Stats {
    long long count = 0;
    double lex_ts = 0.0;
    double lex_st = 0.0;
  };

  const TranslationTable& forward_;
  const TranslationTable& reverse_;
  std::map<std::pair<std::vector<std::string>, std::vector<std::string>>, Stats> pairs_;
  std::size_t occurrences_ = 0;
};

// lex(t|s): per target word, the mean of p(t|s) over its linked source
// words, or p(t|NULL) if unlinked; multiplied over the target phrase.
double LexicalWeight(const std::vector<std::string>& given,
                     const std::vector<std::string>& emitted,
                     const std::vector<std::pair<int, int>>& links_given_emitted,
                     const TranslationTable& table);

PhraseTable BuildTable(const std::vector<PhraseOccurrence>& occurrences,
                       const TranslationTable& forward,
                       const TranslationTable& reverse);

}  // namespace phrasekit

#endif  // PHRASEKIT_PHRASE_TABLE_H_
