#ifndef PHRASEKIT_CORPUS_H_
#define PHRASEKIT_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phrasekit {

struct SentencePair {
  std::uint64_t id = 0;
  std::string source;  // classical side
  std::string target;  // modern side

  bool operator==(const SentencePair&) const = default;
};

// Ordered pairs with strictly increasing ids; all text NFC.
struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::string provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// Reads `source<TAB>target` lines. Ids follow file order from 0, both fields
// are trimmed and NFC-normalized. Throws IoError if the file cannot be read
// and DataError (with the 1-based line number) for invalid UTF-8, a missing
// TAB or an empty field.
ParallelCorpus LoadParallel(const std::filesystem::path& path);
ParallelCorpus ParseParallel(std::string_view contents,
                             std::string provenance = "memory");

// Inverse of ParseParallel for already-normalized corpora.
std::string SerializeParallel(const ParallelCorpus& corpus);
void SaveParallel(const ParallelCorpus& corpus,
                  const std::filesystem::path& path);

inline constexpr std::size_t kDefaultMaxSourceChars = 128;
inline constexpr std::size_t kDefaultMaxTargetChars = 1024;

// Keeps pairs whose lengths, in Unicode scalar values, are within both
// (inclusive) limits.
ParallelCorpus FilterByLength(const ParallelCorpus& corpus,
                              std::size_t max_source_chars = kDefaultMaxSourceChars,
                              std::size_t max_target_chars = kDefaultMaxTargetChars);

struct CorpusSplit {
  ParallelCorpus train;
  ParallelCorpus test;
};

// Number of training pairs for a corpus of `n` pairs: floor(n * fraction).
std::size_t TrainSize(std::size_t n, double train_fraction);

// Seeded shuffle, then the first TrainSize(n) pairs go to train. Each half is
// returned in id order so the corpus invariant holds.
CorpusSplit Split(const ParallelCorpus& corpus, double train_fraction,
                  std::uint64_t seed);

}  // namespace phrasekit

#endif  // PHRASEKIT_CORPUS_H_
