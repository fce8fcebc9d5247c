#ifndef PHRASEKIT_NGRAM_LM_H_
#define PHRASEKIT_NGRAM_LM_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phrasekit {

// Backoff n-gram model in log10 space. Probabilities are stored for observed
// n-grams only; everything else comes from the backoff chain
//   p(w | h) = bow(h) * p(w | h without its first token).
// Immutable after construction and safe to query concurrently.
class LanguageModel {
 public:
  // Stored log10 probability for n-grams that are only contexts, as in
  // "<s> <s>". Finite so ARPA files stay readable.
  static constexpr double kImpossible = -99.0;

  LanguageModel() = default;

  int order() const { return order_; }
  std::size_t vocab_size() const { return words_.size(); }
  const std::vector<std::string>& vocab() const { return words_; }

  // Id of `token`, with unknown tokens mapped to <unk>.
  int Index(std::string_view token) const;
  int unk_id() const { return unk_id_; }
  int bos_id() const { return bos_id_; }
  int eos_id() const { return eos_id_; }

  // log10 p(token | context). Only the last order-1 context tokens matter.
  double ConditionalLogprob(std::span<const std::string> context,
                            std::string_view token) const;
  double ConditionalLogprob(std::span<const int> context, int token) const;

  // Sum over the tokens and a final </s>, with order-1 <s> of left padding.
  double SentenceLogprob(std::span<const std::string> tokens) const;

  // Number of stored n-grams of the given length (1-based).
  std::size_t NgramCount(int n) const;

  std::string ToArpa() const;
  static LanguageModel FromArpa(std::string_view text);
  void SaveArpa(const std::filesystem::path& path) const;
  static LanguageModel LoadArpa(const std::filesystem::path& path);

 private:
  friend LanguageModel TrainLm(const std::vector<std::vector<std::string>>&,
                               int);

  struct Entry {
    double logprob = kImpossible;
    double backoff = 0.0;
    bool has_backoff = false;
  };

  static std::uint64_t ChildKey(std::uint32_t parent, int word) {
    return (static_cast<std::uint64_t>(parent) << 32) |
           static_cast<std::uint32_t>(word);
  }

  int AddWord(std::string_view word);
  // Node index for ids[0..n) in level n-1, creating it if asked.
  std::int64_t Find(const int* ids, std::size_t n) const;
  std::uint32_t FindOrCreate(const int* ids, std::size_t n);
  void Reset(int order);

  int order_ = 0;
  int unk_id_ = -1;
  int bos_id_ = -1;
  int eos_id_ = -1;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
  // levels_[k] holds (k+1)-grams. Level 0 is indexed by word id.
  std::vector<std::vector<Entry>> levels_;
  // Level k >= 1: (parent node in level k-1, last word) -> node.
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> children_;
  std::vector<std::vector<std::pair<std::uint32_t, int>>> parents_;
};

// Interpolated Witten-Bell estimation. Each sentence is padded with order-1
// <s> and one </s>. <unk> receives the unigram escape mass. Throws
// std::invalid_argument for an empty corpus or order < 1.
LanguageModel TrainLm(const std::vector<std::vector<std::string>>& sentences,
                      int order = 3);

}  // namespace phrasekit

#endif  // PHRASEKIT_NGRAM_LM_H_
