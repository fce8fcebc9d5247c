#ifndef PHRASEKIT_ALIGNMENT_H_
#define PHRASEKIT_ALIGNMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace phrasekit {

inline constexpr std::string_view kNullToken = "NULL";
inline constexpr double kProbabilityFloor = 1e-12;

enum class Direction { kForward, kReverse };

struct TokenizedPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

// Lexical translation probabilities p(emitted | given). For a forward table
// `given` ranges over source tokens plus NULL and `emitted` over target
// tokens; a reverse table swaps the roles.
class TranslationTable {
 public:
  struct Row {
    std::string given;
    std::vector<std::pair<std::string, double>> emitted;
  };

  TranslationTable() = default;
  explicit TranslationTable(Direction direction) : direction_(direction) {}

  Direction direction() const { return direction_; }

  // kProbabilityFloor when the pair is absent.
  double Prob(std::string_view given, std::string_view emitted) const;
  bool Contains(std::string_view given, std::string_view emitted) const;
  void Set(std::string_view given, std::string_view emitted, double prob);

  std::size_t size() const { return probs_.size(); }

  // Rows sorted by given token, entries by descending probability then
  // token.
  std::vector<Row> Rows() const;

  // `given<TAB>emitted<TAB>prob` lines in Rows() order. The first line is
  // `#direction<TAB>fwd|rev`.
  std::string Serialize() const;
  static TranslationTable Parse(std::string_view text);
  void Save(const std::filesystem::path& path) const;
  static TranslationTable Load(const std::filesystem::path& path);

 private:
  int Intern(std::vector<std::string>& names,
             std::unordered_map<std::string, int>& ids, std::string_view s);

  Direction direction_ = Direction::kForward;
  std::vector<std::string> given_names_, emitted_names_;
  std::unordered_map<std::string, int> given_ids_, emitted_ids_;
  std::unordered_map<std::uint64_t, double> probs_;
};

// Per-iteration diagnostics. log_likelihood[i] is the corpus log-likelihood
// (natural log, up to the constant alignment term) under the parameters
// entering iteration i; the last element is the final model.
struct Model1Trace {
  std::vector<double> log_likelihood;
};

// IBM Model 1 EM. Starts uniform over co-occurring pairs, NULL included.
// Zero iterations returns that initialization. Throws std::invalid_argument
// on an empty corpus or a pair with an empty side.
TranslationTable TrainModel1(const std::vector<TokenizedPair>& corpus,
                             int iterations = 10,
                             Direction direction = Direction::kForward,
                             Model1Trace* trace = nullptr);

struct Alignment {
  // (source index, target index), sorted, unique.
  std::vector<std::pair<int, int>> links;
  int source_len = 0;
  int target_len = 0;

  bool Contains(int s, int t) const;
  bool operator==(const Alignment&) const = default;
};

// Links every emitted token to its most probable given token. NULL sits at
// virtual position 0 and, like any other position, wins ties against later
// ones; a NULL link is dropped. For a reverse table the result is
// transposed back to (source, target) order.
Alignment ViterbiAlign(const TranslationTable& table, const TokenizedPair& pair);

// grow-diag-final-and. `backward` must already be in (source, target) order.
// Throws std::invalid_argument if the two alignments disagree on lengths.
Alignment Symmetrize(const Alignment& forward, const Alignment& backward);

// Pharaoh "s-t s-t ..." lines.
std::string FormatPharaoh(const Alignment& alignment);
Alignment ParsePharaoh(std::string_view line, int source_len, int target_len);

}  // namespace phrasekit

#endif  // PHRASEKIT_ALIGNMENT_H_
