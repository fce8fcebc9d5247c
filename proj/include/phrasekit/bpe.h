#ifndef PHRASEKIT_BPE_H_
#define PHRASEKIT_BPE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace phrasekit {

// U+2581 LOWER ONE EIGHTH BLOCK, prefixed to every word.
inline constexpr std::string_view kMetaSymbol = "\xE2\x96\x81";

inline constexpr std::string_view kUnkPiece = "<unk>";
inline constexpr std::string_view kBosPiece = "<s>";
inline constexpr std::string_view kEosPiece = "</s>";
inline constexpr int kUnkId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr std::size_t kNumReserved = 3;

struct TokenSeq {
  std::vector<int> ids;
  std::vector<std::string> surface;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

// Byte-pair encoding model: reserved pieces, every character seen in
// training, then one piece per learned merge (in merge order).
class BpeModel {
 public:
  using Merge = std::pair<std::string, std::string>;

  BpeModel() = default;

  // Builds a model from its parts. Validates the same invariants as Parse().
  BpeModel(std::vector<std::string> pieces, std::vector<Merge> merges,
           std::size_t vocab_size_target,
           std::string meta_symbol = std::string(kMetaSymbol));

  // Whitespace-separated words, each prefixed with the meta symbol, merged
  // in learned order. Characters outside the vocabulary become <unk>.
  TokenSeq Encode(std::string_view text) const;

  // Concatenates pieces, turns each meta symbol into a space and drops the
  // leading space. <s> and </s> are skipped. Throws std::out_of_range for
  // ids outside the vocabulary.
  std::string Decode(const std::vector<int>& ids) const;
  std::string Decode(const TokenSeq& tokens) const { return Decode(tokens.ids); }
  std::string DecodePieces(const std::vector<std::string>& pieces) const;

  std::size_t vocab_size() const { return pieces_.size(); }
  std::size_t vocab_size_target() const { return vocab_size_target_; }
  const std::string& meta_symbol() const { return meta_; }
  const std::vector<Merge>& merges() const { return merges_; }
  const std::vector<std::string>& pieces() const { return pieces_; }

  // -1 if absent.
  int PieceToId(std::string_view piece) const;
  const std::string& IdToPiece(int id) const;

  std::string Serialize() const;
  static BpeModel Parse(std::string_view text);
  void Save(const std::filesystem::path& path) const;
  static BpeModel Load(const std::filesystem::path& path);

 private:
  void Index();
  std::vector<int> EncodeWord(std::string_view word) const;

  std::vector<std::string> pieces_;
  std::vector<Merge> merges_;
  std::size_t vocab_size_target_ = 0;
  std::string meta_ = std::string(kMetaSymbol);

  std::unordered_map<std::string, int> piece_to_id_;
  // (left id, right id) -> (ascending ranks, merged id)
  std::unordered_map<std::uint64_t, std::pair<std::vector<int>, int>> merge_index_;
};

// Number of pieces a character-level model of `lines` needs: the reserved
// pieces plus every distinct character (the meta symbol included).
std::size_t CharacterVocabSize(const std::vector<std::string>& lines);

// Learns merges over `lines` (both corpus sides for a joint vocabulary)
// until the vocabulary reaches `vocab_size` or no adjacent pair occurs
// twice. The most frequent pair wins; ties go to the lexicographically
// smallest (left, right). Throws std::invalid_argument if `lines` is empty
// or `vocab_size` < CharacterVocabSize(lines).
BpeModel TrainBpe(const std::vector<std::string>& lines, std::size_t vocab_size);

// Zero-merge model: every non-space character is its own token.
BpeModel TrainCharacterModel(const std::vector<std::string>& lines);

}  // namespace phrasekit

#endif  // PHRASEKIT_BPE_H_
