#include "phrasekit/bpe.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

constexpr std::string_view kHeaderTag = "#bpe";
constexpr std::string_view kMergesSentinel = "#merges";

std::uint64_t PairKey(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

int KeyLeft(std::uint64_t key) { return static_cast<int>(key >> 32); }
int KeyRight(std::uint64_t key) { return static_cast<int>(key & 0xFFFFFFFFu); }

bool IsReserved(std::string_view piece) {
  return piece == kUnkPiece || piece == kBosPiece || piece == kEosPiece;
}

// Merges every non-overlapping occurrence of (left, right), scanning left to
// right. Returns true if anything changed.
bool ApplyMerge(std::vector<int>& symbols, int left, int right, int merged) {
  bool changed = false;
  std::size_t out = 0;
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == left &&
        symbols[i + 1] == right) {
      symbols[out++] = merged;
      i += 2;
      changed = true;
    } else {
      symbols[out++] = symbols[i++];
    }
  }
  symbols.resize(out);
  return changed;
}

std::vector<std::string> DistinctCharacters(
    const std::vector<std::string>& lines) {
  std::set<std::string> chars;
  for (const auto& line : lines) {
    for (const auto& word : SplitWhitespace(line)) {
      chars.insert(std::string(kMetaSymbol));
      for (auto& c : SplitScalars(word)) chars.insert(std::move(c));
    }
  }
  return {chars.begin(), chars.end()};
}

// Incremental pair statistics for training.
class PairStats {
 public:
  explicit PairStats(const std::vector<std::string>& pieces)
      : order_(Compare{&pieces}) {}

  void Add(int left, int right, std::int64_t delta) {
    const std::uint64_t key = PairKey(left, right);
    auto it = counts_.find(key);
    std::int64_t old = it == counts_.end() ? 0 : it->second;
    if (old > 0 && !blocked_.count(key)) order_.erase({old, key});
    const std::int64_t now = old + delta;
    if (now > 0) {
      counts_[key] = now;
      if (!blocked_.count(key)) order_.insert({now, key});
    } else if (it != counts_.end()) {
      counts_.erase(it);
    }
  }

  // Best unblocked pair, or nullopt-equivalent {0, 0}.
  std::pair<std::int64_t, std::uint64_t> Best() const {
    if (order_.empty()) return {0, 0};
    return *order_.begin();
  }

  void Block(std::uint64_t key) {
    auto it = counts_.find(key);
    if (it != counts_.end()) order_.erase({it->second, key});
    blocked_.insert(key);
  }

 private:
  struct Compare {
    const std::vector<std::string>* pieces;
    bool operator()(const std::pair<std::int64_t, std::uint64_t>& a,
                    const std::pair<std::int64_t, std::uint64_t>& b) const {
      if (a.first != b.first) return a.first > b.first;
      if (a.second == b.second) return false;
      const auto& p = *pieces;
      const auto& al = p[KeyLeft(a.second)];
      const auto& bl = p[KeyLeft(b.second)];
      if (al != bl) return al < bl;
      return p[KeyRight(a.second)] < p[KeyRight(b.second)];
    }
  };

  std::unordered_map<std::uint64_t, std::int64_t> counts_;
  std::set<std::pair<std::int64_t, std::uint64_t>, Compare> order_;
  std::unordered_set<std::uint64_t> blocked_;
};

}  // namespace

BpeModel::BpeModel(std::vector<std::string> pieces, std::vector<Merge> merges,
                   std::size_t vocab_size_target, std::string meta_symbol)
    : pieces_(std::move(pieces)),
      merges_(std::move(merges)),
      vocab_size_target_(vocab_size_target),
      meta_(std::move(meta_symbol)) {
  Index();
}

void BpeModel::Index() {
  if (pieces_.size() < kNumReserved || pieces_[kUnkId] != kUnkPiece ||
      pieces_[kBosId] != kBosPiece || pieces_[kEosId] != kEosPiece) {
    throw DataError("BPE model: reserved pieces missing");
  }
  if (meta_.empty()) throw DataError("BPE model: empty meta symbol");
  if (pieces_.size() > vocab_size_target_) {
    throw DataError("BPE model: vocabulary larger than its target size");
  }
  piece_to_id_.clear();
  merge_index_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw DataError("BPE model: empty piece");
    if (!piece_to_id_.emplace(pieces_[i], static_cast<int>(i)).second) {
      throw DataError("BPE model: duplicate piece '" + pieces_[i] + "'");
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [left, right] = merges_[r];
    const int l = PieceToId(left);
    const int rt = PieceToId(right);
    const int m = PieceToId(left + right);
    if (l < 0 || rt < 0 || m < 0) {
      throw DataError("BPE model: merge " + std::to_string(r) +
                      " refers to unknown pieces");
    }
    auto& entry = merge_index_[PairKey(l, rt)];
    entry.first.push_back(static_cast<int>(r));
    entry.second = m;
  }
}

int BpeModel::PieceToId(std::string_view piece) const {
  auto it = piece_to_id_.find(std::string(piece));
  return it == piece_to_id_.end() ? -1 : it->second;
}

const std::string& BpeModel::IdToPiece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary");
  }
  return pieces_[static_cast<std::size_t>(id)];
}

std::vector<int> BpeModel::EncodeWord(std::string_view word) const {
  std::vector<int> symbols;
  symbols.push_back(PieceToId(meta_));
  for (const auto& c : SplitScalars(word)) symbols.push_back(PieceToId(c));
  for (int& s : symbols) {
    if (s < 0) s = kUnkId;
  }
  // Replays the merge list in order: repeatedly apply the lowest-ranked
  // merge present whose rank is not below the last one applied. A piece
  // reachable through two merges can recreate a pair whose rank has already
  // passed, so the floor matters.
  int floor = 0;
  while (symbols.size() > 1) {
    int best_rank = -1;
    std::uint64_t best_key = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (symbols[i] == kUnkId || symbols[i + 1] == kUnkId) continue;
      const std::uint64_t key = PairKey(symbols[i], symbols[i + 1]);
      auto it = merge_index_.find(key);
      if (it == merge_index_.end()) continue;
      const auto& ranks = it->second.first;
      auto r = std::lower_bound(ranks.begin(), ranks.end(), floor);
      if (r != ranks.end() && (best_rank < 0 || *r < best_rank)) {
        best_rank = *r;
        best_key = key;
      }
    }
    if (best_rank < 0) break;
    ApplyMerge(symbols, KeyLeft(best_key), KeyRight(best_key),
               merge_index_.at(best_key).second);
    floor = best_rank;
  }
  return symbols;
}

TokenSeq BpeModel::Encode(std::string_view text) const {
  TokenSeq seq;
  for (const auto& word : SplitWhitespace(text)) {
    for (int id : EncodeWord(word)) {
      seq.ids.push_back(id);
      seq.surface.push_back(pieces_[static_cast<std::size_t>(id)]);
    }
  }
  return seq;
}

std::string BpeModel::DecodePieces(const std::vector<std::string>& pieces) const {
  std::string joined;
  for (const auto& p : pieces) {
    if (p == kBosPiece || p == kEosPiece) continue;
    joined += p;
  }
  std::string out;
  out.reserve(joined.size());
  for (std::size_t i = 0; i < joined.size();) {
    if (joined.compare(i, meta_.size(), meta_) == 0) {
      out += ' ';
      i += meta_.size();
    } else {
      out += joined[i++];
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

std::string BpeModel::Decode(const std::vector<int>& ids) const {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (int id : ids) pieces.push_back(IdToPiece(id));
  return DecodePieces(pieces);
}

std::string BpeModel::Serialize() const {
  std::string out;
  out += kHeaderTag;
  out += '\t' + std::to_string(vocab_size_target_) + '\t' + meta_ + '\n';
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    out += pieces_[i] + '\t' + std::to_string(i) + '\n';
  }
  out += kMergesSentinel;
  out += '\n';
  for (const auto& [l, r] : merges_) out += l + '\t' + r + '\n';
  return out;
}

BpeModel BpeModel::Parse(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.empty()) throw DataError("BPE model: empty file");

  auto fields = [](std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = line.find('\t', pos);
      out.emplace_back(line.substr(pos, tab - pos));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    return out;
  };

  const auto header = fields(lines[0]);
  if (header.size() != 3 || header[0] != kHeaderTag) {
    throw DataError("BPE model: bad header");
  }
  std::size_t target = 0;
  try {
    target = std::stoul(header[1]);
  } catch (const std::exception&) {
    throw DataError("BPE model: bad vocab size in header");
  }

  std::vector<std::string> pieces;
  std::vector<Merge> merges;
  bool in_merges = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "BPE model line " + std::to_string(i + 1);
    if (!in_merges && lines[i] == kMergesSentinel) {
      in_merges = true;
      continue;
    }
    const auto f = fields(lines[i]);
    if (f.size() != 2) throw DataError(where + ": expected two fields");
    if (in_merges) {
      merges.emplace_back(f[0], f[1]);
    } else {
      if (f[1] != std::to_string(pieces.size())) {
        throw DataError(where + ": ids must be dense and ordered");
      }
      pieces.push_back(f[0]);
    }
  }
  if (!in_merges) throw DataError("BPE model: missing #merges section");
  return BpeModel(std::move(pieces), std::move(merges), target, header[2]);
}

void BpeModel::Save(const std::filesystem::path& path) const {
  WriteFile(path, Serialize());
}

BpeModel BpeModel::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

std::size_t CharacterVocabSize(const std::vector<std::string>& lines) {
  return kNumReserved + DistinctCharacters(lines).size();
}

BpeModel TrainBpe(const std::vector<std::string>& lines,
                  std::size_t vocab_size) {
  if (lines.empty()) throw std::invalid_argument("TrainBpe: no input lines");

  std::vector<std::string> pieces = {std::string(kUnkPiece),
                                     std::string(kBosPiece),
                                     std::string(kEosPiece)};
  for (auto& c : DistinctCharacters(lines)) pieces.push_back(std::move(c));
  if (vocab_size < pieces.size()) {
    throw std::invalid_argument(
        "vocab_size " + std::to_string(vocab_size) +
        " is too small for character coverage (needs " +
        std::to_string(pieces.size()) + ")");
  }
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    ids.emplace(pieces[i], static_cast<int>(i));
  }

  // Distinct words with frequencies, as symbol sequences.
  std::map<std::string, std::int64_t> word_counts;
  for (const auto& line : lines) {
    for (auto& w : SplitWhitespace(line)) ++word_counts[std::move(w)];
  }
  std::vector<std::vector<int>> words;
  std::vector<std::int64_t> freqs;
  words.reserve(word_counts.size());
  for (const auto& [w, n] : word_counts) {
    std::vector<int> symbols = {ids.at(std::string(kMetaSymbol))};
    for (const auto& c : SplitScalars(w)) symbols.push_back(ids.at(c));
    words.push_back(std::move(symbols));
    freqs.push_back(n);
  }

  PairStats stats(pieces);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> where;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      stats.Add(s[i], s[i + 1], freqs[w]);
      auto& occ = where[PairKey(s[i], s[i + 1])];
      if (occ.empty() || occ.back() != w) occ.push_back(w);
    }
  }

  std::vector<BpeModel::Merge> merges;
  while (pieces.size() < vocab_size) {
    const auto [count, key] = stats.Best();
    if (count < 2) break;
    const int left = KeyLeft(key);
    const int right = KeyRight(key);
    std::string merged = pieces[left] + pieces[right];
    if (IsReserved(merged)) {
      stats.Block(key);
      continue;
    }
    int merged_id;
    if (auto it = ids.find(merged); it != ids.end()) {
      merged_id = it->second;
    } else {
      merged_id = static_cast<int>(pieces.size());
      ids.emplace(merged, merged_id);
      pieces.push_back(merged);
    }
    merges.emplace_back(pieces[left], pieces[right]);

    const std::vector<std::size_t> affected = std::move(where[key]);
    where.erase(key);
    for (std::size_t w : affected) {
      auto& s = words[w];
      std::vector<int> before = s;
      if (!ApplyMerge(s, left, right, merged_id)) continue;
      for (std::size_t i = 0; i + 1 < before.size(); ++i) {
        stats.Add(before[i], before[i + 1], -freqs[w]);
      }
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        stats.Add(s[i], s[i + 1], freqs[w]);
        const std::uint64_t k = PairKey(s[i], s[i + 1]);
        if (k == key) continue;
        auto& occ = where[k];
        if (occ.empty() || occ.back() != w) occ.push_back(w);
      }
    }
  }
  return BpeModel(std::move(pieces), std::move(merges), vocab_size);
}

BpeModel TrainCharacterModel(const std::vector<std::string>& lines) {
  return TrainBpe(lines, CharacterVocabSize(lines));
}

}  // namespace phrasekit
