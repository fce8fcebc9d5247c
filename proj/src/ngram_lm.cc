#include "phrasekit/ngram_lm.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "phrasekit/bpe.h"
#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void LanguageModel::Reset(int order) {
  order_ = order;
  words_.clear();
  ids_.clear();
  levels_.assign(static_cast<std::size_t>(order), {});
  children_.assign(static_cast<std::size_t>(order), {});
  parents_.assign(static_cast<std::size_t>(order), {});
  unk_id_ = AddWord(kUnkPiece);
  bos_id_ = AddWord(kBosPiece);
  eos_id_ = AddWord(kEosPiece);
}

int LanguageModel::AddWord(std::string_view word) {
  auto [it, inserted] =
      ids_.emplace(std::string(word), static_cast<int>(words_.size()));
  if (inserted) {
    words_.emplace_back(word);
    levels_[0].emplace_back();
  }
  return it->second;
}

int LanguageModel::Index(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_id_ : it->second;
}

std::int64_t LanguageModel::Find(const int* ids, std::size_t n) const {
  std::int64_t node = ids[0];
  for (std::size_t k = 1; k < n; ++k) {
    const auto& table = children_[k];
    auto it = table.find(ChildKey(static_cast<std::uint32_t>(node), ids[k]));
    if (it == table.end()) return -1;
    node = it->second;
  }
  return node;
}

std::uint32_t LanguageModel::FindOrCreate(const int* ids, std::size_t n) {
  auto node = static_cast<std::uint32_t>(ids[0]);
  for (std::size_t k = 1; k < n; ++k) {
    auto [it, inserted] = children_[k].emplace(
        ChildKey(node, ids[k]), static_cast<std::uint32_t>(levels_[k].size()));
    if (inserted) {
      levels_[k].emplace_back();
      parents_[k].emplace_back(node, ids[k]);
    }
    node = it->second;
  }
  return node;
}

double LanguageModel::ConditionalLogprob(std::span<const int> context,
                                         int token) const {
  const std::size_t n =
      std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  const int* ctx = context.data() + (context.size() - n);
  int buf[16];
  std::vector<int> heap;
  int* gram = buf;
  if (n + 1 > std::size(buf)) {
    heap.resize(n + 1);
    gram = heap.data();
  }
  double backoff = 0.0;
  for (std::size_t k = n + 1; k-- > 0;) {
    // n-gram = last k context tokens + token
    std::copy(ctx + (n - k), ctx + n, gram);
    gram[k] = token;
    const std::int64_t node = Find(gram, k + 1);
    if (node >= 0) return backoff + levels_[k][static_cast<std::size_t>(node)].logprob;
    if (k > 0) {
      const std::int64_t c = Find(gram, k);
      if (c >= 0) {
        const Entry& e = levels_[k - 1][static_cast<std::size_t>(c)];
        if (e.has_backoff) backoff += e.backoff;
      }
    }
  }
  // Unreachable for in-range tokens: every word has a unigram entry.
  throw std::out_of_range("LM token id out of range");
}

double LanguageModel::ConditionalLogprob(std::span<const std::string> context,
                                         std::string_view token) const {
  std::vector<int> ids;
  ids.reserve(context.size());
  for (const auto& c : context) ids.push_back(Index(c));
  return ConditionalLogprob(ids, Index(token));
}

double LanguageModel::SentenceLogprob(std::span<const std::string> tokens) const {
  std::vector<int> ids(static_cast<std::size_t>(order_ - 1), bos_id_);
  for (const auto& t : tokens) ids.push_back(Index(t));
  ids.push_back(eos_id_);
  double total = 0.0;
  for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < ids.size(); ++i) {
    total += ConditionalLogprob(std::span<const int>(ids.data(), i), ids[i]);
  }
  return total;
}

std::size_t LanguageModel::NgramCount(int n) const {
  if (n < 1 || n > order_) return 0;
  return levels_[static_cast<std::size_t>(n - 1)].size();
}

std::string LanguageModel::ToArpa() const {
  // Word-id sequence of every node; parents always precede their children.
  std::vector<std::vector<std::vector<int>>> seqs(static_cast<std::size_t>(order_));
  for (std::size_t w = 0; w < words_.size(); ++w) {
    seqs[0].push_back({static_cast<int>(w)});
  }
  for (std::size_t k = 1; k < static_cast<std::size_t>(order_); ++k) {
    seqs[k].reserve(levels_[k].size());
    for (const auto& [parent, word] : parents_[k]) {
      std::vector<int> seq = seqs[k - 1][parent];
      seq.push_back(word);
      seqs[k].push_back(std::move(seq));
    }
  }

  auto as_words = [&](const std::vector<int>& seq) {
    std::vector<std::string> out;
    for (int id : seq) out.push_back(words_[static_cast<std::size_t>(id)]);
    return out;
  };

  std::string out = "\\data\\\n";
  for (int k = 0; k < order_; ++k) {
    out += "ngram " + std::to_string(k + 1) + "=" +
           std::to_string(levels_[static_cast<std::size_t>(k)].size()) + "\n";
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(order_); ++k) {
    out += "\n\\" + std::to_string(k + 1) + "-grams:\n";
    std::vector<std::pair<std::vector<std::string>, std::uint32_t>> rows;
    rows.reserve(seqs[k].size());
    for (std::size_t node = 0; node < seqs[k].size(); ++node) {
      rows.push_back({as_words(seqs[k][node]), static_cast<std::uint32_t>(node)});
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [ws, node] : rows) {
      const Entry& e = levels_[k][node];
      out += FormatDouble(e.logprob);
      out += '\t';
      out += Join(ws, " ");
      if (e.has_backoff) {
        out += '\t';
        out += FormatDouble(e.backoff);
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

LanguageModel LanguageModel::FromArpa(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }

  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < lines.size() && TrimAscii(lines[i]).empty()) ++i;
  };
  skip_blank();
  if (i >= lines.size() || TrimAscii(lines[i]) != "\\data\\") {
    throw DataError("ARPA: missing \\data\\ header");
  }
  ++i;
  std::vector<std::size_t> declared;
  for (; i < lines.size(); ++i) {
    const auto line = TrimAscii(lines[i]);
    if (line.empty()) continue;
    if (line.substr(0, 6) != "ngram ") break;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("ARPA: bad ngram count line");
    const int n = static_cast<int>(
        ParseDouble(TrimAscii(line.substr(6, eq - 6)), "ARPA header"));
    const auto count = static_cast<std::size_t>(
        ParseDouble(TrimAscii(line.substr(eq + 1)), "ARPA header"));
    if (n != static_cast<int>(declared.size()) + 1) {
      throw DataError("ARPA: ngram counts out of order");
    }
    declared.push_back(count);
  }
  if (declared.empty()) throw DataError("ARPA: no ngram counts");

  LanguageModel lm;
  lm.Reset(static_cast<int>(declared.size()));
  // Reserved words are re-added below if the file lists them; entries start
  // impossible until then.
  std::vector<std::size_t> seen(declared.size(), 0);
  for (std::size_t k = 0; k < declared.size(); ++k) {
    skip_blank();
    const std::string header = "\\" + std::to_string(k + 1) + "-grams:";
    if (i >= lines.size() || TrimAscii(lines[i]) != header) {
      throw DataError("ARPA: expected " + header);
    }
    ++i;
    for (; i < lines.size(); ++i) {
      const auto line = TrimAscii(lines[i]);
      if (line.empty()) break;
      if (line.front() == '\\') break;
      const std::string where = "ARPA line " + std::to_string(i + 1);
      const auto fields = SplitWhitespace(line);
      if (fields.size() != k + 2 && fields.size() != k + 3) {
        throw DataError(where + ": wrong field count");
      }
      std::vector<int> ids;
      for (std::size_t f = 1; f <= k + 1; ++f) {
        ids.push_back(k == 0 ? lm.AddWord(fields[f]) : lm.Index(fields[f]));
        if (k > 0 && lm.words_[static_cast<std::size_t>(ids.back())] != fields[f]) {
          throw DataError(where + ": word '" + fields[f] + "' has no unigram");
        }
      }
      if (k > 0 && lm.Find(ids.data(), k) < 0) {
        throw DataError(where + ": n-gram prefix is not listed");
      }
      const std::uint32_t node = lm.FindOrCreate(ids.data(), ids.size());
      Entry& e = lm.levels_[k][node];
      e.logprob = ParseDouble(fields[0], where);
      if (fields.size() == k + 3) {
        e.backoff = ParseDouble(fields[k + 2], where);
        e.has_backoff = true;
      }
      ++seen[k];
    }
    if (seen[k] != declared[k]) {
      throw DataError("ARPA: " + std::to_string(k + 1) + "-gram count mismatch");
    }
  }
  skip_blank();
  if (i >= lines.size() || TrimAscii(lines[i]) != "\\end\\") {
    throw DataError("ARPA: missing \\end\\");
  }
  return lm;
}

void LanguageModel::SaveArpa(const std::filesystem::path& path) const {
  WriteFile(path, ToArpa());
}

LanguageModel LanguageModel::LoadArpa(const std::filesystem::path& path) {
  return FromArpa(ReadFile(path));
}

LanguageModel TrainLm(const std::vector<std::vector<std::string>>& sentences,
                      int order) {
  if (order < 1) throw std::invalid_argument("LM order must be >= 1");
  if (sentences.empty()) throw std::invalid_argument("LM training corpus is empty");

  LanguageModel lm;
  lm.Reset(order);
  const auto levels = static_cast<std::size_t>(order);
  std::vector<std::vector<std::int64_t>> counts(levels);

  std::vector<int> ids;
  for (const auto& sentence : sentences) {
    ids.assign(levels - 1, lm.bos_id_);
    for (const auto& t : sentence) ids.push_back(lm.AddWord(t));
    ids.push_back(lm.eos_id_);
    for (std::size_t i = levels - 1; i < ids.size(); ++i) {
      for (std::size_t k = 1; k <= levels; ++k) {
        const std::uint32_t node = lm.FindOrCreate(&ids[i + 1 - k], k);
        auto& c = counts[k - 1];
        if (c.size() <= node) c.resize(lm.levels_[k - 1].size(), 0);
        ++c[node];
      }
    }
  }
  for (std::size_t k = 0; k < levels; ++k) counts[k].resize(lm.levels_[k].size(), 0);

  // Per-context totals c(h) and distinct-follower counts T(h). Contexts of
  // level-k n-grams are nodes of level k-1.
  std::vector<std::vector<std::int64_t>> hist_total(levels), hist_types(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    hist_total[k].assign(lm.levels_[k].size(), 0);
    hist_types[k].assign(lm.levels_[k].size(), 0);
  }
  for (std::size_t k = 1; k < levels; ++k) {
    for (std::size_t node = 0; node < lm.levels_[k].size(); ++node) {
      const std::int64_t c = counts[k][node];
      if (c == 0) continue;
      const std::uint32_t parent = lm.parents_[k][node].first;
      hist_total[k - 1][parent] += c;
      hist_types[k - 1][parent] += 1;
    }
  }

  // Unigrams: the empty context's escape mass goes to <unk>.
  std::int64_t total = 0;
  std::int64_t types = 0;
  for (std::int64_t c : counts[0]) {
    total += c;
    types += c > 0;
  }
  const double denom = static_cast<double>(total + types);
  for (std::size_t w = 0; w < lm.levels_[0].size(); ++w) {
    auto& e = lm.levels_[0][w];
    double numer = static_cast<double>(counts[0][w]);
    if (static_cast<int>(w) == lm.unk_id_) numer += static_cast<double>(types);
    e.logprob = numer > 0 ? std::log10(numer / denom) : LanguageModel::kImpossible;
  }

  // Higher orders interpolate with the (already final) lower-order estimate
  // of the suffix n-gram.
  std::vector<int> suffix;
  for (std::size_t k = 1; k < levels; ++k) {
    for (std::size_t node = 0; node < lm.levels_[k].size(); ++node) {
      auto& e = lm.levels_[k][node];
      const std::int64_t c = counts[k][node];
      if (c == 0) {
        e.logprob = LanguageModel::kImpossible;
        continue;
      }
      // Recover the word sequence, then drop its first word.
      suffix.clear();
      std::uint32_t cur = static_cast<std::uint32_t>(node);
      for (std::size_t j = k; j >= 1; --j) {
        suffix.push_back(lm.parents_[j][cur].second);
        cur = lm.parents_[j][cur].first;
      }
      std::reverse(suffix.begin(), suffix.end());  // words 2..k+1
      const std::int64_t lower = lm.Find(suffix.data(), suffix.size());
      const double p_lower =
          std::pow(10.0, lm.levels_[k - 1][static_cast<std::size_t>(lower)].logprob);
      const std::uint32_t parent = lm.parents_[k][node].first;
      const auto h_total = static_cast<double>(hist_total[k - 1][parent]);
      const auto h_types = static_cast<double>(hist_types[k - 1][parent]);
      e.logprob = std::log10((static_cast<double>(c) + h_types * p_lower) /
                             (h_total + h_types));
    }
  }
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    for (std::size_t node = 0; node < lm.levels_[k].size(); ++node) {
      if (hist_types[k][node] == 0) continue;
      auto& e = lm.levels_[k][node];
      const auto t = static_cast<double>(hist_types[k][node]);
      e.backoff = std::log10(t / (static_cast<double>(hist_total[k][node]) + t));
      e.has_backoff = true;
    }
  }
  return lm;
}

}  // namespace phrasekit
