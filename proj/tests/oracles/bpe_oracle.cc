#include "oracles/bpe_oracle.h"

#include <map>
#include <sstream>

namespace phrasekit::oracle {

namespace {

std::vector<std::string> Chars(const std::string& word) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size();) {
    const auto b = static_cast<unsigned char>(word[i]);
    const std::size_t len = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> Words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Left-to-right, non-overlapping.
void Apply(std::vector<std::string>& symbols, const std::string& left, const std::string& right) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> ReplayMerges(const std::string& text, const MergeList& merges,
                                      const std::set<std::string>& chars,
                                      const std::string& meta) {
  std::vector<std::string> out;
  for (const auto& word : Words(text)) {
    std::vector<std::string> symbols = {meta};
    for (auto& c : Chars(word)) symbols.push_back(chars.count(c) ? c : "<unk>");
    for (const auto& [l, r] : merges) Apply(symbols, l, r);
    out.insert(out.end(), symbols.begin(), symbols.end());
  }
  return out;
}

MergeList TrainMerges(const std::vector<std::string>& lines, std::size_t vocab_size,
                      const std::string& meta) {
  std::map<std::string, long long> freq;
  std::set<std::string> pieces = {"<unk>", "<s>", "</s>"};
  for (const auto& line : lines) {
    for (const auto& w : Words(line)) {
      ++freq[w];
      pieces.insert(meta);
      for (auto& c : Chars(w)) pieces.insert(c);
    }
  }
  std::vector<std::pair<std::vector<std::string>, long long>> words;
  for (const auto& [w, n] : freq) {
    std::vector<std::string> symbols = {meta};
    for (auto& c : Chars(w)) symbols.push_back(c);
    words.emplace_back(symbols, n);
  }

  MergeList merges;
  while (pieces.size() < vocab_size) {
    std::map<std::pair<std::string, std::string>, long long> counts;
    for (const auto& [symbols, n] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) counts[{symbols[i], symbols[i + 1]}] += n;
    }
    const std::pair<std::string, std::string>* best = nullptr;
    long long best_count = 1;
    for (const auto& [pair, c] : counts) {
      const std::string merged = pair.first + pair.second;
      if (merged == "<unk>" || merged == "<s>" || merged == "</s>") continue;
      if (c > best_count) {
        best = &pair;
        best_count = c;
      }
    }
    if (!best) break;
    merges.push_back(*best);
    pieces.insert(best->first + best->second);
    for (auto& [symbols, n] : words) Apply(symbols, best->first, best->second);
  }
  return merges;
}

}  // namespace phrasekit::oracle
