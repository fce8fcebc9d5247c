#include "phrasekit/alignment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

std::uint64_t Key(int given, int emitted) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(given)) << 32) |
         static_cast<std::uint32_t>(emitted);
}

std::string FormatProb(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

int TranslationTable::Intern(std::vector<std::string>& names,
                             std::unordered_map<std::string, int>& ids,
                             std::string_view s) {
  auto [it, inserted] = ids.emplace(std::string(s), static_cast<int>(names.size()));
  if (inserted) names.emplace_back(s);
  return it->second;
}

double TranslationTable::Prob(std::string_view given,
                              std::string_view emitted) const {
  auto g = given_ids_.find(std::string(given));
  if (g == given_ids_.end()) return kProbabilityFloor;
  auto e = emitted_ids_.find(std::string(emitted));
  if (e == emitted_ids_.end()) return kProbabilityFloor;
  auto it = probs_.find(Key(g->second, e->second));
  return it == probs_.end() ? kProbabilityFloor : it->second;
}

bool TranslationTable::Contains(std::string_view given,
                                std::string_view emitted) const {
  auto g = given_ids_.find(std::string(given));
  auto e = emitted_ids_.find(std::string(emitted));
  return g != given_ids_.end() && e != emitted_ids_.end() &&
         probs_.count(Key(g->second, e->second)) > 0;
}

void TranslationTable::Set(std::string_view given, std::string_view emitted,
                           double prob) {
  const int g = Intern(given_names_, given_ids_, given);
  const int e = Intern(emitted_names_, emitted_ids_, emitted);
  probs_[Key(g, e)] = prob;
}

std::vector<TranslationTable::Row> TranslationTable::Rows() const {
  std::vector<std::vector<std::pair<std::string, double>>> by_given(
      given_names_.size());
  for (const auto& [key, p] : probs_) {
    const auto g = static_cast<std::size_t>(key >> 32);
    const auto e = static_cast<std::size_t>(key & 0xFFFFFFFFu);
    by_given[g].emplace_back(emitted_names_[e], p);
  }
  std::vector<Row> rows;
  for (std::size_t g = 0; g < by_given.size(); ++g) {
    if (by_given[g].empty()) continue;
    auto& entries = by_given[g];
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    rows.push_back({given_names_[g], std::move(entries)});
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.given < b.given; });
  return rows;
}

std::string TranslationTable::Serialize() const {
  std::string out = "#direction\t";
  out += direction_ == Direction::kForward ? "fwd" : "rev";
  out += '\n';
  for (const auto& row : Rows()) {
    for (const auto& [emitted, p] : row.emitted) {
      out += row.given + '\t' + emitted + '\t' + FormatProb(p) + '\n';
    }
  }
  return out;
}

TranslationTable TranslationTable::Parse(std::string_view text) {
  TranslationTable table;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string where = "translation table line " + std::to_string(line_no);
    std::vector<std::string_view> f;
    for (std::size_t p = 0;;) {
      const std::size_t tab = line.find('\t', p);
      f.push_back(line.substr(p, tab - p));
      if (tab == std::string_view::npos) break;
      p = tab + 1;
    }
    if (line_no == 1) {
      if (f.size() != 2 || f[0] != "#direction" || (f[1] != "fwd" && f[1] != "rev")) {
        throw DataError(where + ": bad header");
      }
      table.direction_ = f[1] == "fwd" ? Direction::kForward : Direction::kReverse;
      continue;
    }
    if (f.size() != 3) throw DataError(where + ": expected 3 fields");
    double p = 0.0;
    auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), p);
    if (res.ec != std::errc() || !(p > 0.0 && p <= 1.0)) {
      throw DataError(where + ": bad probability");
    }
    table.Set(f[0], f[1], p);
  }
  if (line_no == 0) throw DataError("translation table: empty file");
  return table;
}

void TranslationTable::Save(const std::filesystem::path& path) const {
  WriteFile(path, Serialize());
}

TranslationTable TranslationTable::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

TranslationTable TrainModel1(const std::vector<TokenizedPair>& corpus,
                             int iterations, Direction direction,
                             Model1Trace* trace) {
  if (corpus.empty()) throw std::invalid_argument("Model 1: empty corpus");
  if (iterations < 0) throw std::invalid_argument("Model 1: negative iterations");

  // Interned sentences; given side carries NULL at position 0.
  std::vector<std::string> given_names = {std::string(kNullToken)};
  std::vector<std::string> emitted_names;
  std::unordered_map<std::string, int> given_ids = {{std::string(kNullToken), 0}};
  std::unordered_map<std::string, int> emitted_ids;
  auto intern = [](auto& names, auto& ids, const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };

  std::vector<std::vector<int>> given(corpus.size()), emitted(corpus.size());
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& g_side =
        direction == Direction::kForward ? corpus[n].source : corpus[n].target;
    const auto& e_side =
        direction == Direction::kForward ? corpus[n].target : corpus[n].source;
    if (g_side.empty() || e_side.empty()) {
      throw std::invalid_argument("Model 1: pair " + std::to_string(n) +
                                  " has an empty side");
    }
    given[n].push_back(0);
    for (const auto& t : g_side) given[n].push_back(intern(given_names, given_ids, t));
    for (const auto& t : e_side) emitted[n].push_back(intern(emitted_names, emitted_ids, t));
  }

  // One parameter slot per co-occurring (given, emitted) pair, numbered in
  // first-seen order so every reduction below runs in a fixed order.
  std::unordered_map<std::uint64_t, std::uint32_t> slot_of;
  std::vector<int> slot_given;
  std::vector<int> slot_emitted;
  std::vector<std::uint32_t> slots;  // per pair, per emitted j, per given i
  std::vector<std::size_t> offsets = {0};
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    for (int e : emitted[n]) {
      for (int g : given[n]) {
        auto [it, inserted] = slot_of.emplace(
            Key(g, e), static_cast<std::uint32_t>(slot_given.size()));
        if (inserted) {
          slot_given.push_back(g);
          slot_emitted.push_back(e);
        }
        slots.push_back(it->second);
      }
    }
    offsets.push_back(slots.size());
  }

  const std::size_t num_slots = slot_given.size();
  std::vector<double> prob(num_slots);
  {
    std::vector<std::int64_t> fanout(given_names.size(), 0);
    for (int g : slot_given) ++fanout[static_cast<std::size_t>(g)];
    for (std::size_t s = 0; s < num_slots; ++s) {
      prob[s] = 1.0 / static_cast<double>(fanout[static_cast<std::size_t>(slot_given[s])]);
    }
  }

  // E-step over the corpus; optionally accumulates expected counts.
  auto sweep = [&](std::vector<double>* counts) {
    double ll = 0.0;
    for (std::size_t n = 0; n < corpus.size(); ++n) {
      const std::size_t l = given[n].size();
      const std::uint32_t* row = slots.data() + offsets[n];
      for (std::size_t j = 0; j < emitted[n].size(); ++j, row += l) {
        double denom = 0.0;
        for (std::size_t i = 0; i < l; ++i) denom += prob[row[i]];
        ll += std::log(denom / static_cast<double>(l));
        if (counts) {
          for (std::size_t i = 0; i < l; ++i) (*counts)[row[i]] += prob[row[i]] / denom;
        }
      }
    }
    return ll;
  };

  if (trace) trace->log_likelihood.clear();
  std::vector<double> counts(num_slots);
  std::vector<double> totals(given_names.size());
  for (int it = 0; it < iterations; ++it) {
    std::fill(counts.begin(), counts.end(), 0.0);
    const double ll = sweep(&counts);
    if (trace) trace->log_likelihood.push_back(ll);
    std::fill(totals.begin(), totals.end(), 0.0);
    for (std::size_t s = 0; s < num_slots; ++s) {
      totals[static_cast<std::size_t>(slot_given[s])] += counts[s];
    }
    for (std::size_t s = 0; s < num_slots; ++s) {
      prob[s] = counts[s] / totals[static_cast<std::size_t>(slot_given[s])];
    }
  }
  if (trace) trace->log_likelihood.push_back(sweep(nullptr));

  TranslationTable table(direction);
  for (std::size_t s = 0; s < num_slots; ++s) {
    // Underflowed expected counts would break the (0, 1] invariant.
    const double p = std::max(prob[s], kProbabilityFloor);
    table.Set(given_names[static_cast<std::size_t>(slot_given[s])],
              emitted_names[static_cast<std::size_t>(slot_emitted[s])], p);
  }
  return table;
}

bool Alignment::Contains(int s, int t) const {
  return std::binary_search(links.begin(), links.end(), std::make_pair(s, t));
}

Alignment ViterbiAlign(const TranslationTable& table, const TokenizedPair& pair) {
  const bool forward = table.direction() == Direction::kForward;
  const auto& given = forward ? pair.source : pair.target;
  const auto& emitted = forward ? pair.target : pair.source;

  Alignment out;
  out.source_len = static_cast<int>(pair.source.size());
  out.target_len = static_cast<int>(pair.target.size());
  for (std::size_t j = 0; j < emitted.size(); ++j) {
    double best = table.Prob(kNullToken, emitted[j]);
    int best_i = -1;
    for (std::size_t i = 0; i < given.size(); ++i) {
      const double p = table.Prob(given[i], emitted[j]);
      if (p > best) {
        best = p;
        best_i = static_cast<int>(i);
      }
    }
    if (best_i < 0) continue;
    if (forward) {
      out.links.emplace_back(best_i, static_cast<int>(j));
    } else {
      out.links.emplace_back(static_cast<int>(j), best_i);
    }
  }
  std::sort(out.links.begin(), out.links.end());
  return out;
}

Alignment Symmetrize(const Alignment& forward, const Alignment& backward) {
  if (forward.source_len != backward.source_len ||
      forward.target_len != backward.target_len) {
    throw std::invalid_argument("Symmetrize: alignments over different lengths");
  }
  const int ns = forward.source_len;
  const int nt = forward.target_len;
  auto idx = [nt](int s, int t) { return static_cast<std::size_t>(s * nt + t); };

  std::vector<char> in_fwd(static_cast<std::size_t>(ns * nt), 0);
  std::vector<char> in_bwd(in_fwd.size(), 0);
  for (auto [s, t] : forward.links) in_fwd[idx(s, t)] = 1;
  for (auto [s, t] : backward.links) in_bwd[idx(s, t)] = 1;

  std::vector<char> a(in_fwd.size(), 0);
  std::vector<char> src_aligned(static_cast<std::size_t>(ns), 0);
  std::vector<char> tgt_aligned(static_cast<std::size_t>(nt), 0);
  auto add = [&](int s, int t) {
    a[idx(s, t)] = 1;
    src_aligned[static_cast<std::size_t>(s)] = 1;
    tgt_aligned[static_cast<std::size_t>(t)] = 1;
  };
  for (int s = 0; s < ns; ++s) {
    for (int t = 0; t < nt; ++t) {
      if (in_fwd[idx(s, t)] && in_bwd[idx(s, t)]) add(s, t);
    }
  }

  static constexpr int kNeighbors[8][2] = {{-1, 0}, {0, -1}, {1, 0},  {0, 1},
                                           {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool grew = true;
  while (grew) {
    grew = false;
    for (int s = 0; s < ns; ++s) {
      for (int t = 0; t < nt; ++t) {
        if (!a[idx(s, t)]) continue;
        for (const auto& d : kNeighbors) {
          const int s2 = s + d[0];
          const int t2 = t + d[1];
          if (s2 < 0 || s2 >= ns || t2 < 0 || t2 >= nt) continue;
          if (a[idx(s2, t2)]) continue;
          if (!(in_fwd[idx(s2, t2)] || in_bwd[idx(s2, t2)])) continue;
          if (src_aligned[static_cast<std::size_t>(s2)] &&
              tgt_aligned[static_cast<std::size_t>(t2)]) {
            continue;
          }
          add(s2, t2);
          grew = true;
        }
      }
    }
  }

  for (const auto* side : {&in_fwd, &in_bwd}) {
    for (int s = 0; s < ns; ++s) {
      for (int t = 0; t < nt; ++t) {
        if ((*side)[idx(s, t)] && !src_aligned[static_cast<std::size_t>(s)] &&
            !tgt_aligned[static_cast<std::size_t>(t)]) {
          add(s, t);
        }
      }
    }
  }

  Alignment out;
  out.source_len = ns;
  out.target_len = nt;
  for (int s = 0; s < ns; ++s) {
    for (int t = 0; t < nt; ++t) {
      if (a[idx(s, t)]) out.links.emplace_back(s, t);
    }
  }
  return out;
}

std::string FormatPharaoh(const Alignment& alignment) {
  std::string out;
  for (std::size_t i = 0; i < alignment.links.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(alignment.links[i].first) + '-' +
           std::to_string(alignment.links[i].second);
  }
  return out;
}

Alignment ParsePharaoh(std::string_view line, int source_len, int target_len) {
  Alignment out;
  out.source_len = source_len;
  out.target_len = target_len;
  for (const auto& item : SplitWhitespace(line)) {
    const auto dash = item.find('-');
    int s = -1;
    int t = -1;
    if (dash != std::string::npos) {
      std::from_chars(item.data(), item.data() + dash, s);
      std::from_chars(item.data() + dash + 1, item.data() + item.size(), t);
    }
    if (s < 0 || t < 0 || s >= source_len || t >= target_len) {
      throw DataError("bad alignment link '" + item + "'");
    }
    out.links.emplace_back(s, t);
  }
  std::sort(out.links.begin(), out.links.end());
  out.links.erase(std::unique(out.links.begin(), out.links.end()), out.links.end());
  return out;
}

}  // namespace phrasekit
