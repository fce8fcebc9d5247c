#include "phrasekit/phrase_table.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

constexpr char kMagic[4] = {'P', 'B', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

double ClampLog(double p) {
  if (!(p > 0.0)) return kLogFeatureFloor;
  return std::clamp(std::log(p), kLogFeatureFloor, 0.0);
}

class Writer {
 public:
  void U32(std::uint32_t v) { Raw(v); }
  void U64(std::uint64_t v) { Raw(v); }
  void F64(double v) { Raw(std::bit_cast<std::uint64_t>(v)); }
  void Str(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void Tokens(const std::vector<std::string>& tokens) {
    U32(static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) Str(t);
  }
  std::string& str() { return out_; }

 private:
  template <typename T>
  void Raw(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_ += static_cast<char>((v >> (8 * i)) & 0xFF);
    }
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t U32() { return Raw<std::uint32_t>(); }
  std::uint64_t U64() { return Raw<std::uint64_t>(); }
  double F64() { return std::bit_cast<double>(Raw<std::uint64_t>()); }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<std::string> Tokens() {
    const std::uint32_t n = U32();
    std::vector<std::string> out;
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(Str());
    return out;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("phrase table: truncated record");
  }
  template <typename T>
  T Raw() {
    Need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<PhraseSpan> ExtractPhrases(const Alignment& alignment, int max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  const int ns = alignment.source_len;
  const int nt = alignment.target_len;
  std::vector<char> src_aligned(static_cast<std::size_t>(ns), 0);
  for (auto [s, t] : alignment.links) src_aligned[static_cast<std::size_t>(s)] = 1;

  std::vector<PhraseSpan> out;
  for (int tb = 0; tb < nt; ++tb) {
    for (int te = tb + 1; te <= std::min(nt, tb + max_len); ++te) {
      int min_s = ns;
      int max_s = -1;
      for (auto [s, t] : alignment.links) {
        if (t >= tb && t < te) {
          min_s = std::min(min_s, s);
          max_s = std::max(max_s, s);
        }
      }
      if (max_s < 0 || max_s - min_s + 1 > max_len) continue;
      bool consistent = true;
      for (auto [s, t] : alignment.links) {
        if (s >= min_s && s <= max_s && (t < tb || t >= te)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;

      // Grow the source side over unaligned neighbours.
      for (int sb = min_s; sb >= 0; --sb) {
        if (sb != min_s && src_aligned[static_cast<std::size_t>(sb)]) break;
        for (int se = max_s; se < ns; ++se) {
          if (se != max_s && src_aligned[static_cast<std::size_t>(se)]) break;
          if (se - sb + 1 > max_len) break;
          out.push_back({sb, se + 1, tb, te});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PhraseOccurrence MakeOccurrence(const TokenizedPair& pair,
                                const Alignment& alignment,
                                const PhraseSpan& span) {
  PhraseOccurrence occ;
  occ.source.assign(pair.source.begin() + span.src_begin,
                    pair.source.begin() + span.src_end);
  occ.target.assign(pair.target.begin() + span.tgt_begin,
                    pair.target.begin() + span.tgt_end);
  for (auto [s, t] : alignment.links) {
    if (s >= span.src_begin && s < span.src_end && t >= span.tgt_begin &&
        t < span.tgt_end) {
      occ.links.emplace_back(s - span.src_begin, t - span.tgt_begin);
    }
  }
  return occ;
}

const std::vector<PhraseEntry>* PhraseTable::Find(
    const std::vector<std::string>& source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

void PhraseTable::Add(std::vector<std::string> source, PhraseEntry entry) {
  if (source.empty() || entry.target.empty()) {
    throw std::invalid_argument("phrase table: empty phrase");
  }
  max_source_len_ = std::max(max_source_len_, static_cast<int>(source.size()));
  entries_[std::move(source)].push_back(std::move(entry));
}

std::size_t PhraseTable::num_entries() const {
  std::size_t n = 0;
  for (const auto& [src, list] : entries_) n += list.size();
  return n;
}

std::string PhraseTable::SerializeBinary() const {
  Writer payload;
  payload.U64(entries_.size());
  for (const auto& [source, list] : entries_) {
    payload.Tokens(source);
    payload.U32(static_cast<std::uint32_t>(list.size()));
    for (const auto& e : list) {
      payload.Tokens(e.target);
      for (double f : e.features) payload.F64(f);
    }
  }
  Writer file;
  file.str().append(kMagic, sizeof(kMagic));
  file.U32(kFormatVersion);
  file.U64(payload.str().size());
  file.str() += payload.str();
  file.U32(Crc32(payload.str()));
  return std::move(file.str());
}

PhraseTable PhraseTable::ParseBinary(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, 3) != 0) {
    throw DataError("not a phrase table (bad magic)");
  }
  Reader header(bytes.substr(sizeof(kMagic)));
  if (bytes[3] != kMagic[3]) throw DataError("phrase table: version mismatch");
  const std::uint32_t version = header.U32();
  if (version != kFormatVersion) {
    throw DataError("phrase table: version mismatch (file " +
                    std::to_string(version) + ", expected " +
                    std::to_string(kFormatVersion) + ")");
  }
  const std::uint64_t size = header.U64();
  constexpr std::size_t kHeaderSize = sizeof(kMagic) + 4 + 8;
  if (bytes.size() != kHeaderSize + size + 4) {
    throw ChecksumError("phrase table: size mismatch (truncated or padded file)");
  }
  const std::string_view payload = bytes.substr(kHeaderSize, size);
  Reader footer(bytes.substr(kHeaderSize + size));
  if (footer.U32() != Crc32(payload)) {
    throw ChecksumError("phrase table: checksum mismatch");
  }

  PhraseTable table;
  Reader in(payload);
  const std::uint64_t num_sources = in.U64();
  for (std::uint64_t i = 0; i < num_sources; ++i) {
    std::vector<std::string> source = in.Tokens();
    const std::uint32_t n = in.U32();
    for (std::uint32_t k = 0; k < n; ++k) {
      PhraseEntry e;
      e.target = in.Tokens();
      for (double& f : e.features) f = in.F64();
      table.Add(source, std::move(e));
    }
  }
  if (!in.done()) throw DataError("phrase table: trailing bytes in payload");
  return table;
}

void PhraseTable::SaveBinary(const std::filesystem::path& path) const {
  WriteFile(path, SerializeBinary());
}

PhraseTable PhraseTable::LoadBinary(const std::filesystem::path& path) {
  return ParseBinary(ReadFile(path));
}

std::string PhraseTable::ToText() const {
  std::ostringstream out;
  out.precision(10);
  for (const auto& [source, list] : entries_) {
    for (const auto& e : list) {
      out << Join(source, " ") << " ||| " << Join(e.target, " ") << " |||";
      for (double f : e.features) out << ' ' << f;
      out << '\n';
    }
  }
  return out.str();
}

double LexicalWeight(const std::vector<std::string>& given,
                     const std::vector<std::string>& emitted,
                     const std::vector<std::pair<int, int>>& links_given_emitted,
                     const TranslationTable& table) {
  double weight = 1.0;
  for (std::size_t j = 0; j < emitted.size(); ++j) {
    double sum = 0.0;
    int linked = 0;
    for (auto [g, e] : links_given_emitted) {
      if (e == static_cast<int>(j)) {
        sum += table.Prob(given[static_cast<std::size_t>(g)], emitted[j]);
        ++linked;
      }
    }
    weight *= linked ? sum / linked : table.Prob(kNullToken, emitted[j]);
  }
  return weight;
}

PhraseTableBuilder::PhraseTableBuilder(const TranslationTable& forward,
                                       const TranslationTable& reverse)
    : forward_(forward), reverse_(reverse) {}

void PhraseTableBuilder::Add(const PhraseOccurrence& occ) {
  std::vector<std::pair<int, int>> transposed;
  transposed.reserve(occ.links.size());
  for (auto [s, t] : occ.links) transposed.emplace_back(t, s);
  const double lex_ts = LexicalWeight(occ.source, occ.target, occ.links, forward_);
  const double lex_st = LexicalWeight(occ.target, occ.source, transposed, reverse_);

  Stats& st = pairs_[{occ.source, occ.target}];
  ++st.count;
  st.lex_ts = std::max(st.lex_ts, lex_ts);
  st.lex_st = std::max(st.lex_st, lex_st);
  ++occurrences_;
}

PhraseTable PhraseTableBuilder::Build() const {
  if (pairs_.empty()) throw std::invalid_argument("no phrase occurrences");
  std::map<std::vector<std::string>, long long> source_totals;
  std::map<std::vector<std::string>, long long> target_totals;
  for (const auto& [key, st] : pairs_) {
    source_totals[key.first] += st.count;
    target_totals[key.second] += st.count;
  }
  PhraseTable table;
  for (const auto& [key, st] : pairs_) {
    const auto c = static_cast<double>(st.count);
    PhraseEntry e;
    e.target = key.second;
    e.features[0] = ClampLog(c / static_cast<double>(source_totals.at(key.first)));
    e.features[1] = ClampLog(c / static_cast<double>(target_totals.at(key.second)));
    e.features[2] = ClampLog(st.lex_ts);
    e.features[3] = ClampLog(st.lex_st);
    table.Add(key.first, std::move(e));
  }
  return table;
}

PhraseTable BuildTable(const std::vector<PhraseOccurrence>& occurrences,
                       const TranslationTable& forward,
                       const TranslationTable& reverse) {
  PhraseTableBuilder builder(forward, reverse);
  for (const auto& occ : occurrences) builder.Add(occ);
  return builder.Build();
}

}  // namespace phrasekit
