#include "phrasekit/corpus.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/random.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

[[noreturn]] void Malformed(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

ParallelCorpus ParseParallel(std::string_view contents,
                             std::string provenance) {
  ParallelCorpus corpus;
  corpus.provenance = std::move(provenance);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!IsValidUtf8(line)) Malformed(line_no, "invalid UTF-8");
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) Malformed(line_no, "missing TAB");
    const std::string_view src = TrimAscii(line.substr(0, tab));
    const std::string_view tgt = TrimAscii(line.substr(tab + 1));
    if (tgt.find('\t') != std::string_view::npos) {
      Malformed(line_no, "more than two fields");
    }
    if (src.empty()) Malformed(line_no, "empty source");
    if (tgt.empty()) Malformed(line_no, "empty target");

    SentencePair pair;
    pair.id = corpus.pairs.size();
    pair.source = NormalizeNfc(src);
    pair.target = NormalizeNfc(tgt);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

ParallelCorpus LoadParallel(const std::filesystem::path& path) {
  return ParseParallel(ReadFile(path), path.string());
}

std::string SerializeParallel(const ParallelCorpus& corpus) {
  std::string out;
  for (const auto& p : corpus.pairs) {
    out += p.source;
    out += '\t';
    out += p.target;
    out += '\n';
  }
  return out;
}

void SaveParallel(const ParallelCorpus& corpus,
                  const std::filesystem::path& path) {
  WriteFile(path, SerializeParallel(corpus));
}

ParallelCorpus FilterByLength(const ParallelCorpus& corpus,
                              std::size_t max_source_chars,
                              std::size_t max_target_chars) {
  if (max_source_chars < 1 || max_target_chars < 1) {
    throw std::invalid_argument("length limits must be >= 1");
  }
  ParallelCorpus out;
  out.provenance = corpus.provenance;
  for (const auto& p : corpus.pairs) {
    if (CountScalars(p.source) <= max_source_chars &&
        CountScalars(p.target) <= max_target_chars) {
      out.pairs.push_back(p);
    }
  }
  return out;
}

std::size_t TrainSize(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  }
  // The slack absorbs representation error when the fraction was itself
  // written as k/n.
  const long double exact = static_cast<long double>(n) * train_fraction;
  const auto k = static_cast<std::size_t>(std::floor(exact + 1e-9L));
  return std::min(k, n);
}

CorpusSplit Split(const ParallelCorpus& corpus, double train_fraction,
                  std::uint64_t seed) {
  if (corpus.size() < 2) {
    throw std::invalid_argument("cannot split a corpus with fewer than 2 pairs");
  }
  const std::size_t n_train = TrainSize(corpus.size(), train_fraction);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(seed);
  rng.Shuffle(order);

  std::sort(order.begin(), order.begin() + static_cast<long>(n_train));
  std::sort(order.begin() + static_cast<long>(n_train), order.end());

  CorpusSplit split;
  split.train.provenance = corpus.provenance + "#train";
  split.test.provenance = corpus.provenance + "#test";
  split.train.pairs.reserve(n_train);
  split.test.pairs.reserve(corpus.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& half = i < n_train ? split.train : split.test;
    half.pairs.push_back(corpus.pairs[order[i]]);
  }
  return split;
}

}  // namespace phrasekit
