#include "phrasekit/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"

namespace phrasekit {

namespace {

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double ParseNumber(std::string_view text) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v) || v <= 0.0) {
    throw std::invalid_argument("bad smoothing value: " + s);
  }
  return v;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

Smoothing Smoothing::Parse(std::string_view spec) {
  const auto eq = spec.find('=');
  const std::string_view name = spec.substr(0, eq);
  const bool has_value = eq != std::string_view::npos;
  if (name == "none" && !has_value) return None();
  if (name == "floor") return Floor(has_value ? ParseNumber(spec.substr(eq + 1)) : 0.1);
  if (name == "addk" || name == "add_k" || name == "add-k") {
    return AddK(has_value ? ParseNumber(spec.substr(eq + 1)) : 1.0);
  }
  throw std::invalid_argument("unknown smoothing: " + std::string(spec));
}

std::string Smoothing::ToString() const {
  char buf[64];
  switch (mode) {
    case Mode::kNone:
      return "none";
    case Mode::kFloor:
      std::snprintf(buf, sizeof(buf), "floor=%g", value);
      return buf;
    case Mode::kAddK:
      std::snprintf(buf, sizeof(buf), "addk=%g", value);
      return buf;
  }
  return "none";
}

NgramStats& NgramStats::operator+=(const NgramStats& o) {
  for (int n = 0; n < kMaxBleuOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

NgramStats CountNgrams(const std::vector<std::string>& hyp,
                       const std::vector<std::string>& ref) {
  NgramStats st;
  st.hyp_len = static_cast<long long>(hyp.size());
  st.ref_len = static_cast<long long>(ref.size());
  for (int n = 1; n <= kMaxBleuOrder; ++n) {
    std::map<std::vector<std::string>, long long> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
    }
    std::map<std::vector<std::string>, long long> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n)];
    }
    long long total = 0;
    long long match = 0;
    for (const auto& [gram, c] : hyp_counts) {
      total += c;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) match += std::min(c, it->second);
    }
    st.matches[n - 1] = match;
    st.totals[n - 1] = total;
  }
  return st;
}

BleuResult ScoreStats(const NgramStats& st, Smoothing smoothing) {
  BleuResult r;
  r.hyp_len = st.hyp_len;
  r.ref_len = st.ref_len;
  r.smoothing = smoothing;
  if (st.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (st.hyp_len < st.ref_len) {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(st.ref_len) /
                                           static_cast<double>(st.hyp_len));
  }

  bool any_match = false;
  bool any_zero = false;
  for (long long m : st.matches) {
    any_match = any_match || m > 0;
    any_zero = any_zero || m == 0;
  }
  // Add-k only steps in when some order has no match, so it agrees with
  // the unsmoothed score whenever that score is nonzero.
  const bool add_k = smoothing.mode == Smoothing::Mode::kAddK && any_zero;

  double log_sum = 0.0;
  bool zero = !any_match;
  for (int n = 0; n < kMaxBleuOrder; ++n) {
    double m = static_cast<double>(st.matches[n]);
    double c = static_cast<double>(st.totals[n]);
    if (add_k && n > 0) {
      m += smoothing.value;
      c += smoothing.value;
    }
    double p = 0.0;
    if (c > 0.0) {
      if (m > 0.0) {
        p = m / c;
      } else if (smoothing.mode == Smoothing::Mode::kFloor) {
        p = smoothing.value / c;
      }
    }
    r.precisions[n] = p;
    if (p > 0.0) {
      log_sum += std::log(p);
    } else {
      zero = true;
    }
  }
  if (zero || r.brevity_penalty == 0.0) {
    r.score = 0.0;
  } else {
    r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / kMaxBleuOrder);
  }
  return r;
}

BleuResult BleuSentence(const std::vector<std::string>& hypothesis,
                        const std::vector<std::string>& reference,
                        Smoothing smoothing) {
  if (reference.empty()) throw std::invalid_argument("empty reference");
  return ScoreStats(CountNgrams(hypothesis, reference), smoothing);
}

BleuResult BleuCorpus(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references,
                      Smoothing smoothing) {
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("hypothesis/reference count mismatch");
  }
  if (hypotheses.empty()) throw std::invalid_argument("empty corpus");
  NgramStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (references[i].empty()) throw std::invalid_argument("empty reference");
    total += CountNgrams(hypotheses[i], references[i]);
  }
  return ScoreStats(total, smoothing);
}

double Quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

LengthBucketReport BucketByLength(const std::vector<std::size_t>& source_lengths,
                                  const std::vector<double>& scores, int k) {
  if (k < 2) throw std::invalid_argument("need at least 2 buckets");
  if (source_lengths.size() != scores.size()) {
    throw std::invalid_argument("lengths and scores differ in size");
  }
  if (source_lengths.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("fewer items than buckets");
  }
  std::vector<double> sorted(source_lengths.begin(), source_lengths.end());
  std::sort(sorted.begin(), sorted.end());

  LengthBucketReport report;
  for (int i = 1; i < k; ++i) {
    report.boundaries.push_back(Quantile(sorted, static_cast<double>(i) / k));
  }
  report.members.resize(static_cast<std::size_t>(k));
  report.scores.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < source_lengths.size(); ++i) {
    const double len = static_cast<double>(source_lengths[i]);
    const auto b = static_cast<std::size_t>(
        std::lower_bound(report.boundaries.begin(), report.boundaries.end(), len) -
        report.boundaries.begin());
    report.members[b].push_back(i);
    report.scores[b].push_back(scores[i]);
  }
  for (std::size_t b = 0; b < report.scores.size(); ++b) {
    const auto& s = report.scores[b];
    BucketSummary sum;
    sum.count = s.size();
    if (s.empty()) {
      report.warnings.push_back("bucket " + std::to_string(b + 1) +
                                " is empty (degenerate length distribution)");
    } else {
      sum.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      sum.median = Median(s);
      const auto near_zero =
          std::count_if(s.begin(), s.end(), [](double x) { return x <= kNearZeroBleu; });
      sum.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(s.size());
    }
    report.summaries.push_back(sum);
  }
  return report;
}

EvaluationReport Evaluate(const std::vector<std::uint64_t>& ids,
                          const std::vector<std::size_t>& source_lengths,
                          const std::vector<std::vector<std::string>>& hypotheses,
                          const std::vector<std::vector<std::string>>& references,
                          int buckets, Smoothing floor, Smoothing addk) {
  const std::size_t n = hypotheses.size();
  if (ids.size() != n || source_lengths.size() != n || references.size() != n) {
    throw std::invalid_argument("evaluation inputs differ in size");
  }
  EvaluationReport report;
  std::vector<double> std_scores;
  for (std::size_t i = 0; i < n; ++i) {
    const NgramStats st = CountNgrams(hypotheses[i], references[i]);
    if (references[i].empty()) throw std::invalid_argument("empty reference");
    SentenceScore s;
    s.id = ids[i];
    s.src_len = source_lengths[i];
    s.bleu_std = ScoreStats(st, Smoothing::None()).score;
    s.bleu_floor = ScoreStats(st, floor).score;
    s.bleu_addk = ScoreStats(st, addk).score;
    std_scores.push_back(s.bleu_std);
    report.sentences.push_back(s);
  }
  if (n > 0) {
    report.corpus = BleuCorpus(hypotheses, references);
    report.mean_sentence_bleu =
        std::accumulate(std_scores.begin(), std_scores.end(), 0.0) / static_cast<double>(n);
  }
  if (n >= static_cast<std::size_t>(std::max(buckets, 2))) {
    report.buckets = BucketByLength(source_lengths, std_scores, buckets);
  }
  return report;
}

std::string SentenceCsv(const EvaluationReport& report) {
  std::string out = "id,src_len,bleu_std,bleu_floor,bleu_addk\n";
  for (const auto& s : report.sentences) {
    out += std::to_string(s.id) + ',' + std::to_string(s.src_len) + ',' +
           Fixed(s.bleu_std) + ',' + Fixed(s.bleu_floor) + ',' + Fixed(s.bleu_addk) + '\n';
  }
  return out;
}

std::string DensityCsv(const EvaluationReport& report) {
  std::string out = "bucket,len_lo,len_hi,bin_lo,bin_hi,count,density\n";
  const auto& b = report.buckets;
  constexpr double kWidth = 100.0 / kDensityBins;
  for (std::size_t i = 0; i < b.scores.size(); ++i) {
    const std::string lo = i == 0 ? "-inf" : Fixed(b.boundaries[i - 1], 3);
    const std::string hi = i + 1 == b.scores.size() ? "inf" : Fixed(b.boundaries[i], 3);
    std::array<std::size_t, kDensityBins> counts{};
    for (double s : b.scores[i]) {
      const int bin = std::clamp(static_cast<int>(s / kWidth), 0, kDensityBins - 1);
      ++counts[static_cast<std::size_t>(bin)];
    }
    const double n = static_cast<double>(b.scores[i].size());
    for (int k = 0; k < kDensityBins; ++k) {
      const std::size_t c = counts[static_cast<std::size_t>(k)];
      const double density = n > 0 ? static_cast<double>(c) / (n * kWidth) : 0.0;
      out += std::to_string(i + 1) + ',' + lo + ',' + hi + ',' + Fixed(k * kWidth, 1) + ',' +
             Fixed((k + 1) * kWidth, 1) + ',' + std::to_string(c) + ',' + Fixed(density) + '\n';
    }
  }
  return out;
}

std::string SummaryText(const EvaluationReport& report) {
  std::string out;
  out += "sentences: " + std::to_string(report.sentences.size()) + "\n";
  if (!report.sentences.empty()) {
    const auto& c = report.corpus;
    out += "corpus_bleu: " + Fixed(c.score, 4) + "\n";
    out += "mean_sentence_bleu: " + Fixed(report.mean_sentence_bleu, 4) + "\n";
    out += "precisions:";
    for (double p : c.precisions) out += ' ' + Fixed(p, 6);
    out += "\nbrevity_penalty: " + Fixed(c.brevity_penalty, 6) + "\n";
    out += "hyp_len: " + std::to_string(c.hyp_len) + "\nref_len: " + std::to_string(c.ref_len) +
           "\n";
  }
  const auto& b = report.buckets;
  if (!b.summaries.empty()) {
    out += "boundaries:";
    for (double x : b.boundaries) out += ' ' + Fixed(x, 3);
    out += "\nbucket count mean median near_zero\n";
    for (std::size_t i = 0; i < b.summaries.size(); ++i) {
      const auto& s = b.summaries[i];
      out += std::to_string(i + 1) + ' ' + std::to_string(s.count) + ' ' + Fixed(s.mean, 4) +
             ' ' + Fixed(s.median, 4) + ' ' + Fixed(s.near_zero_fraction, 4) + '\n';
    }
    for (const auto& w : b.warnings) out += "warning: " + w + "\n";
  }
  return out;
}

void EmitReport(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  WriteFile(dir / "sentences.csv", SentenceCsv(report));
  WriteFile(dir / "buckets.csv", DensityCsv(report));
  WriteFile(dir / "summary.txt", SummaryText(report));
}

}  // namespace phrasekit
