#include "phrasekit/decoder.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Option {
  int begin = 0;
  int end = 0;
  std::vector<std::string> tokens;
  std::vector<int> lm_ids;
  PhraseFeatures phrase{};
  // Weighted phrase features plus word penalty.
  double static_score = 0.0;
  // static_score plus the weighted unigram LM score of the target.
  double estimate = 0.0;
};

void Score(Option& o, const LanguageModel& lm, const DecoderWeights& w) {
  double unigram = 0.0;
  for (const auto& t : o.tokens) {
    o.lm_ids.push_back(lm.Index(t));
    unigram += lm.ConditionalLogprob(std::span<const int>(), o.lm_ids.back());
  }
  o.static_score = w.word_penalty * -static_cast<double>(o.tokens.size());
  for (std::size_t k = 0; k < kNumPhraseFeatures; ++k) {
    o.static_score += w.phrase[k] * o.phrase[k];
  }
  o.estimate = o.static_score + w.lm * kLn10 * unigram;
}

std::vector<Option> CollectOptions(const std::vector<std::string>& source,
                                   const PhraseTable& table,
                                   const LanguageModel& lm,
                                   const DecoderWeights& w,
                                   const DecoderParams& params) {
  std::vector<Option> options;
  const int n = static_cast<int>(source.size());
  const int max_len = std::max(1, table.max_source_len());
  for (int b = 0; b < n; ++b) {
    for (int e = b + 1; e <= std::min(n, b + max_len); ++e) {
      const std::vector<std::string> phrase(source.begin() + b, source.begin() + e);
      const auto* entries = table.Find(phrase);
      if (entries) {
        std::vector<Option> span;
        for (const auto& entry : *entries) {
          Option o;
          o.begin = b;
          o.end = e;
          o.tokens = entry.target;
          o.phrase = entry.features;
          Score(o, lm, w);
          span.push_back(std::move(o));
        }
        const auto limit = static_cast<std::size_t>(params.table_limit);
        if (limit > 0 && span.size() > limit) {
          std::stable_sort(span.begin(), span.end(), [](const Option& x, const Option& y) {
            if (x.estimate != y.estimate) return x.estimate > y.estimate;
            return x.tokens < y.tokens;
          });
          span.resize(limit);
        }
        for (auto& o : span) options.push_back(std::move(o));
      } else if (e == b + 1) {
        Option o;
        o.begin = b;
        o.end = e;
        o.tokens = {source[static_cast<std::size_t>(b)]};
        o.phrase.fill(params.copy_penalty);
        Score(o, lm, w);
        options.push_back(std::move(o));
      }
    }
  }
  return options;
}

FutureCostTable FutureFromOptions(int n, const std::vector<Option>& options) {
  FutureCostTable cost(static_cast<std::size_t>(n + 1),
                       std::vector<double>(static_cast<std::size_t>(n + 1), kNegInf));
  for (const auto& o : options) {
    auto& c = cost[static_cast<std::size_t>(o.begin)][static_cast<std::size_t>(o.end)];
    c = std::max(c, o.estimate);
  }
  for (int len = 2; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      const int k = i + len;
      auto& c = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      for (int j = i + 1; j < k; ++j) {
        c = std::max(c, cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                            cost[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
      }
    }
  }
  return cost;
}

class Coverage {
 public:
  explicit Coverage(int n) : words_(static_cast<std::size_t>((n + 63) / 64), 0) {}

  bool Test(int i) const {
    return (words_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
  }
  void Set(int i) { words_[static_cast<std::size_t>(i >> 6)] |= std::uint64_t{1} << (i & 63); }
  bool Free(int b, int e) const {
    for (int i = b; i < e; ++i) {
      if (Test(i)) return false;
    }
    return true;
  }
  int FirstGap(int n) const { return FirstGapFrom(0, n); }
  int FirstGapFrom(int from, int n) const {
    for (int i = from; i < n; ++i) {
      if (!Test(i)) return i;
    }
    return n;
  }
  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::vector<std::uint64_t> words_;
};

struct Arc {
  int prev = -1;
  int option = -1;
  FeatureVector delta{};
  // Best path score into the arc's head when the path takes this arc.
  double score = 0.0;
};

struct Node {
  Coverage coverage;
  std::vector<int> lm_state;
  int last_end = 0;
  int covered = 0;
  double score = 0.0;
  double future = 0.0;
  int best_arc = -1;
  std::vector<Arc> arcs;
};

class Search {
 public:
  Search(const std::vector<std::string>& source, const PhraseTable& table,
         const LanguageModel& lm, const DecoderWeights& weights,
         const DecoderParams& params)
      : n_(static_cast<int>(source.size())),
        lm_(lm),
        w_(weights),
        params_(params),
        options_(CollectOptions(source, table, lm, weights, params)),
        future_(FutureFromOptions(n_, options_)),
        by_begin_(static_cast<std::size_t>(n_)) {
    for (std::size_t i = 0; i < options_.size(); ++i) {
      by_begin_[static_cast<std::size_t>(options_[i].begin)].push_back(static_cast<int>(i));
    }
  }

  void Run() {
    stacks_.assign(static_cast<std::size_t>(n_ + 1), {});
    index_.assign(stacks_.size(), {});
    threshold_.assign(stacks_.size(), kNegInf);

    Node root{Coverage(n_), {}, 0, 0, 0.0, 0.0, -1, {}};
    root.lm_state.assign(static_cast<std::size_t>(std::max(0, lm_.order() - 1)), lm_.bos_id());
    root.future = future_[0][static_cast<std::size_t>(n_)];
    nodes_.push_back(std::move(root));
    alive_.push_back(1);
    stacks_[0].push_back(0);

    for (int k = 0; k < n_; ++k) {
      auto& stack = stacks_[static_cast<std::size_t>(k)];
      Prune(stack, static_cast<std::size_t>(params_.stack_size));
      const std::vector<int> expand = stack;
      for (int h : expand) Expand(h);
    }

    auto& last = stacks_[static_cast<std::size_t>(n_)];
    Prune(last, static_cast<std::size_t>(params_.stack_size));
    if (last.empty()) throw std::logic_error("decoder: no complete hypothesis");
    for (int h : last) {
      Arc arc;
      arc.prev = h;
      const Node& node = nodes_[static_cast<std::size_t>(h)];
      arc.delta[0] = kLn10 * lm_.ConditionalLogprob(node.lm_state, lm_.eos_id());
      arc.score = node.score + w_.lm * arc.delta[0];
      goal_arcs_.push_back(arc);
      if (goal_best_ < 0 || Prefer(arc, goal_arcs_[static_cast<std::size_t>(goal_best_)])) {
        goal_best_ = static_cast<int>(goal_arcs_.size()) - 1;
      }
    }
  }

  Translation Best() const {
    std::vector<int> choice(1, goal_best_);
    return Materialize(Complete(choice));
  }

  NBestList NBest(int n) const {
    // Paths are arc choices from the goal back to the root. A child path
    // deviates from its parent at one depth strictly after the parent's
    // last deviation and follows winning arcs from there, so every path is
    // generated exactly once.
    struct Path {
      std::vector<int> choice;
      int last_dev = -1;
      double score = 0.0;
      std::size_t serial = 0;
    };
    auto worse = [](const Path& a, const Path& b) {
      if (a.score != b.score) return a.score < b.score;
      return a.serial > b.serial;
    };
    std::priority_queue<Path, std::vector<Path>, decltype(worse)> queue(worse);
    std::size_t serial = 0;
    {
      Path best;
      best.choice = Complete({goal_best_});
      best.score = goal_arcs_[static_cast<std::size_t>(goal_best_)].score;
      best.serial = serial++;
      queue.push(std::move(best));
    }

    NBestList out;
    std::unordered_set<std::string> seen;
    const std::size_t max_pops = static_cast<std::size_t>(n) * 50 + 100;
    for (std::size_t pops = 0; !queue.empty() && out.size() < static_cast<std::size_t>(n) &&
                               pops < max_pops;
         ++pops) {
      Path p = queue.top();
      queue.pop();
      Translation t = Materialize(p.choice);
      t.score = p.score;
      if (seen.insert(Join(t.tokens, " ")).second) out.push_back(std::move(t));

      // Heads along the path: depth 0 is the goal, depth d > 0 the node
      // reached after d choices.
      int head = -1;  // goal
      for (std::size_t d = 0; d < p.choice.size(); ++d) {
        const auto& arcs = head < 0 ? goal_arcs_ : nodes_[static_cast<std::size_t>(head)].arcs;
        const int chosen = p.choice[d];
        if (static_cast<int>(d) > p.last_dev) {
          const double base = arcs[static_cast<std::size_t>(chosen)].score;
          for (std::size_t a = 0; a < arcs.size(); ++a) {
            if (static_cast<int>(a) == chosen) continue;
            Path child;
            child.choice.assign(p.choice.begin(), p.choice.begin() + static_cast<long>(d));
            child.choice.push_back(static_cast<int>(a));
            child.choice = Complete(std::move(child.choice));
            child.last_dev = static_cast<int>(d);
            child.score = p.score - base + arcs[a].score;
            child.serial = serial++;
            queue.push(std::move(child));
          }
        }
        head = arcs[static_cast<std::size_t>(chosen)].prev;
      }
    }
    return out;
  }

 private:
  double Total(int h) const {
    const Node& n = nodes_[static_cast<std::size_t>(h)];
    return n.score + n.future;
  }

  // Keeps the `keep` best entries by score plus future cost, ties to the
  // earlier node, and drops the rest from recombination.
  void Prune(std::vector<int>& stack, std::size_t keep) {
    auto better = [&](int a, int b) {
      const double x = Total(a);
      const double y = Total(b);
      return x != y ? x > y : a < b;
    };
    if (stack.size() > keep) {
      std::nth_element(stack.begin(), stack.begin() + static_cast<long>(keep), stack.end(),
                       better);
      for (std::size_t i = keep; i < stack.size(); ++i) {
        alive_[static_cast<std::size_t>(stack[i])] = 0;
      }
      stack.resize(keep);
    }
    std::sort(stack.begin(), stack.end(), better);
  }

  void Expand(int h) {
    const int dl = params_.distortion_limit;
    const Coverage cov = nodes_[static_cast<std::size_t>(h)].coverage;
    const std::vector<int> state = nodes_[static_cast<std::size_t>(h)].lm_state;
    const int last_end = nodes_[static_cast<std::size_t>(h)].last_end;
    const int covered = nodes_[static_cast<std::size_t>(h)].covered;
    const double score = nodes_[static_cast<std::size_t>(h)].score;
    const double future = nodes_[static_cast<std::size_t>(h)].future;
    const int first_gap = cov.FirstGap(n_);

    // Bounds of the uncovered run around each uncovered position.
    std::vector<int> run_begin(static_cast<std::size_t>(n_)), run_end(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_;) {
      if (cov.Test(i)) {
        ++i;
        continue;
      }
      int j = i;
      while (j < n_ && !cov.Test(j)) ++j;
      for (int k = i; k < j; ++k) {
        run_begin[static_cast<std::size_t>(k)] = i;
        run_end[static_cast<std::size_t>(k)] = j;
      }
      i = j;
    }
    auto fc = [&](int i, int j) {
      return future_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    };

    std::vector<int> next_state(state.size());
    for (int b = first_gap; b < n_; ++b) {
      if (cov.Test(b)) continue;
      const int jump = std::abs(b - last_end);
      if (dl >= 0 && jump > dl) continue;
      const int rb = run_begin[static_cast<std::size_t>(b)];
      const int re = run_end[static_cast<std::size_t>(b)];
      for (int oi : by_begin_[static_cast<std::size_t>(b)]) {
        const Option& o = options_[static_cast<std::size_t>(oi)];
        if (o.end > re) continue;
        if (dl >= 0) {
          // Leave a way back to the first gap.
          const int gap = b == first_gap ? (o.end < re ? o.end : cov.FirstGapFrom(re, n_))
                                         : first_gap;
          if (gap < o.end && o.end - gap > dl) continue;
        }
        const double next_future = future - fc(rb, re) + (rb < b ? fc(rb, b) : 0.0) +
                                   (o.end < re ? fc(o.end, re) : 0.0);
        const auto slot = static_cast<std::size_t>(covered + (o.end - o.begin));
        const double partial = score + o.static_score - w_.distortion * jump;
        if (w_.lm >= 0.0 && partial + next_future < threshold_[slot]) continue;

        double lm = 0.0;
        std::copy(state.begin(), state.end(), next_state.begin());
        for (int id : o.lm_ids) {
          lm += lm_.ConditionalLogprob(std::span<const int>(next_state), id);
          if (!next_state.empty()) {
            std::copy(next_state.begin() + 1, next_state.end(), next_state.begin());
            next_state.back() = id;
          }
        }
        Arc arc;
        arc.prev = h;
        arc.option = oi;
        arc.delta[0] = kLn10 * lm;
        for (std::size_t k = 0; k < kNumPhraseFeatures; ++k) arc.delta[1 + k] = o.phrase[k];
        arc.delta[5] = -static_cast<double>(jump);
        arc.delta[6] = -static_cast<double>(o.tokens.size());
        arc.score = partial + w_.lm * arc.delta[0];
        if (arc.score + next_future < threshold_[slot]) continue;

        Coverage next_cov = cov;
        for (int i = o.begin; i < o.end; ++i) next_cov.Set(i);
        Node next{std::move(next_cov), next_state, o.end, static_cast<int>(slot), arc.score,
                  next_future, -1, {}};
        Insert(std::move(next), arc);
      }
    }
  }

  static std::string Key(const Node& n) {
    std::string key;
    const auto& words = n.coverage.words();
    key.append(reinterpret_cast<const char*>(words.data()), words.size() * sizeof(std::uint64_t));
    key.append(reinterpret_cast<const char*>(n.lm_state.data()), n.lm_state.size() * sizeof(int));
    key.append(reinterpret_cast<const char*>(&n.last_end), sizeof(int));
    return key;
  }

  void Insert(Node&& next, const Arc& arc) {
    const auto slot = static_cast<std::size_t>(next.covered);
    const int id = static_cast<int>(nodes_.size());
    if (params_.recombine) {
      std::string key = Key(next);
      auto [it, fresh] = index_[slot].try_emplace(std::move(key), id);
      if (!fresh && alive_[static_cast<std::size_t>(it->second)]) {
        Node& existing = nodes_[static_cast<std::size_t>(it->second)];
        existing.arcs.push_back(arc);
        const Arc& incumbent = existing.arcs[static_cast<std::size_t>(existing.best_arc)];
        if (Prefer(arc, incumbent)) {
          existing.best_arc = static_cast<int>(existing.arcs.size()) - 1;
          existing.score = arc.score;
        }
        return;
      }
      it->second = id;
    }
    next.arcs.push_back(arc);
    next.best_arc = 0;
    nodes_.push_back(std::move(next));
    alive_.push_back(1);
    auto& stack = stacks_[slot];
    stack.push_back(id);
    const auto size = static_cast<std::size_t>(params_.stack_size);
    if (stack.size() >= 2 * size) {
      Prune(stack, size);
      threshold_[slot] = Total(stack.back());
    }
  }

  // Output tokens of the best path ending with `arc`.
  std::vector<std::string> TokensVia(const Arc& arc) const {
    std::vector<const Option*> chain;
    if (arc.option >= 0) chain.push_back(&options_[static_cast<std::size_t>(arc.option)]);
    for (int h = arc.prev; h >= 0;) {
      const Node& node = nodes_[static_cast<std::size_t>(h)];
      if (node.best_arc < 0) break;
      const Arc& a = node.arcs[static_cast<std::size_t>(node.best_arc)];
      chain.push_back(&options_[static_cast<std::size_t>(a.option)]);
      h = a.prev;
    }
    std::vector<std::string> out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      out.insert(out.end(), (*it)->tokens.begin(), (*it)->tokens.end());
    }
    return out;
  }

  // Higher score wins; exact ties go to the lexicographically smaller output.
  bool Prefer(const Arc& a, const Arc& b) const {
    if (a.score != b.score) return a.score > b.score;
    return TokensVia(a) < TokensVia(b);
  }

  // Extends a partial choice list with winning arcs down to the root.
  std::vector<int> Complete(std::vector<int> choice) const {
    int head = -1;
    for (int c : choice) {
      const auto& arcs = head < 0 ? goal_arcs_ : nodes_[static_cast<std::size_t>(head)].arcs;
      head = arcs[static_cast<std::size_t>(c)].prev;
    }
    while (head >= 0) {
      const Node& node = nodes_[static_cast<std::size_t>(head)];
      if (node.best_arc < 0) break;
      choice.push_back(node.best_arc);
      head = node.arcs[static_cast<std::size_t>(node.best_arc)].prev;
    }
    return choice;
  }

  Translation Materialize(const std::vector<int>& choice) const {
    Translation t;
    std::vector<const Option*> chain;
    int head = -1;
    double score = 0.0;
    for (std::size_t d = 0; d < choice.size(); ++d) {
      const auto& arcs = head < 0 ? goal_arcs_ : nodes_[static_cast<std::size_t>(head)].arcs;
      const Arc& a = arcs[static_cast<std::size_t>(choice[d])];
      if (d == 0) score = a.score;
      for (std::size_t k = 0; k < kNumFeatures; ++k) t.features[k] += a.delta[k];
      if (a.option >= 0) chain.push_back(&options_[static_cast<std::size_t>(a.option)]);
      head = a.prev;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      t.tokens.insert(t.tokens.end(), (*it)->tokens.begin(), (*it)->tokens.end());
    }
    t.score = score;
    return t;
  }

  int n_;
  const LanguageModel& lm_;
  const DecoderWeights& w_;
  const DecoderParams& params_;
  std::vector<Option> options_;
  FutureCostTable future_;
  std::vector<std::vector<int>> by_begin_;
  std::vector<Node> nodes_;
  std::vector<char> alive_;
  std::vector<std::vector<int>> stacks_;
  std::vector<std::unordered_map<std::string, int>> index_;
  // Candidates scoring below this can no longer make their stack.
  std::vector<double> threshold_;
  std::vector<Arc> goal_arcs_;
  int goal_best_ = -1;
};

void CheckParams(const DecoderParams& p) {
  if (p.stack_size < 1) throw std::invalid_argument("stack_size must be >= 1");
  if (p.table_limit < 0) throw std::invalid_argument("table_limit must be >= 0");
  if (!std::isfinite(p.copy_penalty)) throw std::invalid_argument("copy_penalty must be finite");
}

}  // namespace

FeatureVector DecoderWeights::AsVector() const {
  return {lm, phrase[0], phrase[1], phrase[2], phrase[3], distortion, word_penalty};
}

double DecoderWeights::Dot(const FeatureVector& f) const {
  const FeatureVector w = AsVector();
  double s = 0.0;
  for (std::size_t k = 0; k < kNumFeatures; ++k) s += w[k] * f[k];
  return s;
}

FutureCostTable EstimateFutureCost(const std::vector<std::string>& source,
                                   const PhraseTable& table,
                                   const LanguageModel& lm,
                                   const DecoderWeights& weights,
                                   const DecoderParams& params) {
  const auto options = CollectOptions(source, table, lm, weights, params);
  return FutureFromOptions(static_cast<int>(source.size()), options);
}

Decoder::Decoder(const PhraseTable& table, const LanguageModel& lm,
                 DecoderWeights weights, DecoderParams params)
    : table_(table), lm_(lm), weights_(weights), params_(params) {
  CheckParams(params_);
  for (double w : weights_.AsVector()) {
    if (!std::isfinite(w)) throw std::invalid_argument("decoder weights must be finite");
  }
}

Translation Decoder::Decode(const std::vector<std::string>& source) const {
  if (source.empty()) throw std::invalid_argument("cannot decode an empty source");
  Search search(source, table_, lm_, weights_, params_);
  search.Run();
  return search.Best();
}

NBestList Decoder::NBest(const std::vector<std::string>& source, int n) const {
  if (n < 1) throw std::invalid_argument("n-best size must be >= 1");
  if (source.empty()) throw std::invalid_argument("cannot decode an empty source");
  Search search(source, table_, lm_, weights_, params_);
  search.Run();
  return search.NBest(n);
}

std::string FormatNBestLine(std::size_t sentence_id, const std::string& text,
                            const Translation& t) {
  std::ostringstream out;
  out.precision(10);
  out << sentence_id << " ||| " << text << " |||";
  for (double f : t.features) out << ' ' << f;
  out << " ||| " << t.score;
  return out.str();
}

}  // namespace phrasekit
