#include "phrasekit/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>

#include "phrasekit/error.h"
#include "phrasekit/hashing.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty() ? "invalid configuration" : problems.front()),
      problems_(std::move(problems)) {}

namespace {

namespace fs = std::filesystem;

struct KeySpec {
  std::string key;
  std::string section;
  // Returns an error message, empty on success.
  std::function<std::string(PipelineConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<long long> ToInt(const std::string& s) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> ToDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

template <typename T, typename Field>
KeySpec Integer(std::string key, std::string section, Field field, long long lo, long long hi) {
  KeySpec k{key, section, nullptr, nullptr};
  k.set = [key, field, lo, hi](PipelineConfig& c, const std::string& v, const fs::path&) {
    const auto n = ToInt(v);
    if (!n) return key + ": expected an integer, got '" + v + "'";
    if (*n < lo || *n > hi) {
      return key + " = " + v + " is out of range [" + std::to_string(lo) + ", " +
             std::to_string(hi) + "]";
    }
    field(c) = static_cast<T>(*n);
    return std::string();
  };
  k.get = [field](const PipelineConfig& c) {
    return std::to_string(field(const_cast<PipelineConfig&>(c)));
  };
  return k;
}

enum class Bound { kAny, kPositive, kNonNegative, kOpenUnit };

template <typename Field>
KeySpec Real(std::string key, std::string section, Field field, Bound bound) {
  KeySpec k{key, section, nullptr, nullptr};
  k.set = [key, field, bound](PipelineConfig& c, const std::string& v, const fs::path&) {
    const auto d = ToDouble(v);
    if (!d) return key + ": expected a finite number, got '" + v + "'";
    const char* range = nullptr;
    if (bound == Bound::kPositive && !(*d > 0)) range = "(0, inf)";
    if (bound == Bound::kNonNegative && !(*d >= 0)) range = "[0, inf)";
    if (bound == Bound::kOpenUnit && !(*d > 0 && *d < 1)) range = "(0, 1)";
    if (range) return key + " = " + v + " is out of range " + range;
    field(c) = *d;
    return std::string();
  };
  k.get = [field](const PipelineConfig& c) { return Num(field(const_cast<PipelineConfig&>(c))); };
  return k;
}

template <typename Field>
KeySpec Boolean(std::string key, std::string section, Field field) {
  KeySpec k{key, section, nullptr, nullptr};
  k.set = [key, field](PipelineConfig& c, const std::string& v, const fs::path&) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") {
      field(c) = true;
    } else if (v == "false" || v == "no" || v == "off" || v == "0") {
      field(c) = false;
    } else {
      return key + ": expected true or false, got '" + v + "'";
    }
    return std::string();
  };
  k.get = [field](const PipelineConfig& c) {
    return std::string(field(const_cast<PipelineConfig&>(c)) ? "true" : "false");
  };
  return k;
}

template <typename Field>
KeySpec Text(std::string key, std::string section, Field field, bool allow_empty = true) {
  KeySpec k{key, section, nullptr, nullptr};
  k.set = [key, field, allow_empty](PipelineConfig& c, const std::string& v, const fs::path&) {
    if (!allow_empty && v.empty()) return key + ": must not be empty";
    field(c) = v;
    return std::string();
  };
  k.get = [field](const PipelineConfig& c) { return field(const_cast<PipelineConfig&>(c)); };
  return k;
}

template <typename Field>
KeySpec Path(std::string key, std::string section, Field field) {
  KeySpec k{key, section, nullptr, nullptr};
  k.set = [key, field](PipelineConfig& c, const std::string& v, const fs::path& base) {
    if (v.empty()) return key + ": empty path";
    const fs::path p(v);
    field(c) = p.is_absolute() ? p : (base / p).lexically_normal();
    return std::string();
  };
  k.get = [field](const PipelineConfig& c) {
    return field(const_cast<PipelineConfig&>(c)).string();
  };
  return k;
}

#define FIELD(expr) [](PipelineConfig & c) -> auto& { return c.expr; }

const std::vector<KeySpec>& Specs() {
  static const std::vector<KeySpec> specs = [] {
    constexpr long long kBig = 1000000000;
    std::vector<KeySpec> s;
    s.push_back(Path("corpus", "paths", FIELD(corpus)));
    s.push_back(Path("test_corpus", "paths", FIELD(test_corpus)));
    s.push_back(Path("workdir", "paths", FIELD(workdir)));

    s.push_back(Integer<std::size_t>("max_source_chars", "corpus", FIELD(max_source_chars), 1, kBig));
    s.push_back(Integer<std::size_t>("max_target_chars", "corpus", FIELD(max_target_chars), 1, kBig));
    s.push_back(Real("train_fraction", "corpus", FIELD(train_fraction), Bound::kOpenUnit));

    s.push_back(Integer<std::size_t>("vocab_size", "tokenizer", FIELD(vocab_size), 4, 100000000));
    s.push_back(Boolean("char_mode", "tokenizer", FIELD(char_mode)));

    s.push_back(Integer<int>("lm_order", "lm", FIELD(lm_order), 1, 10));
    s.push_back(Integer<int>("alignment_iterations", "alignment", FIELD(alignment_iterations), 1, 1000));
    s.push_back(Integer<int>("max_phrase_len", "phrases", FIELD(max_phrase_len), 1, 32));

    s.push_back(Integer<int>("stack_size", "decoder", FIELD(decoder.stack_size), 1, 10000000));
    s.push_back(Integer<int>("distortion_limit", "decoder", FIELD(decoder.distortion_limit), -1, 1000));
    s.push_back(Boolean("recombine", "decoder", FIELD(decoder.recombine)));
    s.push_back(Integer<int>("table_limit", "decoder", FIELD(decoder.table_limit), 0, 1000000));
    s.push_back(Real("copy_penalty", "decoder", FIELD(decoder.copy_penalty), Bound::kAny));
    s.push_back(Integer<int>("nbest", "decoder", FIELD(nbest), 0, 100000));
    s.push_back(Real("weight_lm", "decoder", FIELD(weights.lm), Bound::kAny));
    s.push_back(Real("weight_phi_ts", "decoder", FIELD(weights.phrase[0]), Bound::kAny));
    s.push_back(Real("weight_phi_st", "decoder", FIELD(weights.phrase[1]), Bound::kAny));
    s.push_back(Real("weight_lex_ts", "decoder", FIELD(weights.phrase[2]), Bound::kAny));
    s.push_back(Real("weight_lex_st", "decoder", FIELD(weights.phrase[3]), Bound::kAny));
    s.push_back(Real("weight_distortion", "decoder", FIELD(weights.distortion), Bound::kAny));
    s.push_back(Real("weight_word_penalty", "decoder", FIELD(weights.word_penalty), Bound::kAny));

    s.push_back(Real("smoothing_floor", "evaluation", FIELD(floor_value), Bound::kPositive));
    s.push_back(Real("smoothing_addk", "evaluation", FIELD(addk_value), Bound::kPositive));
    s.push_back(Integer<int>("buckets", "evaluation", FIELD(buckets), 2, 100));

    s.push_back(Text("endpoint", "icl", FIELD(endpoint.base_url)));
    s.push_back(Text("model", "icl", FIELD(endpoint.model)));
    s.push_back(Text("token_env", "icl", FIELD(endpoint.token_env)));
    {
      KeySpec k{"api_style", "icl", nullptr, nullptr};
      k.set = [](PipelineConfig& c, const std::string& v, const fs::path&) {
        if (v == "chat") {
          c.endpoint.style = ApiStyle::kChat;
        } else if (v == "completions") {
          c.endpoint.style = ApiStyle::kCompletions;
        } else {
          return "api_style: expected chat or completions, got '" + v + "'";
        }
        return std::string();
      };
      k.get = [](const PipelineConfig& c) {
        return std::string(c.endpoint.style == ApiStyle::kChat ? "chat" : "completions");
      };
      s.push_back(std::move(k));
    }
    {
      KeySpec k = Text("template", "icl", FIELD(prompt.pattern), false);
      auto base_set = k.set;
      k.set = [base_set](PipelineConfig& c, const std::string& v, const fs::path& b) {
        PromptTemplate t;
        t.pattern = v;
        try {
          t.Validate();
        } catch (const std::invalid_argument& e) {
          return std::string("template: ") + e.what();
        }
        return base_set(c, v, b);
      };
      s.push_back(std::move(k));
    }
    s.push_back(Text("separator", "icl", FIELD(prompt.separator)));
    s.push_back(Integer<std::size_t>("icl_k", "icl", FIELD(icl_k), 0, 1000000));
    s.push_back(Integer<std::size_t>("icl_limit", "icl", FIELD(icl_limit), 1, kBig));
    s.push_back(Integer<int>("concurrency", "icl", FIELD(endpoint.max_concurrency), 1, 256));
    s.push_back(Real("timeout", "icl", FIELD(endpoint.timeout_seconds), Bound::kPositive));
    s.push_back(Integer<int>("retries", "icl", FIELD(endpoint.retry.max_retries), 0, 100));
    s.push_back(Real("backoff", "icl", FIELD(endpoint.retry.backoff_base_seconds), Bound::kNonNegative));
    s.push_back(Integer<int>("max_tokens", "icl", FIELD(endpoint.max_tokens), 1, 1000000));

    {
      KeySpec k{"seed", "run", nullptr, nullptr};
      k.set = [](PipelineConfig& c, const std::string& v, const fs::path&) {
        std::uint64_t n = 0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc() || end != v.data() + v.size()) {
          return "seed: expected a non-negative integer, got '" + v + "'";
        }
        c.seed = n;
        return std::string();
      };
      k.get = [](const PipelineConfig& c) { return std::to_string(c.seed); };
      s.push_back(std::move(k));
    }
    s.push_back(Integer<int>("jobs", "run", FIELD(jobs), 1, 1024));
    return s;
  }();
  return specs;
}

#undef FIELD

const KeySpec* FindSpec(std::string_view key) {
  for (const auto& s : Specs()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

bool KnownSection(std::string_view name) {
  for (const auto& s : Specs()) {
    if (s.section == name) return true;
  }
  return false;
}

std::string NearestKey(std::string_view key) {
  std::string best;
  std::size_t best_d = 0;
  for (const auto& k : ConfigKeys()) {
    const std::size_t d = EditDistance(key, k);
    if (best.empty() || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

// Returns false if the quoted value is malformed.
bool Unquote(std::string_view v, std::string* out) {
  out->clear();
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') return false;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    char c = v[i];
    if (c == '"') return false;
    if (c == '\\') {
      if (i + 2 >= v.size()) return false;
      switch (v[++i]) {
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        default: return false;
      }
    }
    *out += c;
  }
  return true;
}

std::string Escape(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out + '"';
}

}  // namespace

const std::vector<std::string>& ConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : Specs()) k.push_back(s.key);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

std::size_t EditDistance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string PipelineConfig::Canonical() const {
  std::vector<std::string> lines;
  for (const auto& s : Specs()) {
    // The work directory names where artifacts go, not what they contain.
    if (s.key == "workdir") continue;
    lines.push_back(s.key + " = " + Escape(s.get(*this)));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

PipelineConfig ParseConfig(std::string_view text, const fs::path& base_dir) {
  PipelineConfig config;
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> seen;
  std::string section;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    const std::string_view line = TrimAscii(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + "malformed section header");
        continue;
      }
      section = std::string(TrimAscii(line.substr(1, line.size() - 2)));
      if (!KnownSection(section)) problems.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back(where + "expected key = value");
      continue;
    }
    const std::string key(TrimAscii(line.substr(0, eq)));
    std::string value(TrimAscii(line.substr(eq + 1)));
    if (!value.empty() && value.front() == '"') {
      std::string unquoted;
      if (!Unquote(value, &unquoted)) {
        problems.push_back(where + key + ": malformed quoted value");
        continue;
      }
      value = std::move(unquoted);
    }

    const KeySpec* spec = FindSpec(key);
    if (spec == nullptr) {
      problems.push_back(where + "unknown key '" + key + "' (did you mean '" + NearestKey(key) +
                         "'?)");
      continue;
    }
    if (!section.empty() && section != spec->section && KnownSection(section)) {
      problems.push_back(where + "key '" + key + "' belongs in [" + spec->section + "], not [" +
                         section + "]");
      continue;
    }
    if (auto it = seen.find(key); it != seen.end()) {
      problems.push_back(where + "duplicate key '" + key + "' (first set on line " +
                         std::to_string(it->second) + ")");
      continue;
    }
    seen.emplace(key, line_no);
    if (std::string err = spec->set(config, value, base_dir); !err.empty()) {
      problems.push_back(where + err);
    }
  }

  if (!config.workdir.is_absolute()) config.workdir = (base_dir / config.workdir).lexically_normal();
  for (const auto* p : {&config.corpus, &config.test_corpus}) {
    if (!p->empty() && !fs::exists(*p)) problems.push_back("file not found: " + p->string());
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

PipelineConfig LoadConfig(const fs::path& path) {
  const std::string text = ReadFile(path);
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return ParseConfig(text, dir);
}

}  // namespace phrasekit
