#ifndef PHRASEKIT_ICL_H_
#define PHRASEKIT_ICL_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phrasekit/corpus.h"

namespace phrasekit {

inline constexpr std::string_view kSrcPlaceholder = "{src}";
inline constexpr std::string_view kTgtPlaceholder = "{tgt}";

struct PromptTemplate {
  std::string pattern = "{src} = {tgt}";
  std::string separator = "\n";

  // Throws std::invalid_argument unless the pattern has exactly one {src}
  // followed later by exactly one {tgt}.
  void Validate() const;
};

struct Exemplar {
  std::string x;
  std::string y;

  bool operator==(const Exemplar&) const = default;
};

// Substitutes both placeholders in one pass; the inserted text is never
// rescanned.
std::string RenderClause(const PromptTemplate& t, std::string_view src,
                         std::string_view tgt);

// Rendered exemplars joined by the separator, then the separator and the
// test clause cut just before {tgt}.
std::string BuildPrompt(const PromptTemplate& t,
                        const std::vector<Exemplar>& exemplars,
                        std::string_view test_source);

// Seeded sample of k pairs without replacement, in draw order. Throws
// std::invalid_argument if k exceeds the corpus size.
std::vector<Exemplar> SampleExemplars(const ParallelCorpus& train,
                                      std::size_t k, std::uint64_t seed);

struct RetryPolicy {
  int max_retries = 3;
  double backoff_base_seconds = 0.5;  // delay before retry r is base * 2^r
};

enum class ApiStyle { kChat, kCompletions };

struct EndpointConfig {
  // e.g. "http://127.0.0.1:8000/v1"; "/chat/completions" or "/completions"
  // is appended.
  std::string base_url;
  // Environment variable holding the bearer token; unset or empty means no
  // Authorization header.
  std::string token_env = "PHRASEKIT_API_TOKEN";
  std::string model;
  ApiStyle style = ApiStyle::kChat;
  double timeout_seconds = 60.0;
  int max_concurrency = 4;
  int max_tokens = 256;
  RetryPolicy retry;

  // Throws std::invalid_argument.
  void Validate() const;
};

struct IclRecord {
  std::size_t index = 0;
  std::string prompt;
  std::string hypothesis;
  int attempts = 0;
  int status = 0;  // last HTTP status, 0 if no response
  std::string raw_response;
  std::string error;
};

struct IclResult {
  std::vector<std::string> hypotheses;  // aligned with the input prompts
  std::vector<IclRecord> records;
};

// Sends the first min(test_limit, prompts.size()) prompts with greedy
// decoding, at most max_concurrency at a time. Network errors, 429 and 5xx
// are retried with exponential backoff; when retries run out, or the
// response is not the expected JSON, the hypothesis is empty and the error
// is recorded. Throws AuthError on 401/403, std::invalid_argument on an
// invalid config or no prompts.
IclResult RunIcl(const EndpointConfig& config,
                 const std::vector<std::string>& prompts,
                 std::size_t test_limit = 1000);

// One JSON object per record. The bearer token never appears in it.
std::string AuditJsonl(const IclResult& result, const EndpointConfig& config);

}  // namespace phrasekit

#endif  // PHRASEKIT_ICL_H_
