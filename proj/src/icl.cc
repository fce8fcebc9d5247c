#include "phrasekit/icl.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "phrasekit/error.h"
#include "phrasekit/random.h"
#include "phrasekit/unicode.h"

namespace phrasekit {

namespace {

using nlohmann::json;

std::size_t CountOccurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

struct Target {
  std::string scheme_host_port;
  std::string path;
};

Target ParseUrl(const EndpointConfig& config) {
  const std::string& url = config.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint URL needs a scheme: " + url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Target t;
  t.scheme_host_port = url.substr(0, path_begin);
  std::string base = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!base.empty() && base.back() == '/') base.pop_back();
  t.path = base + (config.style == ApiStyle::kChat ? "/chat/completions" : "/completions");
  return t;
}

std::string RequestBody(const EndpointConfig& config, const std::string& prompt) {
  json body;
  body["model"] = config.model;
  if (config.style == ApiStyle::kChat) {
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  body["temperature"] = 0;
  body["max_tokens"] = config.max_tokens;
  return body.dump();
}

// False on malformed responses.
bool ExtractText(ApiStyle style, const std::string& raw, std::string* text) {
  const json doc = json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return false;
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return false;
  const json& first = (*choices)[0];
  const json* value = nullptr;
  if (style == ApiStyle::kChat) {
    const auto msg = first.find("message");
    if (msg == first.end() || !msg->is_object()) return false;
    const auto content = msg->find("content");
    if (content != msg->end()) value = &*content;
  } else {
    const auto t = first.find("text");
    if (t != first.end()) value = &*t;
  }
  if (value == nullptr || !value->is_string()) return false;
  *text = std::string(TrimAscii(value->get<std::string>()));
  return true;
}

bool Transient(int status) { return status == 429 || status >= 500; }

std::string Redact(std::string s, const std::string& secret) {
  if (secret.empty()) return s;
  for (auto pos = s.find(secret); pos != std::string::npos; pos = s.find(secret, pos)) {
    s.replace(pos, secret.size(), "[redacted]");
  }
  return s;
}

std::string TokenFor(const EndpointConfig& config) {
  if (config.token_env.empty()) return "";
  const char* v = std::getenv(config.token_env.c_str());
  return v ? v : "";
}

}  // namespace

void PromptTemplate::Validate() const {
  if (CountOccurrences(pattern, kSrcPlaceholder) != 1 ||
      CountOccurrences(pattern, kTgtPlaceholder) != 1) {
    throw std::invalid_argument("template must contain {src} and {tgt} exactly once");
  }
  if (pattern.find(kTgtPlaceholder) < pattern.find(kSrcPlaceholder)) {
    throw std::invalid_argument("template must place {src} before {tgt}");
  }
}

std::string RenderClause(const PromptTemplate& t, std::string_view src, std::string_view tgt) {
  t.Validate();
  std::string out;
  std::string_view p = t.pattern;
  std::size_t i = 0;
  while (i < p.size()) {
    if (p.substr(i, kSrcPlaceholder.size()) == kSrcPlaceholder) {
      out += src;
      i += kSrcPlaceholder.size();
    } else if (p.substr(i, kTgtPlaceholder.size()) == kTgtPlaceholder) {
      out += tgt;
      i += kTgtPlaceholder.size();
    } else {
      out += p[i++];
    }
  }
  return out;
}

std::string BuildPrompt(const PromptTemplate& t, const std::vector<Exemplar>& exemplars,
                        std::string_view test_source) {
  t.Validate();
  std::string out;
  for (const auto& e : exemplars) {
    out += RenderClause(t, e.x, e.y);
    out += t.separator;
  }
  const std::string_view head =
      std::string_view(t.pattern).substr(0, t.pattern.find(kTgtPlaceholder));
  const auto at = head.find(kSrcPlaceholder);
  out += head.substr(0, at);
  out += test_source;
  out += head.substr(at + kSrcPlaceholder.size());
  return out;
}

std::vector<Exemplar> SampleExemplars(const ParallelCorpus& train, std::size_t k,
                                      std::uint64_t seed) {
  const std::size_t n = train.size();
  if (k > n) {
    throw std::invalid_argument("cannot sample " + std::to_string(k) + " exemplars from " +
                                std::to_string(n) + " pairs");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng(seed);
  std::vector<Exemplar> out;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Below(n - i));
    std::swap(order[i], order[j]);
    const auto& p = train.pairs[order[i]];
    out.push_back({p.source, p.target});
  }
  return out;
}

void EndpointConfig::Validate() const {
  if (base_url.empty()) throw std::invalid_argument("endpoint URL is empty");
  if (model.empty()) throw std::invalid_argument("model name is empty");
  if (!(timeout_seconds > 0.0)) throw std::invalid_argument("timeout must be > 0");
  if (max_concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  if (retry.max_retries < 0) throw std::invalid_argument("retry count must be >= 0");
  if (!(retry.backoff_base_seconds >= 0.0)) {
    throw std::invalid_argument("backoff base must be >= 0");
  }
}

IclResult RunIcl(const EndpointConfig& config, const std::vector<std::string>& prompts,
                 std::size_t test_limit) {
  config.Validate();
  if (prompts.empty()) throw std::invalid_argument("no prompts");
  const Target target = ParseUrl(config);
  const std::string token = TokenFor(config);
  const std::size_t n = std::min(test_limit, prompts.size());

  IclResult result;
  result.hypotheses.resize(n);
  result.records.resize(n);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> auth_failed{false};
  std::mutex error_mu;
  std::string auth_message;

  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  auto worker = [&] {
    httplib::Client client(target.scheme_host_port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    if (!token.empty()) client.set_bearer_token_auth(token);

    for (std::size_t i = next++; i < n && !auth_failed; i = next++) {
      IclRecord& rec = result.records[i];
      rec.index = i;
      rec.prompt = prompts[i];
      const std::string body = RequestBody(config, prompts[i]);
      for (int attempt = 0; attempt <= config.retry.max_retries; ++attempt) {
        if (attempt > 0) {
          std::this_thread::sleep_for(std::chrono::duration<double>(
              config.retry.backoff_base_seconds * std::pow(2.0, attempt - 1)));
        }
        ++rec.attempts;
        auto res = client.Post(target.path, body, "application/json");
        if (!res) {
          rec.status = 0;
          rec.error = "network error: " + httplib::to_string(res.error());
          continue;
        }
        rec.status = res->status;
        rec.raw_response = res->body;
        if (res->status == 401 || res->status == 403) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!auth_failed.exchange(true)) {
            auth_message = "endpoint rejected credentials (HTTP " +
                           std::to_string(res->status) + ")";
          }
          rec.error = "auth failure";
          break;
        }
        if (Transient(res->status)) {
          rec.error = "HTTP " + std::to_string(res->status);
          continue;
        }
        if (res->status != 200) {
          rec.error = "HTTP " + std::to_string(res->status);
          break;
        }
        std::string text;
        if (ExtractText(config.style, res->body, &text)) {
          rec.hypothesis = std::move(text);
          rec.error.clear();
        } else {
          rec.error = "malformed response JSON";
        }
        break;
      }
      result.hypotheses[i] = rec.hypothesis;
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.max_concurrency), n);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (auth_failed) throw AuthError(auth_message);
  return result;
}

std::string AuditJsonl(const IclResult& result, const EndpointConfig& config) {
  const std::string token = TokenFor(config);
  std::string out;
  for (const auto& r : result.records) {
    json j;
    j["index"] = r.index;
    j["model"] = config.model;
    j["prompt"] = r.prompt;
    j["hypothesis"] = r.hypothesis;
    j["attempts"] = r.attempts;
    j["retries"] = r.attempts > 0 ? r.attempts - 1 : 0;
    j["status"] = r.status;
    j["response"] = r.raw_response;
    j["error"] = r.error;
    out += Redact(j.dump(-1, ' ', false, json::error_handler_t::replace), token);
    out += '\n';
  }
  return out;
}

}  // namespace phrasekit
