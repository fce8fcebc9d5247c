#ifndef PHRASEKIT_TESTS_SUPPORT_MOCK_ENDPOINT_H_
#define PHRASEKIT_TESTS_SUPPORT_MOCK_ENDPOINT_H_

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace phrasekit::testing {

// Local OpenAI-style endpoint on 127.0.0.1. Every successful reply echoes
// the prompt's last line prefixed with "re:", so callers can check which
// prompt an answer belongs to.
class MockEndpoint {
 public:
  enum class Mode {
    kEcho,
    kUnauthorized,  // every request gets 401
    kMalformed,     // 200 with a body that is not the expected JSON
  };

  explicit MockEndpoint(Mode mode = Mode::kEcho, int fail_first = 0);
  ~MockEndpoint();
  MockEndpoint(const MockEndpoint&) = delete;
  MockEndpoint& operator=(const MockEndpoint&) = delete;

  // e.g. "http://127.0.0.1:40123/v1"
  std::string base_url() const;

  int requests() const { return requests_; }
  std::vector<std::string> authorization_headers() const;

 private:
  Mode mode_;
  int fail_first_;  // per prompt, answered with 503 before succeeding
  int port_ = 0;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::map<std::string, int> failures_;
  std::vector<std::string> auth_;
};

}  // namespace phrasekit::testing

#endif  // PHRASEKIT_TESTS_SUPPORT_MOCK_ENDPOINT_H_
