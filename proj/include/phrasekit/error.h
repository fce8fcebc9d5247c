#ifndef PHRASEKIT_ERROR_H_
#define PHRASEKIT_ERROR_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace phrasekit {

// Failure to open, read or write a file or stream.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates its format contract (malformed line, bad UTF-8,
// corrupt model file, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A binary artifact failed its integrity check.
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

// A pipeline stage needs an artifact that is missing or stale.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote endpoint refused our credentials.
class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration problems, all collected before reporting.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace phrasekit

#endif  // PHRASEKIT_ERROR_H_
