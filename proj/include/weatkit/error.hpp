#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace weatkit {

// Error taxonomy, mirrored by the CLI exit codes:
//   ConfigError -> 1 (usage / configuration)
//   DataError   -> 2 (malformed or insufficient input data)
//   NumericError-> 3 (numerical failure: rank deficiency, degeneracy, ...)
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-vocabulary lookup. Carries the offending tokens so callers can
// report exactly which words were missing.
class OovError : public DataError {
 public:
  OovError(const std::string& what, std::vector<std::string> tokens)
      : DataError(what), tokens_(std::move(tokens)) {}

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
};

inline std::string join_tokens(const std::vector<std::string>& tokens,
                               const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace weatkit
