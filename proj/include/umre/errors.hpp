#pragma once

#include <stdexcept>
#include <string>

namespace umre {

// bad config / bad input files -> CLI exit 2
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// numeric breakdown at runtime -> CLI exit 3
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace umre
