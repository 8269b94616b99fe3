#pragma once

#include <stdexcept>
#include <string>

namespace advkit {

// Error taxonomy. CLI maps these onto exit codes: usage errors are handled
// by the argument parser, ConfigError/DataError exit 2, NumericError exit 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct VocabError : DataError {
  explicit VocabError(const std::string& msg) : DataError(msg) {}
};

// Degenerate numerics: zero-norm embeddings, non-finite losses. Fatal by
// contract; the trainer surfaces the last good checkpoint before rethrowing.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

using ActionId = int;
using AdverbId = int;

}  // namespace advkit
