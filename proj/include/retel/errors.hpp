#pragma once

#include <stdexcept>
#include <string>

namespace retel {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IngestError : std::runtime_error {
  IngestError(const std::string& msg, int row, int col)
      : std::runtime_error(msg), row(row), col(col) {}
  int row;
  int col;
};

// Non-finite estimating function output, bad matrix dimensions, etc.
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& msg, double partial)
      : std::runtime_error(msg), partial(partial) {}
  double partial;
};

}  // namespace retel
