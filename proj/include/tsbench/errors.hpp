#pragma once

#include <stdexcept>
#include <string>

namespace tsbench {

// Shape/dimension mismatch between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// API misuse (bad argument values, wrong call order).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematically invalid input (zero-norm vector, etc.).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input file; message carries the 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_number(line) {}
  std::size_t line_number;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tsbench
