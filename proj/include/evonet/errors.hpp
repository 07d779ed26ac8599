#pragma once

#include <stdexcept>
#include <string>

namespace evonet {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct EmptyDataset : Error {
  using Error::Error;
};

struct EmptyPopulation : Error {
  using Error::Error;
};

struct BudgetTooSmall : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : Error(msg + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct InconsistentWidth : Error {
  using Error::Error;
};

struct EmptyFile : Error {
  using Error::Error;
};

struct DegenerateSplit : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace evonet
