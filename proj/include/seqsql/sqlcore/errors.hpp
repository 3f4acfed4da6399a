#pragma once

#include <stdexcept>
#include <string>

namespace seqsql {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t position)
      : std::runtime_error(msg + " (at offset " + std::to_string(position) + ")"),
        pos(position) {}
  size_t pos;
};

struct UnsupportedConstructError : std::runtime_error {
  explicit UnsupportedConstructError(const std::string& construct)
      : std::runtime_error("unsupported construct: " + construct),
        construct(construct) {}
  std::string construct;
};

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqsql
