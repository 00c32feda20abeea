#pragma once

#include "stelle/formula.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace stelle {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parse the concrete formula syntax:
///   atom := "x"INT (">="|"<=") FLOAT
///   expr := "True" | atom | "not" expr | expr "and" expr | expr "or" expr
///         | ("F"|"G")"["INT","INT"]" expr | expr "U["INT","INT"]" expr
/// Precedence, tightest first: unary, U, and, or. Binary operators associate left.
/// "?" in place of a threshold or "[?,?]" in place of an interval yields a template placeholder.
Formula parse(std::string_view text);

}  // namespace stelle
