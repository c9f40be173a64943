#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace moscap {

enum class ErrorKind {
  invalid_input,
  unsupported_operation,
  regime,
  convergence,
  rank_deficiency,
  no_plateau,
  out_of_range,
  profile_undefined,
  not_found,
  parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::unsupported_operation: return "unsupported operation";
    case ErrorKind::regime: return "regime error";
    case ErrorKind::convergence: return "convergence error";
    case ErrorKind::rank_deficiency: return "rank deficiency";
    case ErrorKind::no_plateau: return "no plateau";
    case ErrorKind::out_of_range: return "out of range";
    case ErrorKind::profile_undefined: return "profile undefined";
    case ErrorKind::not_found: return "not found";
    case ErrorKind::parse: return "parse error";
  }
  return "error";
}

// Base for every failure raised by the toolkit. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Surface-potential bisection failed to bracket or converge.
class BracketError : public Error {
 public:
  BracketError(const std::string& what, double lo, double hi)
      : Error(ErrorKind::convergence, what), lo_(lo), hi_(hi) {}

  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// Parse failure with 1-based line and column. Column 0 means the whole line;
// line 0 means the whole document.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(ErrorKind::parse, format(what, line, column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            std::size_t column) {
    if (line == 0) return what;
    std::string s = "line " + std::to_string(line);
    if (column > 0) s += ", column " + std::to_string(column);
    return s + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

inline void require(bool condition, const std::string& what,
                    ErrorKind kind = ErrorKind::invalid_input) {
  if (!condition) throw Error(kind, what);
}

}  // namespace moscap
