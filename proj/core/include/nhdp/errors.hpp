#pragma once

#include <stdexcept>
#include <string>

namespace nhdp {

// Exception classes map onto the CLI exit codes: ConfigError and IoError -> 2,
// CompatibilityError -> 3, NumericError -> 4.

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public IoError {
public:
  ParseError(const std::string& what, std::size_t line)
      : IoError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class CompatibilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace nhdp
