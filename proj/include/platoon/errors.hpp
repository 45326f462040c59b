#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

/// Input violates a structural contract (bad index, self-loop, bad gains...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An exhaustive search was asked for on a graph above its size limit.
class RefusedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observed data admits no explanation with the assumed fault budget.
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace platoon
