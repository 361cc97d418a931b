#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evdec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (CLI exit code 3).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `offset()` is a byte offset for binary input and a
/// 1-based line number for text input.
class ParseError : public DomainError {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : DomainError(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerically undefined result, e.g. R² with zero target variance or a
/// singular normal-equation system (CLI exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong object state (backward without a
/// forward cache and similar).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace evdec
