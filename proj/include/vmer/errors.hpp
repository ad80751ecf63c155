#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vmer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (JSON or LaTeX). `offset` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input that violates the interchange schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Binary container problems (IDX, PGM).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller passed arguments outside an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace vmer
