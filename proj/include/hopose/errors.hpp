#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopose {

// Root of every error thrown by the library. Subclasses map one-to-one onto
// the CLI exit codes (see tools/hopose_cli.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grid dimensions or frame counts disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value violates a type invariant or a configuration constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Not enough usable samples for the requested estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class NoPoseFoundError : public Error {
 public:
  using Error::Error;
};

class DegenerateScaleError : public Error {
 public:
  using Error::Error;
};

class EmptyDomainError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class DisconnectedGraphError : public Error {
 public:
  DisconnectedGraphError(const std::string& what,
                         std::vector<std::vector<int>> components)
      : Error(what), components_(std::move(components)) {}

  const std::vector<std::vector<int>>& components() const {
    return components_;
  }

 private:
  std::vector<std::vector<int>> components_;
};

// Malformed file contents. `offset` is the byte offset for binary formats and
// the 1-based line number for text formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class TruncatedFileError : public ParseError {
 public:
  using ParseError::ParseError;
};

class BadMagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

// A decoded value breaks a format invariant (NaN in a valid entry, bad flag).
class InvalidValueError : public ParseError {
 public:
  using ParseError::ParseError;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hopose
