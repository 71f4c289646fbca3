// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_ERROR_HPP
#define LEAFWOOD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leafwood {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `line()` is 1-based and counts the header row.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& detail)
      : Error(source + ":" + std::to_string(line) + ": " + detail), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid input missing a required column or field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A parameter or input violates a precondition. `field()` names the offender.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& detail)
      : Error(field + ": " + detail), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace leafwood

#endif  // LEAFWOOD_ERROR_HPP
