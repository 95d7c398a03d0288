#pragma once

#include <stdexcept>
#include <string>

namespace td3sched {

// Base of every error thrown by the library. category() is a short stable
// token used by the CLI for machine-parsable failure lines.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error("contract", what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error("parse", what + " (line " + std::to_string(line) + ")"), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace td3sched
