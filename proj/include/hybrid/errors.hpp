#pragma once

#include <stdexcept>
#include <string>

namespace hybrid {

// Argument outside the mathematical domain of an operation (p outside (0,1), q > m, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A scenario or config value violates one of its type invariants.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// No integer design satisfies the constraints.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string constraint, const std::string& what)
      : std::runtime_error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, long line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)), line_(line) {}
  long line() const noexcept { return line_; }
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
  long line_;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hybrid
