#pragma once

#include <stdexcept>
#include <string>

namespace gdial {

// Error categories. The numeric values double as process exit codes and as
// the status codes of the C API.
enum class Status : int {
  Ok = 0,
  IoError = 2,
  ContractError = 3,
  NumericError = 4,
  CompatError = 5,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  Status status() const noexcept { return status_; }

 private:
  Status status_;
};

// Shape disagreement between operands.
struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(Status::ContractError, m) {}
};

// Violated precondition or invariant.
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error(Status::ContractError, m) {}
};

// Bad configuration key or value.
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(Status::ContractError, m) {}
};

// Token id outside the vocabulary.
struct VocabularyError : Error {
  explicit VocabularyError(const std::string& m) : Error(Status::ContractError, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(Status::IoError, m) {}
};

// Malformed input file.
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(Status::IoError, m) {}
};

// Non-finite value produced by a numeric operation.
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(Status::NumericError, m) {}
};

// Checkpoint and corpus disagree on dimensions or catalogues.
struct CompatError : Error {
  explicit CompatError(const std::string& m) : Error(Status::CompatError, m) {}
};

}  // namespace gdial
