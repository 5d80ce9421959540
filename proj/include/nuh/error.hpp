#pragma once

#include <stdexcept>
#include <string>

namespace nuh {

enum class ErrorKind {
  InvalidInput,
  DegenerateMatrix,
  Construction,
  Unsupported,
  SearchFailure,
  CannotCertify,
  PreconditionsUnmet,
  Budget,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::DegenerateMatrix: return "degenerate-matrix";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Unsupported: return "unsupported-case";
    case ErrorKind::SearchFailure: return "search-failure";
    case ErrorKind::CannotCertify: return "cannot-certify";
    case ErrorKind::PreconditionsUnmet: return "preconditions-unmet";
    case ErrorKind::Budget: return "budget-exceeded";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` carries the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nuh
